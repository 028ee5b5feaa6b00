"""Linearized response of the pumped amplifier (stiff-pump theory).

With the pump mode driven to a steady harmonic amplitude C0 at omega_P,
the signal/idler pair (A at omega_S, B at omega_I = omega_P - omega_S)
obeys a linear 2x2 system

    [M] (A, B*) = (gtilde'_a A_in, gtilde'_b B_in*)

whose scattering matrix [S] = 2 [M]^-1 [gtilde'] - [I] describes
phase-preserving amplification.  Rates are normalized per mode
(gtilde_j = gamma_j / omega_j at the operating bias) and the returned
S-matrix is photon-flux normalized so that |s11|^2 - |s12|^2 = 1 exactly
below threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .circuit import CircuitParams, coupling_table, curvatures, mode_frequencies


@dataclass(frozen=True)
class PumpPoint:
    """A stiff-pump operating point.

    Attributes
    ----------
    omega_p : float
        Pump frequency, rad/s.
    amp_pump : float
        Real input amplitude of the pump drive (phi0 units; the pump
        line carries 2*amp_pump*cos(omega_p t)).
    c0 : complex
        Resulting pump-mode harmonic amplitude, phi_c = C0 e^{-i w t} + cc.
    """

    omega_p: float
    amp_pump: float
    c0: complex


@dataclass(frozen=True)
class SMatrix:
    s11: complex
    s12: complex
    s21: complex
    s22: complex
    g_tilde_a: float
    g_tilde_b: float


def pump_response(omega_p: float, amp_pump: float, params: CircuitParams) -> PumpPoint:
    """Harmonic pump-mode amplitude driven through the pump port.

    Linear response of the c mode: C0 = -i sqrt(2) gamma_c omega_p amp
    / (omega_c^2 - omega_p^2 - i gamma_c omega_p).  On resonance this
    gives |C0| = sqrt(2) * amp_pump with zero phase.
    """
    _, _, om_c = mode_frequencies(params)
    gc = params.gamma_c
    c0 = (
        -1j
        * math.sqrt(2.0)
        * gc
        * omega_p
        * amp_pump
        / (om_c**2 - omega_p**2 - 1j * gc * omega_p)
    )
    return PumpPoint(omega_p=omega_p, amp_pump=amp_pump, c0=c0)


def _normalized_couplings(params: CircuitParams) -> tuple[float, float, float]:
    """Per-mode three-wave couplings g_a, g_b, g_c (g/(2 e_jj), g/e_cc)."""
    g = coupling_table(params).g
    e_aa, e_bb, e_cc = curvatures(params)
    return g / (2.0 * e_aa), g / (2.0 * e_bb), g / e_cc


def scattering_matrix(
    omega_s: float, pump: PumpPoint, params: CircuitParams
) -> SMatrix:
    """Signal/idler scattering matrix at the given pump point.

    Raises
    ------
    ValueError
        If the linear system is singular (pump at the parametric
        threshold): the linearized gain diverges there.
    """
    om_a, om_b, _ = mode_frequencies(params)
    omega_i = pump.omega_p - omega_s
    gt_a = params.gamma_a / om_a
    gt_b = params.gamma_b / om_b
    g_a, g_b, _ = _normalized_couplings(params)
    c0 = pump.c0

    m_aa = gt_a * (omega_s / om_a) + 1j * (om_a**2 - omega_s**2) / om_a**2
    m_bb = gt_b * (omega_i / om_b) - 1j * (om_b**2 - omega_i**2) / om_b**2
    m_ab = -2j * g_a * c0
    m_ba = 2j * g_b * c0.conjugate()

    det = m_aa * m_bb - m_ab * m_ba
    if abs(det) < 1e-12 * abs(m_aa * m_bb + m_ab * m_ba):
        raise ValueError(
            "scattering matrix singular: pump drive sits at the "
            "parametric threshold"
        )
    gp_a = gt_a * omega_s / om_a
    gp_b = gt_b * omega_i / om_b
    # rows of 2 M^-1 diag(gp) - I
    inv_aa, inv_ab = m_bb / det, -m_ab / det
    inv_ba, inv_bb = -m_ba / det, m_aa / det
    s11 = 2.0 * inv_aa * gp_a - 1.0
    s12 = 2.0 * inv_ab * gp_b
    s21 = 2.0 * inv_ba * gp_a
    s22 = 2.0 * inv_bb * gp_b - 1.0
    # photon-flux normalization across the frequency-converting channel
    r_ab = math.sqrt(gp_a / gp_b)
    return SMatrix(
        s11=s11,
        s12=s12 * r_ab,
        s21=s21 / r_ab,
        s22=s22,
        g_tilde_a=gt_a,
        g_tilde_b=gt_b,
    )


def _c0_per_amp(params: CircuitParams, omega_p: float) -> float:
    """|C0| produced per unit pump amplitude at omega_p."""
    _, _, om_c = mode_frequencies(params)
    gc = params.gamma_c
    return abs(
        math.sqrt(2.0) * gc * omega_p
        / (om_c**2 - omega_p**2 - 1j * gc * omega_p)
    )


def pump_threshold(params: CircuitParams) -> float:
    """Pump amplitude at the parametric threshold (resonant drive)."""
    om_a, om_b, _ = mode_frequencies(params)
    gt_a = params.gamma_a / om_a
    gt_b = params.gamma_b / om_b
    g_a, g_b, _ = _normalized_couplings(params)
    c0_mag = math.sqrt(gt_a * gt_b / (4.0 * g_a * g_b))
    omega_p = om_a + om_b
    return c0_mag / _c0_per_amp(params, omega_p)


def pump_for_gain(params: CircuitParams, g0_target: float) -> PumpPoint:
    """Resonant pump point reaching a target small-signal power gain.

    Parameters
    ----------
    g0_target : float
        Target power gain (linear, not dB) of the reflected signal,
        |S11|^2.  Must be >= 1; exactly 1 returns zero pump.

    Notes
    -----
    On resonance |S11| = (1 + x)/(1 - x) with
    x = 4 g_a g_b |C0|^2 / (gtilde_a gtilde_b), so a 20 dB target
    (|S11| = 10) sits at x = 9/11.
    """
    if g0_target < 1.0:
        raise ValueError("target gain must be >= 1 (amplification)")
    om_a, om_b, _ = mode_frequencies(params)
    omega_p = om_a + om_b
    if g0_target == 1.0:
        return pump_response(omega_p, 0.0, params)
    s_mag = math.sqrt(g0_target)
    x = (s_mag - 1.0) / (s_mag + 1.0)
    gt_a = params.gamma_a / om_a
    gt_b = params.gamma_b / om_b
    g_a, g_b, _ = _normalized_couplings(params)
    c0_mag = math.sqrt(x * gt_a * gt_b / (4.0 * g_a * g_b))
    return pump_response(omega_p, c0_mag / _c0_per_amp(params, omega_p), params)
