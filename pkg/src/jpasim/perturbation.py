"""Signal-series perturbation theory for the pumped amplifier.

Expands the driven mode fluxes in powers of the signal input around the
linear-response solution and solves each order with the same 2x2 linear
operator [M] that fixes the scattering matrix.  Two families of models
are covered:

* ``SoP`` (soft pump): the pump mode responds at the sum and difference
  sidebands of signal and idler; the response factors f_sigma / f_delta
  generate an effective signal-idler Kerr coupling and a two-photon
  dissipation channel.
* ``StP`` (stiff pump): the pump-mode flux is frozen at its
  linear-response harmonic, and saturation is driven by the quintic
  (h_a, h_b) and septic (l_aa) terms of the ring energy.

All corrections are evaluated on resonance at the flux bias of the
supplied parameters; the pump amplitude is calibrated to the requested
small-signal power gain G0.  Fluxes are expressed in phi0 units; the
"input flux" below is the incident-wave amplitude 2*amp_signal (the
drive port carries 2*amp_signal*cos(omega_s t)).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _sciopt

from .circuit import CircuitParams, coupling_table, curvatures, mode_frequencies
from .linear_response import pump_for_gain

MODELS = ("SoP3-o3", "SoP3-o5", "StP5-o3", "StP5-o5", "StP7")

# scan ceiling for the exact saturation search: input fluxes beyond this
# are far outside the series' radius of convergence
_FLUX_CEILING = 32.0


@dataclass(frozen=True)
class ResponseFactors:
    """Dimensionless pump-mode response at the signal-idler sidebands.

    f_sigma is evaluated at the sum frequency Sigma = omega_s + omega_i,
    f_delta at the difference Delta = omega_s - omega_i.
    """

    f_sigma: complex
    f_delta: complex
    sigma: float
    delta: float


@dataclass(frozen=True)
class GeneratedCouplings:
    """Effective quartic couplings generated by pump-mode sidebands.

    k_eff acts as a signal-idler cross-Kerr; q_eff (from the dissipative
    part of the sum-frequency response) has no Kerr equivalent and sets
    the leading gain compression of the soft-pump model.
    """

    k_eff: complex
    q_eff: float


@dataclass(frozen=True)
class PerturbationResult:
    phi1: complex
    phi3: complex
    phi5: complex
    model: str
    saturation_flux: float
    criterion_db: float


def response_factors(
    params: CircuitParams, omega_s: float, omega_i: float
) -> ResponseFactors:
    """Pump-mode response factors at the sum/difference sidebands."""
    _, _, om_c = mode_frequencies(params)
    sigma = omega_s + omega_i
    delta = omega_s - omega_i
    f_sigma = om_c**2 / (om_c**2 - sigma**2 - 1j * params.gamma_c * sigma)
    f_delta = om_c**2 / (om_c**2 - delta**2 - 1j * params.gamma_c * delta)
    return ResponseFactors(complex(f_sigma), complex(f_delta), sigma, delta)


def generated_kerr(params: CircuitParams) -> GeneratedCouplings:
    """Effective Kerr and two-photon-loss couplings at resonance.

    The soft-pump sidebands acting back on signal and idler mimic a
    cross-Kerr of strength k_eff = g^2 (f_delta + Re f_sigma)/4 plus a
    non-Kerr dissipative coupling q_eff = g^2 Im(f_sigma)/4.
    """
    om_a, om_b, _ = mode_frequencies(params)
    rf = response_factors(params, om_a, om_b)
    g = coupling_table(params, "analytic").g
    k_eff = 0.25 * g * g * (rf.f_delta + rf.f_sigma.real)
    q_eff = 0.25 * g * g * rf.f_sigma.imag
    return GeneratedCouplings(complex(k_eff), float(q_eff))


class _OperatingPoint:
    """On-resonance linear operator and normalized couplings at gain G0."""

    __slots__ = (
        "m", "minv", "gt_a", "gt_b", "g_a", "g_b", "g_c",
        "h_a", "h_b", "l_aa", "inv_e_aa", "inv_e_bb", "c0", "g", "rf",
    )

    def __init__(self, params: CircuitParams, g0: float):
        om_a, om_b, _ = mode_frequencies(params)
        e_aa, e_bb, e_cc = curvatures(params)
        ct = coupling_table(params, "analytic")
        pt = pump_for_gain(params, g0)
        self.gt_a = params.gamma_a / om_a
        self.gt_b = params.gamma_b / om_b
        self.g = ct.g
        self.g_a = ct.g / (2.0 * e_aa)
        self.g_b = ct.g / (2.0 * e_bb)
        self.g_c = ct.g / e_cc
        self.h_a = ct.h_a
        self.h_b = ct.h_b
        self.l_aa = ct.l_aa
        self.inv_e_aa = 1.0 / e_aa
        self.inv_e_bb = 1.0 / e_bb
        self.c0 = pt.c0
        self.rf = response_factors(params, om_a, om_b)
        self.m = np.array(
            [
                [self.gt_a, -2j * self.g_a * self.c0],
                [2j * self.g_b * np.conj(self.c0), self.gt_b],
            ]
        )
        self.minv = np.linalg.inv(self.m)

    def linear(self, a_in: float) -> tuple[complex, complex]:
        """First-order (signal, idler) exponential amplitudes.

        a_in is the incident peak flux 2*amp_signal; the returned
        amplitudes multiply exp(-i omega t), i.e. half the peak value.
        Products of harmonics must be formed in this convention; the
        public phi values are twice these (peak convention).
        """
        a1, b1s = self.gt_a * a_in * self.minv[:, 0]
        return complex(a1), complex(np.conj(b1s))


def _sop_corrections(op: _OperatingPoint, a_in: float):
    """Third- and fifth-order soft-pump corrections (A3, B3, A5)."""
    a1, b1 = op.linear(a_in)
    f_s, f_d = op.rf.f_sigma, op.rf.f_delta
    # second-order pump sidebands at Sigma and Delta
    c2s = op.g_c * f_s * a1 * b1
    c2d = op.g_c * f_d * a1 * np.conj(b1)
    rhs3 = np.array(
        [
            2j * op.g_a * (np.conj(b1) * c2s + b1 * c2d),
            -2j * op.g_b * (a1 * np.conj(c2s) + np.conj(a1) * c2d),
        ]
    )
    a3, b3s = op.minv @ rhs3
    b3 = np.conj(b3s)
    # fourth-order sidebands, then the fifth-order drive
    c4s = op.g_c * f_s * (a1 * b3 + a3 * b1)
    c4d = op.g_c * f_d * (a1 * np.conj(b3) + a3 * np.conj(b1))
    rhs5 = np.array(
        [
            2j * op.g_a * (b3 * c2d + np.conj(b3) * c2s + b1 * c4d + np.conj(b1) * c4s),
            -2j * op.g_b * (
                a3 * np.conj(c2s)
                + np.conj(a3) * c2d
                + a1 * np.conj(c4s)
                + np.conj(a1) * c4d
            ),
        ]
    )
    a5, _ = op.minv @ rhs5
    return complex(a1), complex(a3), complex(b3), complex(a5)


def _stp_corrections(op: _OperatingPoint, a_in: float, include_septic: bool):
    """Third- and fifth-order stiff-pump corrections (A3, B3, A5)."""
    a1, b1 = op.linear(a_in)
    c0 = op.c0
    c0c = np.conj(c0)
    a1c, b1c = np.conj(a1), np.conj(b1)
    d_a = 3.0 * op.h_a * (2.0 * abs(a1) ** 2 * b1c * c0 + a1 * a1 * b1 * c0c)
    d_a += 3.0 * op.h_b * abs(b1) ** 2 * b1c * c0
    d_b = 3.0 * op.h_b * (2.0 * abs(b1) ** 2 * a1c * c0 + b1 * b1 * a1 * c0c)
    d_b += 3.0 * op.h_a * abs(a1) ** 2 * a1c * c0
    rhs3 = np.array(
        [-1j * op.inv_e_aa * d_a, 1j * op.inv_e_bb * np.conj(d_b)]
    )
    a3, b3s = op.minv @ rhs3
    b3 = np.conj(b3s)
    a3c, b3c = np.conj(a3), np.conj(b3)
    d_a5 = 3.0 * op.h_a * (
        2.0 * abs(a1) ** 2 * b3c * c0
        + a1 * a1 * b3 * c0c
        + 2.0 * (a1 * a3c + a1c * a3) * b1c * c0
        + 2.0 * a1 * a3 * b1 * c0c
    )
    d_a5 += 3.0 * op.h_b * (2.0 * abs(b1) ** 2 * b3c + b1c * b1c * b3) * c0
    d_b5 = 3.0 * op.h_b * (
        2.0 * abs(b1) ** 2 * a3c * c0
        + b1 * b1 * a3 * c0c
        + 2.0 * (b1 * b3c + b1c * b3) * a1c * c0
        + 2.0 * b1 * b3 * a1 * c0c
    )
    d_b5 += 3.0 * op.h_a * (2.0 * abs(a1) ** 2 * a3c + a1c * a1c * a3) * c0
    rhs5 = np.array(
        [-1j * op.inv_e_aa * d_a5, 1j * op.inv_e_bb * np.conj(d_b5)]
    )
    if include_septic:
        # septic ring term -l_aa a^5 b c enters at fifth order
        rhs5 = rhs5 + np.array(
            [
                5j * op.inv_e_aa * op.l_aa * (
                    6.0 * abs(a1) ** 4 * b1c * c0
                    + 4.0 * abs(a1) ** 2 * a1 * a1 * b1 * c0c
                ),
                -10j * op.inv_e_bb * op.l_aa * abs(a1) ** 4 * a1 * c0c,
            ]
        )
    a5, _ = op.minv @ rhs5
    return complex(a1), complex(a3), complex(b3), complex(a5)


def sop3_corrections(
    amp_signal: float, params: CircuitParams, g0: float
) -> PerturbationResult:
    """Soft-pump corrections to the signal harmonic at gain G0.

    Returns the first-, third- and fifth-order signal amplitudes for an
    incident drive 2*amp_signal*cos(omega_s t).  A warning is issued
    when the series stops converging (|phi5| > |phi3|).
    """
    op = _OperatingPoint(params, g0)
    a_in = 2.0 * amp_signal
    a1, a3, _, a5 = _sop_corrections(op, a_in)
    if abs(a5) > abs(a3) > 0.0:
        warnings.warn(
            "perturbation series not converging: |phi5| > |phi3|",
            RuntimeWarning,
            stacklevel=2,
        )
    return PerturbationResult(
        2.0 * a1, 2.0 * a3, 2.0 * a5, "SoP3", math.nan, math.nan
    )


def stp5_third_order(
    amp_signal: float, params: CircuitParams, g0: float = 100.0
) -> complex:
    """Third-order stiff-pump correction from the quintic ring terms."""
    op = _OperatingPoint(params, g0)
    _, a3, _, _ = _stp_corrections(op, 2.0 * amp_signal, include_septic=False)
    return 2.0 * a3


def stp7_fifth_order(
    amp_signal: float, params: CircuitParams, g0: float = 100.0
) -> complex:
    """Fifth-order correction due to the septic ring term alone."""
    op = _OperatingPoint(params, g0)
    a1, b1 = op.linear(2.0 * amp_signal)
    a1c = np.conj(a1)
    c0, c0c = op.c0, np.conj(op.c0)
    rhs = np.array(
        [
            5j * op.inv_e_aa * op.l_aa * (
                6.0 * abs(a1) ** 4 * np.conj(b1) * c0
                + 4.0 * abs(a1) ** 2 * a1 * a1 * b1 * c0c
            ),
            -10j * op.inv_e_bb * op.l_aa * abs(a1) ** 4 * a1 * c0c,
        ]
    )
    a5, _ = op.minv @ rhs
    return complex(2.0 * a5)


def _model_corrections(model: str, op: _OperatingPoint, a_in: float):
    """(phi1, phi3, phi5) peak amplitudes for the model at input flux a_in.

    Orders beyond the model's reach are returned as 0j so that the
    criterion solve includes exactly the printed terms.
    """
    if model == "SoP3-o3":
        a1, a3, _, _ = _sop_corrections(op, a_in)
        return 2.0 * a1, 2.0 * a3, 0j
    if model == "SoP3-o5":
        a1, a3, _, a5 = _sop_corrections(op, a_in)
        return 2.0 * a1, 2.0 * a3, 2.0 * a5
    if model == "StP5-o3":
        a1, a3, _, _ = _stp_corrections(op, a_in, include_septic=False)
        return 2.0 * a1, 2.0 * a3, 0j
    if model == "StP5-o5":
        a1, a3, _, a5 = _stp_corrections(op, a_in, include_septic=False)
        return 2.0 * a1, 2.0 * a3, 2.0 * a5
    if model == "StP7":
        a1, a3, _, a5 = _stp_corrections(op, a_in, include_septic=True)
        return 2.0 * a1, 2.0 * a3, 2.0 * a5
    raise ValueError(f"unknown perturbation model {model!r}")


def _criterion_epsilon(criterion_db: float) -> float:
    """|amplitude-ratio deviation| for a gain change of criterion_db."""
    return abs(10.0 ** (-criterion_db / 20.0) - 1.0)


def _closed_form_flux(
    model: str, params: CircuitParams, g0: float, criterion_db: float
) -> float:
    eps = _criterion_epsilon(criterion_db)
    op = _OperatingPoint(params, g0)
    g2 = op.g_a * op.g_b
    if model == "SoP3-o3":
        im_fs = op.rf.f_sigma.imag
        return g0 ** (-0.75) * math.sqrt(eps * op.gt_b / (g2 * im_fs))
    if model == "SoP3-o5":
        re_sum = abs((op.rf.f_sigma + op.rf.f_delta).real)
        return (
            g0 ** (-0.625)
            * math.sqrt(op.gt_b / g2)
            * (eps / (2.0 * re_sum)) ** 0.25
        )
    if model == "StP5-o3":
        ratio = op.g / (4.0 * op.h_a)
        return math.sqrt(eps * ratio * (1.0 + op.gt_a / op.gt_b)) * g0 ** (-0.75)
    if model == "StP7":
        return (eps * op.g / (10.0 * op.l_aa)) ** 0.25 * g0 ** (-0.625)
    if model == "StP5-o5":
        raise ValueError("StP5-o5 has no closed-form flux; use route='exact'")
    raise ValueError(f"unknown perturbation model {model!r}")


def _delta_gain_db(model: str, op: _OperatingPoint, a_in: float) -> float:
    """Gain deviation (dB) of the corrected reflection vs. linear response."""
    a1, a3, a5 = _model_corrections(model, op, a_in)
    lin = abs(a1 - a_in)
    tot = abs(a1 + a3 + a5 - a_in)
    return 20.0 * math.log10(tot / lin)


def saturation_point(
    model: str,
    params: CircuitParams,
    g0: float,
    criterion_db: float = 1.0,
) -> PerturbationResult:
    """Exact-route saturation: first input flux crossing the criterion.

    Scans the input flux upward and locates the first point where the
    corrected gain deviates from the small-signal gain by criterion_db
    in either direction (compression or boost), then polishes the root
    with a bracketed solve.  A warning flags results past the series'
    radius of convergence (|phi5| >= |phi3| at the crossing).
    """
    if model not in MODELS:
        raise ValueError(f"unknown perturbation model {model!r}")
    if g0 <= 1.0:
        raise ValueError("g0 must exceed unity")
    op = _OperatingPoint(params, g0)

    def excess(a_in: float) -> float:
        return abs(_delta_gain_db(model, op, a_in)) - criterion_db

    # seed the scan well below any closed-form estimate of the crossing
    try:
        seed_model = "StP5-o3" if model == "StP5-o5" else model
        seed = _closed_form_flux(seed_model, params, g0, criterion_db)
        lo = 0.02 * seed
    except (ValueError, ZeroDivisionError):
        lo = 1e-4
    while excess(lo) >= 0.0:
        lo *= 0.25
        if lo < 1e-12:
            raise RuntimeError("criterion exceeded even at vanishing drive")
    hi = lo
    while True:
        hi *= 1.15
        if hi > _FLUX_CEILING:
            raise RuntimeError(
                f"no {criterion_db} dB crossing found below flux {_FLUX_CEILING}"
            )
        if excess(hi) >= 0.0:
            break
        lo = hi
    flux = float(_sciopt.brentq(excess, lo, hi, xtol=1e-14, rtol=1e-12))
    a1, a3, a5 = _model_corrections(model, op, flux)
    if abs(a5) >= abs(a3) > 0.0:
        warnings.warn(
            f"{model} crossing lies beyond the series' radius of convergence",
            RuntimeWarning,
            stacklevel=2,
        )
    return PerturbationResult(a1, a3, a5, model, flux, criterion_db)


def saturation_flux_perturbative(
    model: str,
    params: CircuitParams,
    g0: float,
    criterion_db: float = 1.0,
    route: str = "closed",
) -> float:
    """Saturation input flux (phi0 units) for the requested model.

    route="closed" evaluates the printed high-gain formulas; for zeta=0
    the coupling ratios reduce to the bare constants (g/h_a = 24,
    g/l_aa = 1920).  route="exact" solves the gain criterion with the
    order-by-order corrections and no high-gain assumption.
    """
    if model not in MODELS:
        raise ValueError(f"unknown perturbation model {model!r}")
    if route == "closed":
        return _closed_form_flux(model, params, g0, criterion_db)
    if route == "exact":
        return saturation_point(model, params, g0, criterion_db).saturation_flux
    raise ValueError(f"unknown route {route!r}")
