"""Driven time-domain dynamics of the three JRM modes.

The mode equations of motion are integrated to steady state under a
two-tone drive (signal on a, pump on c, optional idler on b).  The
nonlinearity can be the full ring energy or its Taylor truncation at a
chosen order, and the pump either rides as a dynamical mode ("soft",
with a sin^2 turn-on ramp) or is prescribed as a fixed harmonic
trajectory ("stiff").

Steady state is detected on successive analysis windows: each window is
an integer number of signal periods, the sampled trajectory is fitted
by least squares against the drive frequency comb
{m*omega_S + n*omega_I : |m|+|n| <= 3} plus DC, and the run stops once
the magnitude of the signal harmonic moves by less than a relative
tolerance between windows.

Harmonic amplitudes use the peak convention: a fitted component
A*cos(w t) + B*sin(w t) is reported as the complex number A + iB, i.e.
x(t) = Re[(A+iB) e^{-i w t}].  A drive of amplitude `amp` enters the
mode flux as 2*amp*cos(w t), so the reflected wave at the signal port
is phi_a_h - 2*amp_signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _integrator as _ig
from ._series import tri_grad, tri_truncate
from .circuit import PHI0, CircuitParams, curvatures, force_gains, _series_data
from .linear_response import pump_response

# integrator tolerances (pinned; see also property tests)
RTOL = 1e-9
ATOL = 1e-12

SAMPLES_PER_PERIOD = 16
MIN_WINDOW_PERIODS = 64
RAMP_PUMP_PERIODS = 20.0
STEADY_RTOL = 1e-4
MIN_WINDOWS = 10
# hard cap on the settling time, in units of 4000/f_a
MAX_TAU0 = 10.0


@dataclass(frozen=True)
class ModelSpec:
    """Choice of nonlinearity truncation and pump treatment.

    Attributes
    ----------
    truncation : int or "full"
        Keep energy terms through this total degree (3..8), or "full"
        for the untruncated ring energy.
    pump : {"stiff", "soft"}
        "stiff" prescribes the pump-mode flux as the linear-response
        harmonic; "soft" integrates the pump mode with a ramped drive.
    extra_kerr_ab : float
        Additional cross-Kerr injected into the energy as
        -extra_kerr_ab * phi_a^2 phi_b^2 (study knob; survives any
        truncation).
    """

    truncation: int | str = "full"
    pump: str = "soft"
    extra_kerr_ab: float = 0.0


@dataclass(frozen=True)
class DriveConfig:
    """Two-tone drive: signal at omega_s, pump at omega_p (rad/s).

    Amplitudes are peak incident-wave amplitudes in phi0 units: the
    signal port carries 2*amp_signal*cos(omega_s t).  The idler port
    drive (amp_idler, at omega_p - omega_s) defaults to off.
    """

    omega_s: float
    omega_p: float
    amp_signal: float
    amp_pump: float
    amp_idler: float = 0.0


@dataclass(frozen=True)
class SteadyStateResult:
    phi_a_h: complex
    phi_b_h: complex
    phi_c_h: complex
    gain_db: float
    converged: bool
    windows_used: int
    residual: float


class _Compiled:
    __slots__ = ("kind", "exps", "coefs", "split")

    def __init__(self, kind, exps, coefs, split):
        self.kind = kind
        self.exps = exps
        self.coefs = coefs
        self.split = split


_EMPTY_EXPS = np.zeros((0, 3), dtype=np.int64)
_EMPTY_COEFS = np.zeros(0, dtype=np.float64)
_EMPTY_SPLIT = np.zeros(2, dtype=np.int64)


@lru_cache(maxsize=256)
def _compile_model(params: CircuitParams, truncation, extra_kerr: float) -> _Compiled:
    """Pick the gradient kernel and build polynomial tables if needed."""
    if truncation == "full":
        if params.zeta > 0.0:
            kind = _ig.GRAD_INNER
        elif params.alpha > 0.0:
            if params.alpha >= 1.0:
                raise ValueError(
                    "full dynamics require alpha < 1 (monotone arm relation)"
                )
            kind = _ig.GRAD_ARM
        else:
            kind = _ig.GRAD_TRIG0
        if params.alpha >= 1.0 and params.zeta > 0.0:
            raise ValueError("full dynamics require alpha < 1")
        return _Compiled(kind, _EMPTY_EXPS, _EMPTY_COEFS, _EMPTY_SPLIT)

    n = int(truncation)
    if not 3 <= n <= 8:
        raise ValueError(f"truncation order must be in 3..8 or 'full', got {n}")
    energy = tri_truncate(_series_data(params)["energy"], n).copy()
    # injected cross-Kerr: energy -= extra_kerr * a^2 b^2 (kept at any n)
    energy[2, 2, 0] -= extra_kerr
    rows = []
    coefs = []
    split = np.zeros(2, dtype=np.int64)
    for axis in range(3):
        g = tri_grad(energy, axis)
        ii, jj, kk = np.nonzero(g)
        for i, j, k in zip(ii, jj, kk):
            rows.append((i, j, k))
            coefs.append(g[i, j, k])
        if axis == 0:
            split[0] = len(rows)
        elif axis == 1:
            split[1] = len(rows)
    exps = np.array(rows, dtype=np.int64).reshape(len(rows), 3)
    return _Compiled(
        _ig.GRAD_POLY, exps, np.array(coefs, dtype=np.float64), split
    )


def _pump_mode_code(model: ModelSpec) -> int:
    if model.pump == "soft":
        return _ig.PUMP_SOFT
    if model.pump == "stiff":
        return _ig.PUMP_STIFF
    raise ValueError(f"unknown pump treatment: {model.pump!r}")


def _pack_args(drive: DriveConfig, params: CircuitParams, model: ModelSpec):
    """Scalar/array arguments shared by rhs() and the integrator."""
    cm = _compile_model(params, model.truncation, model.extra_kerr_ab)
    pump_mode = _pump_mode_code(model)
    k_a, k_b, k_c = force_gains(params)
    if pump_mode == _ig.PUMP_STIFF:
        c0 = pump_response(drive.omega_p, drive.amp_pump, params).c0
        amp_p_re, amp_p_im = c0.real, c0.imag
        ramp_t = 0.0
    else:
        amp_p_re, amp_p_im = drive.amp_pump, 0.0
        ramp_t = RAMP_PUMP_PERIODS * 2.0 * math.pi / drive.omega_p
    extra = 0.0 if cm.kind == _ig.GRAD_POLY else model.extra_kerr_ab
    scalars = (
        cm.kind,
        pump_mode,
        params.x,
        params.beta,
        params.alpha,
        params.zeta,
        extra,
        k_a,
        k_b,
        k_c,
        params.gamma_a,
        params.gamma_b,
        params.gamma_c,
        drive.omega_s,
        drive.omega_p,
        drive.amp_signal,
        drive.amp_idler,
        amp_p_re,
        amp_p_im,
        ramp_t,
    )
    return scalars, cm


def state_dim(model: ModelSpec) -> int:
    """6 for a soft pump (c integrated), 4 for a stiff pump."""
    return 6 if model.pump == "soft" else 4


def rhs(t, y, drive: DriveConfig, params: CircuitParams, model: ModelSpec):
    """Time derivative of the mode state vector.

    State layout [phi_a, phid_a, phi_b, phid_b(, phi_c, phid_c)]; the
    pump-mode pair is present only for the soft pump.  Usable directly
    with scipy integrators.
    """
    scalars, cm = _pack_args(drive, params, model)
    y = np.asarray(y, dtype=np.float64)
    dy = np.empty_like(y)
    warm = np.zeros(5)
    grad = np.empty(3)
    status = _ig._rhs(
        float(t), y, dy, *scalars, cm.exps, cm.coefs, cm.split, warm, grad
    )
    if status != _ig.STATUS_OK:
        raise RuntimeError("inner-node solve failed during rhs evaluation")
    return dy


def comb_frequencies(omega_s: float, omega_i: float, max_order: int = 3):
    """Positive drive-comb frequencies m*omega_s + n*omega_i, deduplicated."""
    freqs = []
    for m in range(-max_order, max_order + 1):
        for n in range(-max_order, max_order + 1):
            if abs(m) + abs(n) > max_order or (m == 0 and n == 0):
                continue
            w = m * omega_s + n * omega_i
            if w <= 0.0:
                continue
            if all(abs(w - f) > 1e-9 * omega_s for f in freqs):
                freqs.append(w)
    return np.array(sorted(freqs))


def _lsq_harmonics(times, xs, freqs):
    """Least-squares cos/sin fit; returns complex peak amplitudes A+iB."""
    cols = [np.ones_like(times)]
    for w in freqs:
        cols.append(np.cos(w * times))
        cols.append(np.sin(w * times))
    design = np.column_stack(cols)
    sol, *_ = np.linalg.lstsq(design, xs, rcond=None)
    amps = sol[1::2] + 1j * sol[2::2]
    return sol[0], amps


def extract_harmonic(times, values, omega: float) -> complex:
    """Single-frequency projection (2/T) * integral x(t) e^{i w t} dt.

    Peak convention: extract_harmonic of cos(w t) is 1.  Assumes the
    samples span an integer number of periods of omega.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    span = times[-1] - times[0]
    integrand = values * np.exp(1j * omega * times)
    return 2.0 * np.trapezoid(integrand, times) / span


def reflection_gain(phi_a_h: complex, amp_signal: float) -> float:
    """Reflected-signal power gain in dB.

    The signal-mode flux carries incident + reflected waves; with the
    incident contribution 2*amp*cos(w t), the reflected amplitude is
    phi_a_h - 2*amp_signal.
    """
    if amp_signal <= 0.0:
        raise ValueError("amp_signal must be positive")
    refl = abs(phi_a_h - 2.0 * amp_signal)
    if refl == 0.0:
        return -math.inf
    return 20.0 * math.log10(refl / (2.0 * amp_signal))


def signal_power_watts(amp_signal: float, params: CircuitParams) -> float:
    """Incident signal power (W) carried by a drive of given amplitude.

    P = (1/2) C_a phi0^2 gamma_a omega_a^2 |phi_in|^2 with the physical,
    sizing-fixed capacitance C_a, the operating-point frequency and the
    rms incident flux |phi_in| = sqrt(2)*amp_signal (the incident wave is
    2*amp_signal*cos(w t)).  In reduced units this collapses to
    2 phi0^2 gamma_a e_aa amp^2 / L_in with e_aa the a-mode curvature at
    the operating bias (1/2 at the nulling point with zeta = 0).
    """
    l_in = PHI0 / params.i_c / params.beta
    e_aa, _, _ = curvatures(params)
    return 2.0 * PHI0**2 * params.gamma_a * e_aa * amp_signal**2 / l_in


def signal_power_dbm(amp_signal: float, params: CircuitParams) -> float:
    return 10.0 * math.log10(signal_power_watts(amp_signal, params) / 1e-3)


def amp_for_power_dbm(power_dbm: float, params: CircuitParams) -> float:
    """Drive amplitude (phi0 units) delivering the given incident power."""
    p_w = 1e-3 * 10.0 ** (power_dbm / 10.0)
    l_in = PHI0 / params.i_c / params.beta
    e_aa, _, _ = curvatures(params)
    return math.sqrt(0.5 * l_in * p_w / (PHI0**2 * params.gamma_a * e_aa))


def integrate_trajectory(
    drive: DriveConfig,
    params: CircuitParams,
    model: ModelSpec,
    t_final: float,
    n_samples: int,
    y0=None,
    rtol: float = RTOL,
    atol: float = ATOL,
):
    """Integrate from t=0, returning (times, states, status).

    `states` has shape (n_samples, dim) sampled at evenly spaced times
    t_final*(k+1)/n_samples.  Utility entry point for trajectory dumps
    and convergence studies; no steady-state logic.
    """
    scalars, cm = _pack_args(drive, params, model)
    dim = state_dim(model)
    y = np.zeros(dim) if y0 is None else np.asarray(y0, dtype=np.float64).copy()
    if y.shape[0] != dim:
        raise ValueError(f"state must have length {dim} for this model")
    samples = np.empty((n_samples, dim))
    warm = np.zeros(5)
    dt = t_final / n_samples
    status, _ = _ig.integrate_sampled(
        y, 0.0, dt, n_samples, samples, *scalars,
        cm.exps, cm.coefs, cm.split, warm, rtol, atol, 0.0,
    )
    times = dt * np.arange(1, n_samples + 1)
    return times, samples, int(status)


def integrate_to_steady_state(
    drive: DriveConfig,
    params: CircuitParams,
    model: ModelSpec,
    window_periods: int | None = None,
    steady_rtol: float = STEADY_RTOL,
    min_windows: int = MIN_WINDOWS,
) -> SteadyStateResult:
    """Drive the model from rest until the signal harmonic settles.

    Runs successive analysis windows (integer signal periods, at least
    64 and at least 1.5 decay times long) and stops when the signal
    harmonic magnitude changes by less than `steady_rtol` between
    windows, with at least `min_windows` windows elapsed.  Gives up at
    a hard settling-time cap of 10 * 4000/f_a and reports
    converged=False with the last estimate.

    A diverging trajectory (or a failed inner-node solve) reports
    converged=False with infinite gain: past-threshold runaway and
    constraint folds both mean "no usable steady state here".
    """
    scalars, cm = _pack_args(drive, params, model)
    dim = state_dim(model)
    omega_i = drive.omega_p - drive.omega_s
    if omega_i <= 0.0:
        raise ValueError("pump frequency must exceed the signal frequency")

    t_s = 2.0 * math.pi / drive.omega_s
    gamma_min = min(params.gamma_a, params.gamma_b, params.gamma_c)
    if window_periods is None:
        window_periods = max(
            MIN_WINDOW_PERIODS, int(math.ceil(1.5 / gamma_min / t_s))
        )
    n_samples = SAMPLES_PER_PERIOD * window_periods
    dt = t_s / SAMPLES_PER_PERIOD
    window_time = n_samples * dt
    cap_time = MAX_TAU0 * 4000.0 / params.f_a
    max_windows = max(min_windows, int(math.ceil(cap_time / window_time)))

    freqs = comb_frequencies(drive.omega_s, omega_i)
    i_sig = int(np.argmin(np.abs(freqs - drive.omega_s)))
    i_idl = int(np.argmin(np.abs(freqs - omega_i)))
    i_pmp = int(np.argmin(np.abs(freqs - drive.omega_p)))

    y = np.zeros(dim)
    warm = np.zeros(5)
    samples = np.empty((n_samples, dim))
    h_last = 0.0
    prev = None
    a_h = b_h = c_h = complex(float("nan"), 0.0)
    residual = math.inf
    windows = 0
    converged = False
    for w in range(max_windows):
        t0 = w * window_time
        status, h_last = _ig.integrate_sampled(
            y, t0, dt, n_samples, samples, *scalars,
            cm.exps, cm.coefs, cm.split, warm, RTOL, ATOL, h_last,
        )
        windows = w + 1
        if status != _ig.STATUS_OK:
            return SteadyStateResult(
                phi_a_h=complex(float("nan"), 0.0),
                phi_b_h=complex(float("nan"), 0.0),
                phi_c_h=complex(float("nan"), 0.0),
                gain_db=math.inf,
                converged=False,
                windows_used=windows,
                residual=math.inf,
            )
        times = t0 + dt * np.arange(1, n_samples + 1)
        _, amps_a = _lsq_harmonics(times, samples[:, 0], freqs)
        _, amps_b = _lsq_harmonics(times, samples[:, 2], freqs)
        a_h = complex(amps_a[i_sig])
        b_h = complex(amps_b[i_idl])
        if dim == 6:
            _, amps_c = _lsq_harmonics(times, samples[:, 4], freqs)
            c_h = complex(amps_c[i_pmp])
        else:
            c0 = complex(scalars[17], scalars[18])
            c_h = 2.0 * c0
        if prev is not None:
            residual = abs(abs(a_h) - abs(prev)) / max(abs(a_h), 1e-300)
            if residual < steady_rtol and windows >= min_windows:
                converged = True
                break
        prev = a_h

    return SteadyStateResult(
        phi_a_h=a_h,
        phi_b_h=b_h,
        phi_c_h=c_h,
        gain_db=reflection_gain(a_h, drive.amp_signal),
        converged=converged,
        windows_used=windows,
        residual=residual,
    )
