"""Circuit model of a JRM-based Josephson parametric amplifier.

The device is a four-junction Josephson ring modulator (JRM) whose nodes
are fed through input inductors; optional outer inductors (ratio zeta)
dilute the junction participation, and an optional stray inductor
(ratio alpha) sits in series with every junction.  Three orthogonal
excitation modes of the ring carry the dynamics:

* phi_a : difference of nodes 1 and 3 (signal)
* phi_b : difference of nodes 2 and 4 (idler)
* phi_c : difference of the two diagonals (pump)

plus a flat common mode phi_m.  All energies and fluxes are handled in
dimensionless form (units of phi0^2/L_in and phi0); physical units enter
only through :func:`derive_elements` and the mode frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize

from ._series import (
    ARM_WEIGHTS,
    arm_junction_phase,
    arm_series,
    reduced_energy_series,
)

# Flux quantum over 2*pi, in Wb.  Pinned value used throughout.
PHI0 = 3.2915e-16

# Truncation order of the internal Taylor machinery.
SERIES_ORDER = 8

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# parameter containers


@dataclass(frozen=True)
class CircuitParams:
    """Dimensionless circuit parameters plus physical anchors.

    Attributes
    ----------
    beta : float
        Ratio L_J / L_in of junction to input inductance.
    zeta : float
        Ratio L_out / L_in of outer to input inductance.  The inverse
        participation of the junctions is 1/p = 1 + zeta at quartic
        nulling.
    alpha : float
        Ratio L_stray / L_J of the stray inductor in series with each
        junction.
    phi_ext : float
        External flux threading the ring, in radians (phi0 units).
        Quartic nulling sits at 2*pi for alpha = 0.
    f_a, f_b : float
        Design mode frequencies in Hz of the signal and idler modes at
        the nulling bias with zeta = 0; they size the capacitances.
    gamma_a, gamma_b, gamma_c : float
        Mode decay rates, angular (rad/s).
    i_c : float
        Junction critical current in A.
    """

    beta: float
    zeta: float = 0.0
    alpha: float = 0.0
    phi_ext: float = TWO_PI
    f_a: float = 7.5e9
    f_b: float = 5.0e9
    gamma_a: float = TWO_PI * 0.1e9
    gamma_b: float = TWO_PI * 0.1e9
    gamma_c: float = TWO_PI * 0.1e9
    i_c: float = 1.0e-6

    @property
    def x(self) -> float:
        """Reduced external flux phi_ext / 4 (one quarter per arm)."""
        return self.phi_ext / 4.0


@dataclass(frozen=True)
class DerivedElements:
    """Physical element values implied by a :class:`CircuitParams`."""

    L_J: float
    L_in: float
    L_out: float
    L_stray: float
    C_a: float
    C_b: float
    C_c: float
    Z_a: float
    Z_b: float
    Z_c: float
    omega_a: float
    omega_b: float
    omega_c: float
    phi0: float
    E_J: float


@dataclass(frozen=True)
class ModeVector:
    phi_a: float
    phi_b: float
    phi_c: float
    phi_m: float = 0.0


@dataclass(frozen=True)
class CouplingTable:
    """Taylor coefficients of the reduced mode energy.

    Sign conventions (E is the dimensionless energy):

    * three-wave   E ⊃ -g  * a*b*c
    * cross-Kerr   E ⊃ k_ab * a^2*b^2     (k_ij = d4E/di2dj2 / 4)
    * self-Kerr    E ⊃ k_aa * a^4         (k_jj = d4E/dj4 / 24)
    * five-wave    E ⊃ +h_a * a^3*b*c     (h_a = d5E/da3dbdc / 6)
    * seven-wave   E ⊃ -l_aa * a^5*b*c    (l_aa = -d7E/da5dbdc / 120)
    """

    g: float
    k_aa: float
    k_bb: float
    k_cc: float
    k_ab: float
    k_ac: float
    k_bc: float
    h_a: float
    h_b: float
    h_c: float
    l_aa: float
    l_bb: float
    p_a: float
    p_b: float
    p_c: float
    method: str = "analytic"


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    degeneracy: int
    ground_state: ModeVector
    nulling_flux: float


# ---------------------------------------------------------------------------
# linear transforms and element values


def normal_transform(phi_nodes) -> ModeVector:
    """Ring node fluxes (phi_1..phi_4) to mode fluxes."""
    p1, p2, p3, p4 = np.asarray(phi_nodes, dtype=float)
    return ModeVector(
        phi_a=p1 - p3,
        phi_b=p2 - p4,
        phi_c=-0.5 * (p1 + p3 - p2 - p4),
        phi_m=0.25 * (p1 + p2 + p3 + p4),
    )


def inverse_transform(modes: ModeVector) -> np.ndarray:
    """Mode fluxes back to ring node fluxes (exact inverse)."""
    a, b, c, m = modes.phi_a, modes.phi_b, modes.phi_c, modes.phi_m
    return np.array(
        [
            m + 0.5 * a - 0.5 * c,
            m + 0.5 * b + 0.5 * c,
            m - 0.5 * a - 0.5 * c,
            m - 0.5 * b + 0.5 * c,
        ]
    )


def _arm_slope(params: CircuitParams) -> float:
    """d sin(u)/d delta of one arm at the flux bias (cos x at alpha=0)."""
    u0 = arm_junction_phase(-params.x, params.alpha)
    cu = math.cos(u0)
    return cu / (1.0 + params.alpha * cu)


def participation_factors(params: CircuitParams) -> tuple[float, float, float]:
    """Linear flux participation p_j = (inner mode)/(outer mode) slope."""
    s1 = _arm_slope(params)
    lam_a = 1.0 + 2.0 * s1 / params.beta
    lam_c = 1.0 + 4.0 * s1 / params.beta
    p_a = 1.0 / (1.0 + params.zeta * lam_a)
    p_c = 1.0 / (1.0 + params.zeta * lam_c)
    return p_a, p_a, p_c


def _reference_curvature(params: CircuitParams) -> float:
    """a/b-mode curvature e_aa at the sizing bias phi_ext = 2*pi.

    The external capacitors are chosen so the dressed a/b frequencies sit
    at f_a, f_b when the ring is biased at the quartic-nulling point, for
    whatever (beta, zeta, alpha) the circuit has.  This is the curvature
    that enters that sizing; it does not move with the operating bias.
    """
    u0 = arm_junction_phase(0.5 * math.pi, params.alpha)
    cu = math.cos(u0)
    s1 = cu / (1.0 + params.alpha * cu)
    lam_a = 1.0 + 2.0 * s1 / params.beta
    return 0.5 * lam_a / (1.0 + params.zeta * lam_a)


def force_gains(params: CircuitParams) -> tuple[float, float, float]:
    """Stiffness-to-acceleration gains K_j (rad^2/s^2).

    The mode equations of motion read
    ``phidd_j + gamma_j*phid_j + K_j * dE/dphi_j = drive`` with E the
    dimensionless reduced energy, so ``omega_j^2 = K_j * d2E/dphi_j^2``.
    K_j = 1/(C_j * phi0 / i_c) is set once by sizing the capacitors at the
    phi_ext = 2*pi reference (where the dressed frequencies must equal
    f_a, f_b) and stays fixed as the operating bias moves.  K_c follows
    from the capacitance matrix: the c-mode inertia is the series
    combination of the a and b ones.
    """
    e_ref = _reference_curvature(params)
    k_a = (TWO_PI * params.f_a) ** 2 / e_ref
    k_b = (TWO_PI * params.f_b) ** 2 / e_ref
    return k_a, k_b, 0.25 * (k_a + k_b)


def curvatures(params: CircuitParams) -> tuple[float, float, float]:
    """Second derivatives e_jj of the reduced energy at the origin."""
    s1 = _arm_slope(params)
    lam_a = 1.0 + 2.0 * s1 / params.beta
    lam_c = 1.0 + 4.0 * s1 / params.beta
    e_aa = 0.5 * lam_a / (1.0 + params.zeta * lam_a)
    e_cc = lam_c / (1.0 + params.zeta * lam_c)
    return e_aa, e_aa, e_cc


def mode_frequencies(params: CircuitParams) -> tuple[float, float, float]:
    """Small-oscillation mode frequencies (rad/s) at the operating bias.

    Raises
    ------
    ValueError
        If any mode curvature is non-positive (imaginary frequency):
        the chosen bias point is not a stable minimum.
    """
    k_a, k_b, k_c = force_gains(params)
    e_aa, e_bb, e_cc = curvatures(params)
    for name, e in (("a", e_aa), ("b", e_bb), ("c", e_cc)):
        if e <= 0.0:
            raise ValueError(
                f"mode {name} curvature {e:.3e} <= 0 at phi_ext="
                f"{params.phi_ext:.4f}: bias point is unstable "
                "(imaginary mode frequency)"
            )
    return (
        math.sqrt(k_a * e_aa),
        math.sqrt(k_b * e_bb),
        math.sqrt(k_c * e_cc),
    )


def derive_elements(params: CircuitParams) -> DerivedElements:
    """Physical element values for the given parameter set.

    The capacitances are sized so that the dressed mode frequencies equal
    f_a, f_b at the quartic-nulling bias for the circuit's own zeta and
    alpha; they do not move with the operating bias afterwards.  The
    reported omega_* are the operating-point mode frequencies of `params`
    itself.
    """
    l_j = PHI0 / params.i_c
    l_in = l_j / params.beta
    e_ref = _reference_curvature(params)
    c_a = 2.0 * e_ref / ((TWO_PI * params.f_a) ** 2 * l_in)
    c_b = 2.0 * e_ref / ((TWO_PI * params.f_b) ** 2 * l_in)
    c_c = 4.0 * c_a * c_b / (c_a + c_b)
    om_a, om_b, om_c = mode_frequencies(params)
    return DerivedElements(
        L_J=l_j,
        L_in=l_in,
        L_out=params.zeta * l_in,
        L_stray=params.alpha * l_j,
        C_a=c_a,
        C_b=c_b,
        C_c=c_c,
        Z_a=1.0 / (params.gamma_a * c_a),
        Z_b=1.0 / (params.gamma_b * c_b),
        Z_c=(c_a + c_b) / (2.0 * c_a * c_b * params.gamma_c),
        omega_a=om_a,
        omega_b=om_b,
        omega_c=om_c,
        phi0=PHI0,
        E_J=PHI0 * params.i_c,
    )


# ---------------------------------------------------------------------------
# energies and gradients


def arm_phase(alpha: float, delta: float) -> float:
    """Junction phase u of one arm given the total arm phase delta.

    Solves ``delta = u + alpha*sin(u)`` (junction in series with a stray
    inductor carrying the same current sin(u)).
    """
    return arm_junction_phase(delta, alpha)


def _arm_sines(phi_nodes: np.ndarray, x: float, alpha: float) -> np.ndarray:
    """sin(u_j) for the four arms; arm j joins node j to node j+1."""
    deltas = np.roll(phi_nodes, -1) - phi_nodes - x
    if alpha == 0.0:
        return np.sin(deltas)
    return np.array([math.sin(arm_junction_phase(d, alpha)) for d in deltas])


def node_energy(phi_nodes, x: float, beta: float, alpha: float) -> float:
    """Ring energy as a function of the four node fluxes (zeta = 0)."""
    phi = np.asarray(phi_nodes, dtype=float)
    quad = 0.5 * np.sum((phi - phi.mean()) ** 2)
    deltas = np.roll(phi, -1) - phi - x
    arm = 0.0
    for d in deltas:
        u = arm_junction_phase(d, alpha)
        arm += -math.cos(u) + 0.5 * alpha * math.sin(u) ** 2
    return float(quad + arm / beta)


def node_gradient(phi_nodes, x: float, beta: float, alpha: float) -> np.ndarray:
    """Gradient of :func:`node_energy` with respect to the node fluxes."""
    phi = np.asarray(phi_nodes, dtype=float)
    sines = _arm_sines(phi, x, alpha)
    # arm j-1 pulls node j forward, arm j pulls it back
    return (phi - phi.mean()) + (np.roll(sines, 1) - sines) / beta


def solve_inner_nodes(outer_nodes, params: CircuitParams, warm_start=None):
    """Inner ring-node fluxes behind the outer inductors.

    Solves ``phi + zeta * grad(E_ring)(phi) = outer`` with a damped
    Newton iteration.

    Parameters
    ----------
    outer_nodes : array-like, shape (4,)
        Outer node fluxes (phi0 units).
    warm_start : array-like, optional
        Initial guess; defaults to the linear participation estimate.

    Returns
    -------
    (phi, n_iter, residual)
        Inner node fluxes, Newton iterations used, and the final
        max-norm residual.

    Raises
    ------
    RuntimeError
        If the residual does not reach 1e-12 within 50 iterations
        (e.g. past a fold of the constraint at large zeta).
    """
    outer = np.asarray(outer_nodes, dtype=float)
    zeta, beta, alpha, x = params.zeta, params.beta, params.alpha, params.x
    if zeta == 0.0:
        return outer.copy(), 0, 0.0
    if warm_start is not None:
        phi = np.asarray(warm_start, dtype=float).copy()
    else:
        p_a, _, _ = participation_factors(params)
        phi = p_a * outer

    def residual(p):
        return p + zeta * node_gradient(p, x, beta, alpha) - outer

    f = residual(phi)
    norm = np.max(np.abs(f))
    for it in range(1, 51):
        if norm < 1e-12:
            return phi, it - 1, float(norm)
        deltas = np.roll(phi, -1) - phi - x
        if alpha == 0.0:
            slopes = np.cos(deltas)
        else:
            slopes = np.array(
                [
                    math.cos(u) / (1.0 + alpha * math.cos(u))
                    for u in (arm_junction_phase(d, alpha) for d in deltas)
                ]
            )
        jac = np.full((4, 4), -0.25 * zeta)
        for i in range(4):
            jac[i, i] = 1.0 + zeta * (
                0.75 + (slopes[i - 1] + slopes[i]) / beta
            )
            jac[i, (i + 1) % 4] += -zeta * slopes[i] / beta
            jac[i, (i - 1) % 4] += -zeta * slopes[i - 1] / beta
        step = np.linalg.solve(jac, -f)
        t = 1.0
        while t > 1.0 / 64.0:
            trial = phi + t * step
            f_trial = residual(trial)
            if np.max(np.abs(f_trial)) < norm:
                break
            t *= 0.5
        phi = phi + t * step
        f = residual(phi)
        norm = np.max(np.abs(f))
    raise RuntimeError(
        f"inner-node solve stalled at residual {norm:.2e} "
        f"(zeta={zeta}, beta={beta}: constraint may have folded)"
    )


def mode_gradient(phi_a, phi_b, phi_c, params: CircuitParams, warm_start=None):
    """Gradient of the reduced energy with respect to the mode fluxes.

    For zeta > 0 this is the envelope gradient: the ring mode gradient
    evaluated at the inner-node solution.
    """
    if params.zeta == 0.0:
        return _ring_mode_gradient(
            phi_a, phi_b, phi_c, params.x, params.beta, params.alpha
        )
    outer = inverse_transform(ModeVector(phi_a, phi_b, phi_c))
    inner, _, _ = solve_inner_nodes(outer, params, warm_start=warm_start)
    im = normal_transform(inner)
    return _ring_mode_gradient(
        im.phi_a, im.phi_b, im.phi_c, params.x, params.beta, params.alpha
    )


def _ring_mode_gradient(a, b, c, x, beta, alpha):
    """(dE/da, dE/db, dE/dc) of the bare ring energy in mode form."""
    if alpha == 0.0:
        ha, hb = 0.5 * a, 0.5 * b
        cx, sx = math.cos(x), math.sin(x)
        e_a = 0.5 * a + (2.0 / beta) * (
            math.sin(ha) * math.cos(hb) * math.cos(c) * cx
            - math.cos(ha) * math.sin(hb) * math.sin(c) * sx
        )
        e_b = 0.5 * b + (2.0 / beta) * (
            math.cos(ha) * math.sin(hb) * math.cos(c) * cx
            - math.sin(ha) * math.cos(hb) * math.sin(c) * sx
        )
        e_c = c + (4.0 / beta) * (
            math.cos(ha) * math.cos(hb) * math.sin(c) * cx
            - math.sin(ha) * math.sin(hb) * math.cos(c) * sx
        )
        return np.array([e_a, e_b, e_c])
    sines = np.empty(4)
    for j in range(4):
        wj = ARM_WEIGHTS[j]
        d = wj[0] * a + wj[1] * b + wj[2] * c - x
        sines[j] = math.sin(arm_junction_phase(d, alpha))
    grad = np.array([0.5 * a, 0.5 * b, c])
    grad += (ARM_WEIGHTS.T @ sines) / beta
    return grad


def jrm_energy(modes: ModeVector, params: CircuitParams) -> float:
    """Reduced potential energy at the given (outer) mode fluxes.

    Dimensionless, in units of phi0^2 / L_in.  For zeta > 0 the inner
    nodes are eliminated through :func:`solve_inner_nodes` and the outer
    inductor energy is added.
    """
    a, b, c = modes.phi_a, modes.phi_b, modes.phi_c
    x, beta, alpha, zeta = params.x, params.beta, params.alpha, params.zeta
    if zeta == 0.0:
        quad = 0.25 * (a * a + b * b) + 0.5 * c * c
        arm = 0.0
        for j in range(4):
            wj = ARM_WEIGHTS[j]
            d = wj[0] * a + wj[1] * b + wj[2] * c - x
            u = arm_junction_phase(d, alpha)
            arm += -math.cos(u) + 0.5 * alpha * math.sin(u) ** 2
        return float(quad + arm / beta)
    outer = inverse_transform(modes)
    inner, _, _ = solve_inner_nodes(outer, params)
    ring = node_energy(inner, x, beta, alpha)
    return float(ring + np.sum((outer - inner) ** 2) / (2.0 * zeta))


# ---------------------------------------------------------------------------
# coupling coefficients


@lru_cache(maxsize=512)
def _series_data_cached(beta, x, zeta, alpha, order):
    return reduced_energy_series(beta, x, zeta, alpha, order)


def _series_data(params: CircuitParams, order: int = SERIES_ORDER) -> dict:
    return _series_data_cached(
        params.beta, params.x, params.zeta, params.alpha, order
    )


def _table_from_series(params: CircuitParams) -> CouplingTable:
    data = _series_data(params)
    e = data["energy"]
    return CouplingTable(
        g=-e[1, 1, 1],
        k_aa=e[4, 0, 0],
        k_bb=e[0, 4, 0],
        k_cc=e[0, 0, 4],
        k_ab=e[2, 2, 0],
        k_ac=e[2, 0, 2],
        k_bc=e[0, 2, 2],
        h_a=e[3, 1, 1],
        h_b=e[1, 3, 1],
        h_c=e[1, 1, 3],
        l_aa=-e[5, 1, 1],
        l_bb=-e[1, 5, 1],
        p_a=data["p_a"],
        p_b=data["p_b"],
        p_c=data["p_c"],
        method="analytic",
    )


_STENCILS = {
    1: (np.array([-1, 1]), np.array([-0.5, 0.5]), 1),
    2: (np.array([-1, 0, 1]), np.array([1.0, -2.0, 1.0]), 2),
    3: (np.array([-2, -1, 1, 2]), np.array([-0.5, 1.0, -1.0, 0.5]), 3),
    4: (np.array([-2, -1, 0, 1, 2]), np.array([1.0, -4.0, 6.0, -4.0, 1.0]), 4),
}


def _fd_mixed(func, orders: tuple[int, int, int], h: float) -> float:
    """Mixed partial derivative of func(a, b, c) by product central stencils.

    One level of Richardson extrapolation on the leading h^2 error.
    """

    def estimate(step):
        axes = []
        for n in orders:
            if n == 0:
                axes.append((np.array([0]), np.array([1.0]), 0))
            else:
                axes.append(_STENCILS[n])
        total = 0.0
        for ia, wa in zip(axes[0][0], axes[0][1]):
            for ib, wb in zip(axes[1][0], axes[1][1]):
                for ic, wc in zip(axes[2][0], axes[2][1]):
                    w = wa * wb * wc
                    if w == 0.0:
                        continue
                    total += w * func(ia * step, ib * step, ic * step)
        power = axes[0][2] + axes[1][2] + axes[2][2]
        return total / step**power

    coarse = estimate(h)
    fine = estimate(0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def _table_from_fd(params: CircuitParams, h: float = 0.05) -> CouplingTable:
    # cache of inner solutions keyed by offsets keeps Newton warm-started
    def grad(a, b, c):
        return mode_gradient(a, b, c, params)

    ga = lambda a, b, c: grad(a, b, c)[0]  # noqa: E731
    gb = lambda a, b, c: grad(a, b, c)[1]  # noqa: E731
    gc = lambda a, b, c: grad(a, b, c)[2]  # noqa: E731

    p_a, p_b, p_c = participation_factors(params)
    return CouplingTable(
        g=-_fd_mixed(ga, (0, 1, 1), h),
        k_aa=_fd_mixed(ga, (3, 0, 0), h) / 24.0,
        k_bb=_fd_mixed(gb, (0, 3, 0), h) / 24.0,
        k_cc=_fd_mixed(gc, (0, 0, 3), h) / 24.0,
        k_ab=_fd_mixed(ga, (1, 2, 0), h) / 4.0,
        k_ac=_fd_mixed(ga, (1, 0, 2), h) / 4.0,
        k_bc=_fd_mixed(gb, (0, 1, 2), h) / 4.0,
        h_a=_fd_mixed(ga, (2, 1, 1), h) / 6.0,
        h_b=_fd_mixed(gb, (1, 2, 1), h) / 6.0,
        h_c=_fd_mixed(gc, (1, 1, 2), h) / 6.0,
        l_aa=-_fd_mixed(ga, (4, 1, 1), h) / 120.0,
        l_bb=-_fd_mixed(gb, (1, 4, 1), h) / 120.0,
        p_a=p_a,
        p_b=p_b,
        p_c=p_c,
        method="numeric-derivative",
    )


def coupling_table(params: CircuitParams, method: str = "analytic") -> CouplingTable:
    """Wave-mixing coefficients of the reduced mode energy.

    Parameters
    ----------
    method : {"analytic", "numeric-derivative"}
        "analytic" extracts the coefficients from the order-8 Taylor
        series of the reduced energy; "numeric-derivative" applies
        Richardson-extrapolated central differences to the analytic
        mode gradient.  The two agree to ~1e-10 on the quartic terms
        and serve as mutual checks.
    """
    if method == "analytic":
        return _table_from_series(params)
    if method == "numeric-derivative":
        return _table_from_fd(params)
    raise ValueError(f"unknown coupling method: {method!r}")


def perturbative_kab(params: CircuitParams) -> float:
    """Closed-form cross-Kerr k_ab including the outer-inductor dressing.

    The outer inductors renormalize the bare quartic by the fourth power
    of the linear participation and generate a cascaded three-wave
    contribution through the pump mode:

        k_ab = p_a^2 p_b^2 * (k_ab0 - (zeta/2) * g0^2 * p_c)

    with k_ab0, g0 the bare ring coefficients (alpha-dressed).  Exact
    for the quartic part of the reduced energy at any zeta.
    """
    beta, x, alpha, zeta = params.beta, params.x, params.alpha, params.zeta
    if alpha == 0.0:
        k_ab0 = -math.cos(x) / (16.0 * beta)
        g0 = math.sin(x) / beta
    else:
        en = arm_series(-x, alpha, 4)["energy"]
        k_ab0 = 1.5 * en[4] / beta
        g0 = 6.0 * (-en[3]) / beta
    p_a, _, p_c = participation_factors(params)
    return p_a**4 * (k_ab0 - 0.5 * zeta * g0**2 * p_c)


# ---------------------------------------------------------------------------
# stability of the bias point


def _bare_quartic_coefficient(phi_ext: float, alpha: float) -> float:
    """u^4 coefficient of the arm energy at bias (-cos(x)/24 at alpha=0)."""
    return arm_series(-phi_ext / 4.0, alpha, 4)["energy"][4]


def nulling_flux(alpha: float) -> float:
    """External flux where the bare quartic of the ring vanishes.

    2*pi for alpha = 0, moving up with stray inductance (the series
    inductor skews the junction phase away from the applied flux).
    Returns the lowest such flux above pi; NaN if none exists below
    the periodicity boundary at 4*pi.
    """
    grid = np.linspace(1.2 * math.pi, 3.95 * math.pi, 441)
    vals = np.array([_bare_quartic_coefficient(p, alpha) for p in grid])
    sign_flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(sign_flips) == 0:
        return math.nan
    i = sign_flips[0]
    return float(
        optimize.brentq(
            lambda phi: _bare_quartic_coefficient(phi, alpha),
            grid[i],
            grid[i + 1],
            xtol=1e-12,
        )
    )


def stability_and_nulling(
    params: CircuitParams, n_starts: int = 32, seed: int = 0
) -> StabilityReport:
    """Global minimum structure of the reduced energy landscape.

    Runs `n_starts` local descents from scattered mode-space seeds
    (box |phi_a|, |phi_b| <= 4*pi, |phi_c| <= 2*pi, common mode fixed),
    polishes the survivors with Newton steps on the gradient, clusters
    coincident minima at 1e-6, and reports whether the origin is the
    global minimum along with the degeneracy of the ground level.
    """
    rng = np.random.default_rng(seed)

    def objective(v):
        try:
            e = jrm_energy(ModeVector(*v), params)
            g = mode_gradient(v[0], v[1], v[2], params)
        except RuntimeError:
            # constraint fold: push the search back inward
            return 1e6 + float(v @ v), 2.0 * v
        return e, g

    lo = np.array([-4 * math.pi, -4 * math.pi, -2 * math.pi])
    hi = -lo
    seeds = [np.zeros(3)]
    # near-origin probes catch shallow symmetry-broken minima
    for k in range(3):
        for s in (0.5, -0.5, 1.5, -1.5):
            v = np.zeros(3)
            v[k] = s
            seeds.append(v)
    n_random = max(0, n_starts - len(seeds))
    seeds += list(rng.uniform(lo, hi, size=(n_random, 3)))

    def fd_hessian(v, hstep=1e-6):
        hess = np.empty((3, 3))
        for k in range(3):
            dv = np.zeros(3)
            dv[k] = hstep
            gp = mode_gradient(*(v + dv), params)
            gm = mode_gradient(*(v - dv), params)
            hess[:, k] = (gp - gm) / (2.0 * hstep)
        return 0.5 * (hess + hess.T)

    minima = []
    for s in seeds:
        res = optimize.minimize(
            objective,
            s,
            jac=True,
            method="L-BFGS-B",
            bounds=list(zip(lo, hi)),
            options={"maxiter": 200, "ftol": 1e-14, "gtol": 1e-10},
        )
        v = res.x
        # Newton polish on the gradient (FD Hessian of the gradient)
        for _ in range(8):
            try:
                g = mode_gradient(v[0], v[1], v[2], params)
            except RuntimeError:
                break
            if np.max(np.abs(g)) < 1e-11:
                break
            try:
                step = np.linalg.solve(fd_hessian(v), -g)
            except (np.linalg.LinAlgError, RuntimeError):
                break
            if np.max(np.abs(step)) > 1.0:
                break
            v = v + step
        try:
            e = jrm_energy(ModeVector(*v), params)
            g = mode_gradient(v[0], v[1], v[2], params)
            eig_min = np.linalg.eigvalsh(fd_hessian(v))[0]
        except RuntimeError:
            continue
        if np.max(np.abs(g)) > 1e-8 or np.any(v < lo - 1e-9) or np.any(v > hi + 1e-9):
            continue
        if eig_min < -1e-6:
            continue  # stationary but not a minimum (saddle)
        minima.append((e, v))

    if not minima:
        raise RuntimeError("stability search found no stationary points")

    e_best = min(e for e, _ in minima)
    ground = [
        (e, v) for e, v in minima if e - e_best < 1e-9 * max(1.0, abs(e_best))
    ]
    distinct: list[np.ndarray] = []
    for _, v in ground:
        if not any(np.max(np.abs(v - w)) < 1e-6 for w in distinct):
            distinct.append(v)

    e_origin = jrm_energy(ModeVector(0.0, 0.0, 0.0), params)
    stable = e_origin - e_best < 1e-9 * max(1.0, abs(e_best))
    rep = min(distinct, key=lambda v: (np.round(v, 9)).tolist())
    return StabilityReport(
        stable=bool(stable),
        degeneracy=len(distinct),
        ground_state=ModeVector(rep[0], rep[1], rep[2]),
        nulling_flux=nulling_flux(params.alpha),
    )
