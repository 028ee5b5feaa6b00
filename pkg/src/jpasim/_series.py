"""Truncated power-series tools for the JRM mode energy.

Dense trivariate polynomials in the three JRM mode fluxes (phi_a, phi_b,
phi_c), truncated at a fixed total degree.  A polynomial of order N is a
numpy array of shape (N+1, N+1, N+1) where entry [i, j, k] multiplies
phi_a**i * phi_b**j * phi_c**k; entries with i+j+k > N are kept at zero.

On top of the raw arithmetic this module builds

* the one-dimensional series of a ring arm (junction, optionally with a
  stray series inductor) around a flux bias point, and
* the Taylor expansion of the reduced mode energy when the ring is fed
  through outer inductors (zeta > 0), by inverting the inner-node
  constraint order by order.

Everything here is dimensionless: energies are in units of phi0^2/L_in,
fluxes in units of phi0.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize as _sciopt

# Arm increments per unit mode flux: arm j runs from ring node j to node
# j+1, and carries Delta_j = w_a*phi_a + w_b*phi_b + w_c*phi_c on top of
# the flux bias.  Rows are arms 1..4, columns (a, b, c).
ARM_WEIGHTS = np.array(
    [
        [-0.5, 0.5, 1.0],
        [-0.5, -0.5, -1.0],
        [0.5, -0.5, 1.0],
        [0.5, 0.5, -1.0],
    ]
)


# ---------------------------------------------------------------------------
# dense trivariate polynomial arithmetic


def tri_zeros(order: int) -> np.ndarray:
    return np.zeros((order + 1,) * 3)


def tri_linear(ca: float, cb: float, cc: float, order: int) -> np.ndarray:
    p = tri_zeros(order)
    p[1, 0, 0] = ca
    p[0, 1, 0] = cb
    p[0, 0, 1] = cc
    return p


def _degree_mask(order: int) -> np.ndarray:
    idx = np.arange(order + 1)
    total = idx[:, None, None] + idx[None, :, None] + idx[None, None, :]
    return total <= order


def tri_mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    """Product of two truncated polynomials, re-truncated at `order`."""
    out = tri_zeros(order)
    n = order + 1
    ia, ja, ka = np.nonzero(a)
    # iterate over the sparser factor
    if len(ia) > np.count_nonzero(b):
        return tri_mul(b, a, order)
    for i, j, k, c in zip(ia, ja, ka, a[ia, ja, ka]):
        if i + j + k > order:
            continue
        out[i:, j:, k:] += c * b[: n - i, : n - j, : n - k]
    out[~_degree_mask(order)] = 0.0
    return out


def tri_grad(p: np.ndarray, axis: int) -> np.ndarray:
    """Partial derivative along `axis` (0=phi_a, 1=phi_b, 2=phi_c)."""
    n = p.shape[0]
    out = np.zeros_like(p)
    weights = np.arange(1, n)
    src = np.moveaxis(p, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    dst[: n - 1] = src[1:] * weights[:, None, None]
    return out


def tri_eval(p: np.ndarray, a: float, b: float, c: float) -> float:
    n = p.shape[0]
    pa = a ** np.arange(n)
    pb = b ** np.arange(n)
    pc = c ** np.arange(n)
    return float(np.einsum("ijk,i,j,k->", p, pa, pb, pc))


def tri_truncate(p: np.ndarray, degree: int) -> np.ndarray:
    """Zero out all monomials of total degree > `degree`."""
    out = p.copy()
    n = p.shape[0] - 1
    idx = np.arange(n + 1)
    total = idx[:, None, None] + idx[None, :, None] + idx[None, None, :]
    out[total > degree] = 0.0
    return out


def _powers(base: np.ndarray, order: int) -> list[np.ndarray]:
    """[base^0 (unused), base^1, ..., base^order] for a zero-constant series."""
    pows = [None, base]
    for _ in range(order - 1):
        pows.append(tri_mul(pows[-1], base, order))
    return pows


def compose_one(coeffs: np.ndarray, arg: np.ndarray, order: int) -> np.ndarray:
    """Substitute a zero-constant trivariate series into a 1-D series.

    Parameters
    ----------
    coeffs : array
        1-D series c_0 + c_1 u + ... + c_order u^order.
    arg : array
        Trivariate polynomial with zero constant term.

    Returns
    -------
    array
        sum_k c_k * arg^k, truncated at total degree `order`.
    """
    if arg[0, 0, 0] != 0.0:
        raise ValueError("substituted series must have zero constant term")
    out = tri_zeros(order)
    out[0, 0, 0] = coeffs[0]
    pows = _powers(arg, order)
    for k in range(1, order + 1):
        if coeffs[k] != 0.0:
            out += coeffs[k] * pows[k]
    return out


# ---------------------------------------------------------------------------
# 1-D series helpers


def _one_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = len(a)
    return np.convolve(a, b)[:n]


def _sin_cos_of_series(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """sin(v) and cos(v) for a 1-D series v with zero constant term."""
    n = len(v)
    sin_v = np.zeros(n)
    cos_v = np.zeros(n)
    cos_v[0] = 1.0
    term = np.zeros(n)
    term[0] = 1.0
    for k in range(1, n):
        term = _one_mul(term, v) / k
        if k % 2 == 1:
            sin_v += term * (-1.0) ** ((k - 1) // 2)
        else:
            cos_v += term * (-1.0) ** (k // 2)
    return sin_v, cos_v


def arm_junction_phase(delta: float, alpha: float) -> float:
    """Junction phase u solving delta = u + alpha*sin(u).

    For alpha < 1 the relation is strictly monotone, so the root is
    unique; it stays unique up to alpha ~ 2.80.  Since |sin| <= 1 the
    root always lies in [delta - alpha, delta + alpha].
    """
    if alpha == 0.0:
        return delta

    def f(u):
        return u + alpha * math.sin(u) - delta

    lo, hi = delta - alpha, delta + alpha
    if f(lo) >= 0.0:
        return lo
    if f(hi) <= 0.0:
        return hi
    return float(_sciopt.brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16))


def arm_series(delta0: float, alpha: float, order: int) -> dict:
    """Series data for one ring arm around the bias point delta0.

    An arm is a junction with phase u in series with a stray inductor of
    ratio alpha = L_stray/L_J; the total arm phase is
    delta = u + alpha*sin(u).  Returns the series in the arm increment
    w = delta - delta0 of

    * ``sin``    : sin(u(delta0 + w))   (the arm current / E_J per phi0)
    * ``energy`` : beta * arm energy  = -cos(u) + (alpha/2) sin(u)^2

    plus the bias junction phase ``u0``.
    """
    n = order + 1
    u0 = arm_junction_phase(delta0, alpha)
    # delta(u0 + v) - delta0 as a series in v
    dser = np.zeros(n)
    for k in range(1, n):
        dser[k] = alpha * math.sin(u0 + 0.5 * math.pi * k) / math.factorial(k)
    dser[1] += 1.0
    # invert: v as a series in w, one degree per sweep
    v = np.zeros(n)
    v[1] = 1.0 / dser[1]
    w_ser = np.zeros(n)
    w_ser[1] = 1.0
    for _ in range(order):
        acc = np.zeros(n)
        vp = v.copy()
        for k in range(2, n):
            vp = _one_mul(vp, v)
            acc += dser[k] * vp
        v = (w_ser - acc) / dser[1]
    sin_v, cos_v = _sin_cos_of_series(v)
    sin_u = math.sin(u0) * cos_v + math.cos(u0) * sin_v
    cos_u = math.cos(u0) * cos_v - math.sin(u0) * sin_v
    energy = -cos_u + 0.5 * alpha * _one_mul(sin_u, sin_u)
    return {"u0": u0, "sin": sin_u, "energy": energy}


# ---------------------------------------------------------------------------
# mode-energy series


def mode_energy_series(beta: float, x: float, alpha: float, order: int) -> np.ndarray:
    """JRM energy (zeta = 0) as a polynomial in the mode fluxes.

    `x` is the reduced external flux phi_ext/4.  The common mode is a
    flat direction and is fixed to zero.  Energy units: phi0^2/L_in.
    """
    arm = arm_series(-x, alpha, order)
    e = tri_zeros(order)
    e[2, 0, 0] = 0.25
    e[0, 2, 0] = 0.25
    e[0, 0, 2] = 0.5
    for j in range(4):
        wj = ARM_WEIGHTS[j]
        dj = tri_linear(wj[0], wj[1], wj[2], order)
        e += compose_one(arm["energy"], dj, order) / beta
    return e


def reduced_energy_series(
    beta: float, x: float, zeta: float, alpha: float, order: int
) -> dict:
    """Taylor data of the reduced mode energy for outer-fed rings.

    For zeta > 0 the physical (inner) ring nodes are massless and follow
    the outer nodes through the inductive divider.  The constraint

        outer = inner + zeta * grad(E_ring)(inner)

    is inverted order by order, and the reduced energy

        E_red(outer) = E_ring(inner) + (1/(2*zeta)) * |outer - inner|^2

    is expanded in the outer mode fluxes.  At zeta = 0 this degenerates
    to the plain mode energy.

    Returns
    -------
    dict
        ``energy``  trivariate series of E_red,
        ``inner``   tuple of trivariate series mapping outer to inner modes,
        ``p_a/p_b/p_c``  linear participation ratios (inner/outer slope).
    """
    arm = arm_series(-x, alpha, order)
    sin_ser = arm["sin"]
    en_ser = arm["energy"]

    def grads(psi):
        """Mode gradient (G_a, G_b, G_c) of the ring energy at series psi."""
        sa, sb, sc = psi
        svals = []
        for j in range(4):
            wj = ARM_WEIGHTS[j]
            dj = wj[0] * sa + wj[1] * sb + wj[2] * sc
            svals.append(compose_one(sin_ser, dj, order))
        ga = 0.5 * sa.copy()
        gb = 0.5 * sb.copy()
        gc = sc.copy()
        for j in range(4):
            ga += ARM_WEIGHTS[j, 0] * svals[j] / beta
            gb += ARM_WEIGHTS[j, 1] * svals[j] / beta
            gc += ARM_WEIGHTS[j, 2] * svals[j] / beta
        return ga, gb, gc

    lam_a = 1.0 + 2.0 * (sin_ser[1]) / beta  # d sin(u)/d delta at bias
    lam_c = 1.0 + 4.0 * (sin_ser[1]) / beta
    e_aa0 = 0.5 * lam_a
    e_cc0 = lam_c

    xa = tri_linear(1.0, 0.0, 0.0, order)
    xb = tri_linear(0.0, 1.0, 0.0, order)
    xc = tri_linear(0.0, 0.0, 1.0, order)

    if zeta == 0.0:
        e0 = mode_energy_series(beta, x, alpha, order)
        return {
            "energy": e0,
            "inner": (xa, xb, xc),
            "p_a": 1.0,
            "p_b": 1.0,
            "p_c": 1.0,
        }

    p_a = 1.0 / (1.0 + 2.0 * zeta * e_aa0)
    p_c = 1.0 / (1.0 + zeta * e_cc0)
    psi = (p_a * xa, p_a * xb, p_c * xc)
    for _ in range(order):
        ga, gb, gc = grads(psi)
        nl_a = ga - e_aa0 * psi[0]
        nl_b = gb - e_aa0 * psi[1]
        nl_c = gc - e_cc0 * psi[2]
        psi = (
            (xa - 2.0 * zeta * nl_a) * p_a,
            (xb - 2.0 * zeta * nl_b) * p_a,
            (xc - zeta * nl_c) * p_c,
        )

    ga, gb, gc = grads(psi)
    # ring energy at the inner solution
    e_ring = 0.25 * (
        tri_mul(psi[0], psi[0], order) + tri_mul(psi[1], psi[1], order)
    ) + 0.5 * tri_mul(psi[2], psi[2], order)
    for j in range(4):
        wj = ARM_WEIGHTS[j]
        dj = wj[0] * psi[0] + wj[1] * psi[1] + wj[2] * psi[2]
        e_ring += compose_one(en_ser, dj, order) / beta
    # outer-inductor energy, written via the envelope gradients
    e_out = zeta * (tri_mul(ga, ga, order) + tri_mul(gb, gb, order))
    e_out += 0.5 * zeta * tri_mul(gc, gc, order)
    energy = e_ring + e_out
    return {
        "energy": energy,
        "inner": psi,
        "p_a": p_a,
        "p_b": p_a,
        "p_c": p_c,
    }
