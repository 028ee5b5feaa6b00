"""Compiled time-stepping core for the driven JRM mode equations.

A hand-rolled Dormand-Prince 5(4) pair (FSAL, adaptive step) integrates
the damped, driven mode equations

    phidd_j + gamma_j * phid_j + K_j * dE/dphi_j = F_j(t)

with the reduced-energy gradient evaluated by one of four interchangeable
kernels:

* GRAD_POLY  : truncated polynomial gradients (from the Taylor series)
* GRAD_TRIG0 : closed-form ring gradient, zeta = 0, alpha = 0
* GRAD_ARM   : zeta = 0, alpha > 0, scalar junction solve per arm
* GRAD_INNER : zeta > 0, damped Newton on the four inner ring nodes

and two pump treatments: a *soft* pump (pump mode integrated as a
dynamical variable, drive ramped on) and a *stiff* pump (pump flux
prescribed as a fixed harmonic trajectory).

All state is [phi_a, phid_a, phi_b, phid_b(, phi_c, phid_c)] in phi0
units and rad/s; integration happens in SI seconds.

Status codes returned by the integrator:

* 0 success
* 1 divergence (a mode flux left |phi| <= 50)
* 2 inner-node solve failed to converge
* 3 step size collapsed
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

GRAD_POLY = 0
GRAD_TRIG0 = 1
GRAD_ARM = 2
GRAD_INNER = 3

PUMP_SOFT = 0
PUMP_STIFF = 1

STATUS_OK = 0
STATUS_DIVERGED = 1
STATUS_INNER_FAIL = 2
STATUS_STEP_COLLAPSE = 3

# arm increments per unit mode flux (rows: arms 1..4, cols a, b, c);
# kept in sync with jpasim._series.ARM_WEIGHTS
_W = np.array(
    [
        [-0.5, 0.5, 1.0],
        [-0.5, -0.5, -1.0],
        [0.5, -0.5, 1.0],
        [0.5, 0.5, -1.0],
    ]
)


@njit(cache=True, nogil=True)
def _arm_u(delta, alpha):
    """Junction phase u with delta = u + alpha*sin(u) (alpha < 1)."""
    if alpha == 0.0:
        return delta
    lo = delta - alpha
    hi = delta + alpha
    u = delta
    for _ in range(200):
        f = u + alpha * math.sin(u) - delta
        if abs(f) < 1e-14:
            return u
        if f > 0.0:
            hi = u
        else:
            lo = u
        fp = 1.0 + alpha * math.cos(u)
        if fp > 1e-12:
            un = u - f / fp
        else:
            un = 0.5 * (lo + hi)
        if un <= lo or un >= hi:
            un = 0.5 * (lo + hi)
        u = un
    return u


@njit(cache=True, nogil=True)
def _grad_trig0(a, b, c, x, beta, grad):
    ha = 0.5 * a
    hb = 0.5 * b
    cx = math.cos(x)
    sx = math.sin(x)
    sa, ca = math.sin(ha), math.cos(ha)
    sb, cb = math.sin(hb), math.cos(hb)
    sc, cc = math.sin(c), math.cos(c)
    grad[0] = 0.5 * a + (2.0 / beta) * (sa * cb * cc * cx - ca * sb * sc * sx)
    grad[1] = 0.5 * b + (2.0 / beta) * (ca * sb * cc * cx - sa * cb * sc * sx)
    grad[2] = c + (4.0 / beta) * (ca * cb * sc * cx - sa * sb * cc * sx)


@njit(cache=True, nogil=True)
def _grad_arm(a, b, c, x, beta, alpha, grad):
    grad[0] = 0.5 * a
    grad[1] = 0.5 * b
    grad[2] = c
    for j in range(4):
        d = _W[j, 0] * a + _W[j, 1] * b + _W[j, 2] * c - x
        s = math.sin(_arm_u(d, alpha))
        grad[0] += _W[j, 0] * s / beta
        grad[1] += _W[j, 1] * s / beta
        grad[2] += _W[j, 2] * s / beta


@njit(cache=True, nogil=True)
def _grad_inner(a, b, c, x, beta, alpha, zeta, warm, grad):
    """Reduced gradient through the inner-node constraint.

    `warm` is a persistent length-5 workspace: inner nodes 1..4 plus a
    validity flag in slot 4.  Returns 0 on success, 1 on Newton failure.
    """
    # outer nodes at zero common mode
    o0 = 0.5 * a - 0.5 * c
    o1 = 0.5 * b + 0.5 * c
    o2 = -0.5 * a - 0.5 * c
    o3 = -0.5 * b + 0.5 * c

    p = np.empty(4)
    if warm[4] > 0.0:
        for i in range(4):
            p[i] = warm[i]
    else:
        lam = 1.0 + 2.0 * math.cos(x) / beta
        pa = 1.0 / (1.0 + zeta * lam)
        p[0] = pa * o0
        p[1] = pa * o1
        p[2] = pa * o2
        p[3] = pa * o3

    outer = np.empty(4)
    outer[0] = o0
    outer[1] = o1
    outer[2] = o2
    outer[3] = o3

    f = np.empty(4)
    sines = np.empty(4)
    slopes = np.empty(4)
    jac = np.empty((4, 4))

    def_res = -1.0
    for _ in range(50):
        mean = 0.25 * (p[0] + p[1] + p[2] + p[3])
        for j in range(4):
            d = p[(j + 1) % 4] - p[j] - x
            u = _arm_u(d, alpha)
            cu = math.cos(u)
            sines[j] = math.sin(u)
            slopes[j] = cu / (1.0 + alpha * cu)
        res = 0.0
        for i in range(4):
            f[i] = (
                p[i]
                + zeta * ((p[i] - mean) + (sines[i - 1] - sines[i]) / beta)
                - outer[i]
            )
            if abs(f[i]) > res:
                res = abs(f[i])
        def_res = res
        if res < 1e-12:
            break
        for i in range(4):
            for jj in range(4):
                jac[i, jj] = -0.25 * zeta
            jac[i, i] = 1.0 + zeta * (0.75 + (slopes[i - 1] + slopes[i]) / beta)
            jac[i, (i + 1) % 4] += -zeta * slopes[i] / beta
            jac[i, (i - 1) % 4] += -zeta * slopes[i - 1] / beta
        # 4x4 Gaussian elimination with partial pivoting on [jac | -f]
        rhs = np.empty(4)
        for i in range(4):
            rhs[i] = -f[i]
        for col in range(4):
            piv = col
            big = abs(jac[col, col])
            for r in range(col + 1, 4):
                if abs(jac[r, col]) > big:
                    big = abs(jac[r, col])
                    piv = r
            if big < 1e-300:
                return 1
            if piv != col:
                for cc in range(4):
                    tmp = jac[col, cc]
                    jac[col, cc] = jac[piv, cc]
                    jac[piv, cc] = tmp
                tmp = rhs[col]
                rhs[col] = rhs[piv]
                rhs[piv] = tmp
            for r in range(col + 1, 4):
                fac = jac[r, col] / jac[col, col]
                for cc in range(col, 4):
                    jac[r, cc] -= fac * jac[col, cc]
                rhs[r] -= fac * rhs[col]
        step = np.empty(4)
        for i in range(3, -1, -1):
            s = rhs[i]
            for jj in range(i + 1, 4):
                s -= jac[i, jj] * step[jj]
            step[i] = s / jac[i, i]
        # backtracking on the residual norm
        t = 1.0
        accepted = False
        for _bt in range(7):
            trial_res = 0.0
            for i in range(4):
                f[i] = p[i] + t * step[i]
            mean = 0.25 * (f[0] + f[1] + f[2] + f[3])
            for j in range(4):
                d = f[(j + 1) % 4] - f[j] - x
                sines[j] = math.sin(_arm_u(d, alpha))
            for i in range(4):
                r = (
                    f[i]
                    + zeta * ((f[i] - mean) + (sines[i - 1] - sines[i]) / beta)
                    - outer[i]
                )
                if abs(r) > trial_res:
                    trial_res = abs(r)
            if trial_res < res:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            t = 1.0 / 128.0
        for i in range(4):
            p[i] = p[i] + t * step[i]

    if def_res >= 1e-12:
        warm[4] = 0.0
        return 1
    for i in range(4):
        warm[i] = p[i]
    warm[4] = 1.0

    # ring mode gradient at the inner solution (envelope property)
    ia = p[0] - p[2]
    ib = p[1] - p[3]
    ic = -0.5 * (p[0] + p[2] - p[1] - p[3])
    grad[0] = 0.5 * ia
    grad[1] = 0.5 * ib
    grad[2] = ic
    for j in range(4):
        d = _W[j, 0] * ia + _W[j, 1] * ib + _W[j, 2] * ic - x
        s = math.sin(_arm_u(d, alpha))
        grad[0] += _W[j, 0] * s / beta
        grad[1] += _W[j, 1] * s / beta
        grad[2] += _W[j, 2] * s / beta
    return 0


@njit(cache=True, nogil=True)
def _grad_poly(a, b, c, exps, coefs, split, grad):
    """Polynomial gradients: rows of exps/coefs, split into 3 segments."""
    grad[0] = 0.0
    grad[1] = 0.0
    grad[2] = 0.0
    n = coefs.shape[0]
    for r in range(n):
        v = coefs[r]
        for _ in range(exps[r, 0]):
            v *= a
        for _ in range(exps[r, 1]):
            v *= b
        for _ in range(exps[r, 2]):
            v *= c
        if r < split[0]:
            grad[0] += v
        elif r < split[1]:
            grad[1] += v
        else:
            grad[2] += v


@njit(cache=True, nogil=True)
def _rhs(t, y, dy, kind, pump_mode, x, beta, alpha, zeta, extra_kerr,
         k_a, k_b, k_c, gamma_a, gamma_b, gamma_c,
         omega_s, omega_p, amp_s, amp_i, amp_p_re, amp_p_im, ramp_t,
         exps, coefs, split, warm, grad):
    """Equations of motion; returns a status code (0 ok)."""
    a = y[0]
    b = y[2]
    if pump_mode == PUMP_SOFT:
        c = y[4]
    else:
        wt = omega_p * t
        c = 2.0 * (amp_p_re * math.cos(wt) + amp_p_im * math.sin(wt))

    if kind == GRAD_POLY:
        _grad_poly(a, b, c, exps, coefs, split, grad)
    elif kind == GRAD_TRIG0:
        _grad_trig0(a, b, c, x, beta, grad)
    elif kind == GRAD_ARM:
        _grad_arm(a, b, c, x, beta, alpha, grad)
    else:
        st = _grad_inner(a, b, c, x, beta, alpha, zeta, warm, grad)
        if st != 0:
            return STATUS_INNER_FAIL

    if extra_kerr != 0.0 and kind != GRAD_POLY:
        # energy term -extra_kerr * a^2 b^2 (merged into coefs for POLY)
        grad[0] += -2.0 * extra_kerr * a * b * b
        grad[1] += -2.0 * extra_kerr * a * a * b

    # input drives: travelling cosine of amplitude amp on each port
    f_a = -4.0 * gamma_a * amp_s * omega_s * math.sin(omega_s * t)
    omega_i = omega_p - omega_s
    f_b = -4.0 * gamma_b * amp_i * omega_i * math.sin(omega_i * t)

    dy[0] = y[1]
    dy[1] = -gamma_a * y[1] - k_a * grad[0] + f_a
    dy[2] = y[3]
    dy[3] = -gamma_b * y[3] - k_b * grad[1] + f_b

    if pump_mode == PUMP_SOFT:
        if ramp_t > 0.0 and t < ramp_t:
            arg = 0.5 * math.pi * t / ramp_t
            r = math.sin(arg) ** 2
            rdot = 0.5 * math.pi / ramp_t * math.sin(2.0 * arg)
        else:
            r = 1.0
            rdot = 0.0
        wt = omega_p * t
        f_c = (
            2.0
            * math.sqrt(2.0)
            * gamma_c
            * amp_p_re
            * (rdot * math.cos(wt) - r * omega_p * math.sin(wt))
        )
        dy[4] = y[5]
        dy[5] = -gamma_c * y[5] - k_c * grad[2] + f_c
    return STATUS_OK


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0])
_DP_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
    ]
)
_DP_B = np.array(
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ]
)
_DP_E = np.array(
    [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ]
)


@njit(cache=True, nogil=True)
def integrate_sampled(y, t0, dt_sample, n_samples, samples,
                      kind, pump_mode, x, beta, alpha, zeta, extra_kerr,
                      k_a, k_b, k_c, gamma_a, gamma_b, gamma_c,
                      omega_s, omega_p, amp_s, amp_i, amp_p_re, amp_p_im,
                      ramp_t, exps, coefs, split, warm,
                      rtol, atol, h_init):
    """Advance `y` from t0, recording the state at n_samples even times.

    samples[k] receives the state at t0 + (k+1)*dt_sample.  Steps are
    clamped so sample times are hit exactly.  Returns (status, h_last);
    `y` is updated in place to the final state.
    """
    dim = y.shape[0]
    k_stages = np.empty((7, dim))
    ytmp = np.empty(dim)
    ynew = np.empty(dim)
    grad = np.empty(3)
    dy = np.empty(dim)

    t = t0
    h = h_init
    if h <= 0.0:
        h = dt_sample / 32.0

    st = _rhs(t, y, dy, kind, pump_mode, x, beta, alpha, zeta, extra_kerr,
              k_a, k_b, k_c, gamma_a, gamma_b, gamma_c,
              omega_s, omega_p, amp_s, amp_i, amp_p_re, amp_p_im, ramp_t,
              exps, coefs, split, warm, grad)
    if st != STATUS_OK:
        return st, h
    for i in range(dim):
        k_stages[0, i] = dy[i]

    for ks in range(n_samples):
        t_target = t0 + (ks + 1) * dt_sample
        while t < t_target - 1e-9 * dt_sample:
            if t + h > t_target:
                h = t_target - t
            # stage evaluations (stage 0 already in k_stages[0])
            failed = False
            for s in range(1, 7):
                ts = t + _DP_C[s] * h
                for i in range(dim):
                    acc = 0.0
                    for js in range(s):
                        aa = _DP_A[s, js] if s < 6 else _DP_B[js]
                        acc += aa * k_stages[js, i]
                    ytmp[i] = y[i] + h * acc
                st = _rhs(ts, ytmp, dy, kind, pump_mode, x, beta, alpha,
                          zeta, extra_kerr, k_a, k_b, k_c,
                          gamma_a, gamma_b, gamma_c,
                          omega_s, omega_p, amp_s, amp_i,
                          amp_p_re, amp_p_im, ramp_t,
                          exps, coefs, split, warm, grad)
                if st != STATUS_OK:
                    failed = True
                    break
                for i in range(dim):
                    k_stages[s, i] = dy[i]
            if failed:
                # shrink the step; a transient inner-Newton miss can
                # recover, a genuine fold will collapse the step
                h *= 0.25
                if h < 1e-20:
                    return STATUS_INNER_FAIL, h
                continue
            # 5th-order solution is the last stage's argument (FSAL)
            err_norm = 0.0
            for i in range(dim):
                acc = 0.0
                err = 0.0
                for s in range(7):
                    acc += _DP_B[s] * k_stages[s, i]
                    err += _DP_E[s] * k_stages[s, i]
                ynew[i] = y[i] + h * acc
                sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                e = h * err / sc
                err_norm += e * e
            err_norm = math.sqrt(err_norm / dim)
            if err_norm <= 1.0:
                t = t + h
                for i in range(dim):
                    y[i] = ynew[i]
                    k_stages[0, i] = k_stages[6, i]
                if abs(y[0]) > 50.0 or abs(y[2]) > 50.0 or (
                    dim == 6 and abs(y[4]) > 50.0
                ):
                    return STATUS_DIVERGED, h
            # step-size update (both accept and reject)
            fac = 0.9 * err_norm ** -0.2 if err_norm > 0.0 else 5.0
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0
            h *= fac
            if h < 1e-20:
                return STATUS_STEP_COLLAPSE, h
        # landed on the sample time
        t = t_target
        for i in range(dim):
            samples[ks, i] = y[i]
    return STATUS_OK, h
