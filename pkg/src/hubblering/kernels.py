"""Compiled inner loops: Dormand-Prince 5(4) for the phonon equation.

The equation is linear in (phi, dphi/dt), so the kernel advances ``K``
solutions that share one step sequence. Coefficients are packed into a flat
float array (see ``pack``) so the kernel signature stays numba friendly.
"""
import math

import numpy as np

from ._accel import njit

# packed coefficient layout
R_START, R_END, T_MID, TAU, GAMMA_H, ALPHA, Q_I, Q_F, C_I, R_I_REF, R_F_REF, N_REF, M, UNDAMPED = range(14)
N_PACKED = 14

OK, INVALID_DAMPING, STEP_UNDERFLOW, MAX_STEPS = 0, 1, 2, 3

Q_FLOOR = 0.5
SQRT_PI = math.sqrt(math.pi)

C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    -71.0 / 57600.0, 71.0 / 16695.0, -71.0 / 1920.0, 17253.0 / 339200.0, -22.0 / 525.0, 1.0 / 40.0)

# dense output polynomial, rows = stages, cols = theta**1..theta**4
P = np.array([
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
])


def pack(params, profile, undamped=False):
    prm = np.empty(N_PACKED)
    prm[R_START] = profile.R_start
    prm[R_END] = profile.R_end
    prm[T_MID] = profile.t_mid
    prm[TAU] = profile.tau
    prm[GAMMA_H] = params.gamma_H
    prm[ALPHA] = params.alpha
    prm[Q_I] = params.Q_i
    prm[Q_F] = params.Q_f
    prm[C_I] = params.c_theta_i
    prm[R_I_REF] = params.R_i_ref
    prm[R_F_REF] = params.R_f_ref
    prm[N_REF] = params.N_ref
    prm[M] = params.m
    prm[UNDAMPED] = 1.0 if undamped else 0.0
    return prm


@njit
def coefficients(t, N, prm):
    """Return (friction, omega**2, ok) of  phi'' + friction phi' + omega**2 phi = 0."""
    x = (t - prm[T_MID]) / prm[TAU]
    dR = prm[R_END] - prm[R_START]
    R = prm[R_START] + dR * 0.5 * (1.0 + math.erf(x))
    Rdot = dR / (prm[TAU] * SQRT_PI) * math.exp(-x * x)
    half = 0.5 * prm[ALPHA]
    c = prm[C_I] * (R / prm[R_I_REF]) ** (-half) * (N / prm[N_REF]) ** half
    w = prm[M] * c / R
    fric = prm[GAMMA_H] * Rdot / R
    if prm[UNDAMPED] == 0.0:
        span = prm[R_F_REF] - prm[R_I_REF]
        if span == 0.0:
            q = prm[Q_I]
        else:
            q = prm[Q_I] + (prm[Q_F] - prm[Q_I]) * (R - prm[R_I_REF]) / span
        if q <= 0.0:
            return 0.0, 0.0, False
        if q < Q_FLOOR:
            q = Q_FLOOR
        fric += w / q
    return fric, w * w, True


@njit
def _segment_scale(N, prm):
    """m c_i R_i**(alpha/2) (N/N_ref)**(alpha/2): omega = scale * R**-(1+alpha/2)."""
    half = 0.5 * prm[ALPHA]
    return prm[M] * prm[C_I] * prm[R_I_REF] ** half * (N / prm[N_REF]) ** half


@njit
def _rhs(t, kN, prm, y, out):
    # same physics as coefficients(), with the N-dependent factor hoisted
    dR = prm[R_END] - prm[R_START]
    if dR == 0.0:
        R = prm[R_START]
        fric = 0.0
    else:
        x = (t - prm[T_MID]) / prm[TAU]
        R = prm[R_START] + dR * 0.5 * (1.0 + math.erf(x))
        fric = prm[GAMMA_H] * dR / (prm[TAU] * SQRT_PI) * math.exp(-x * x) / R
    w = kN * R ** (-1.0 - 0.5 * prm[ALPHA])
    ok = True
    if prm[UNDAMPED] == 0.0:
        span = prm[R_F_REF] - prm[R_I_REF]
        if span == 0.0:
            q = prm[Q_I]
        else:
            q = prm[Q_I] + (prm[Q_F] - prm[Q_I]) * (R - prm[R_I_REF]) / span
        if q <= 0.0:
            ok = False
        elif q < Q_FLOOR:
            q = Q_FLOOR
        fric += w / q
    w2 = w * w
    K = y.shape[1]
    for k in range(K):
        out[0, k] = y[1, k]
        out[1, k] = -fric * y[1, k] - w2 * y[0, k]
    return ok


@njit
def _n_at(n_times, n_vals, t):
    """Step interpolation: value of the last breakpoint <= t (first value before)."""
    idx = np.searchsorted(n_times, t, side="right") - 1
    if idx < 0:
        idx = 0
    return n_vals[idx]


@njit
def _rms_scaled(a, y, rtol, atol):
    s = 0.0
    n = 0
    for i in range(a.shape[0]):
        for k in range(a.shape[1]):
            sc = atol + rtol * abs(y[i, k])
            s += (a[i, k] / sc) ** 2
            n += 1
    return math.sqrt(s / n)


@njit
def _initial_step(t, y, f0, N, prm, direction, rtol, atol, work, fwork):
    d0 = _rms_scaled(y, y, rtol, atol)
    d1 = _rms_scaled(f0, y, rtol, atol)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    for i in range(y.shape[0]):
        for k in range(y.shape[1]):
            work[i, k] = y[i, k] + direction * h0 * f0[i, k]
    _rhs(t + direction * h0, N, prm, work, fwork)
    for i in range(y.shape[0]):
        for k in range(y.shape[1]):
            work[i, k] = fwork[i, k] - f0[i, k]
    d2 = _rms_scaled(work, y, rtol, atol) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1)


@njit
def dopri_linear(prm, n_times, n_vals, y0, t_eval, rtol, atol, fixed_h, max_steps):
    """Integrate from ``t_eval[0]`` through ``t_eval`` (monotone either way).

    y0 has shape (2, K). Returns (out[len(t_eval), 2, K], status, n_steps).
    N(t) is piecewise constant; the solver restarts at each change point so
    no step straddles a discontinuity. ``fixed_h > 0`` disables error control.
    """
    ne = t_eval.shape[0]
    K = y0.shape[1]
    out = np.full((ne, 2, K), np.nan)
    if ne == 0:
        return out, OK, 0
    t = t_eval[0]
    tf = t_eval[ne - 1]
    y = y0.copy()
    out[0] = y
    if ne == 1 or tf == t:
        for i in range(1, ne):
            out[i] = y
        return out, OK, 0
    direction = 1.0 if tf > t else -1.0

    ks = np.empty((7, 2, K))
    ynew = np.empty((2, K))
    work = np.empty((2, K))
    err = np.empty((2, K))
    ie = 1
    n_steps = 0
    h = 0.0
    first = True

    while direction * (tf - t) > 0.0:
        # segment end: next N change point strictly ahead, else tf
        tb = tf
        for j in range(1, n_times.shape[0]):
            tj = n_times[j]
            if n_vals[j] != n_vals[j - 1] and direction * (tj - t) > 0.0 and direction * (tb - tj) > 0.0:
                tb = tj
        N = _segment_scale(_n_at(n_times, n_vals, 0.5 * (t + tb)), prm)
        if not _rhs(t, N, prm, y, ks[0]):
            return out, INVALID_DAMPING, n_steps
        if fixed_h > 0.0:
            h = fixed_h
        elif first:
            h = _initial_step(t, y, ks[0], N, prm, direction, rtol, atol, work, ks[1])
            first = False
        seg_len = abs(tb - t)
        while direction * (tb - t) > 0.0:
            last = False
            if h >= abs(tb - t) * (1.0 - 1e-12):
                h_try = abs(tb - t)
                last = True
            else:
                h_try = h
            hs = direction * h_try
            # stages
            for i in range(2):
                for k in range(K):
                    work[i, k] = y[i, k] + hs * A21 * ks[0, i, k]
            ok = _rhs(t + C2 * hs, N, prm, work, ks[1])
            for i in range(2):
                for k in range(K):
                    work[i, k] = y[i, k] + hs * (A31 * ks[0, i, k] + A32 * ks[1, i, k])
            ok = _rhs(t + C3 * hs, N, prm, work, ks[2]) and ok
            for i in range(2):
                for k in range(K):
                    work[i, k] = y[i, k] + hs * (
                        A41 * ks[0, i, k] + A42 * ks[1, i, k] + A43 * ks[2, i, k])
            ok = _rhs(t + C4 * hs, N, prm, work, ks[3]) and ok
            for i in range(2):
                for k in range(K):
                    work[i, k] = y[i, k] + hs * (
                        A51 * ks[0, i, k] + A52 * ks[1, i, k] + A53 * ks[2, i, k]
                        + A54 * ks[3, i, k])
            ok = _rhs(t + C5 * hs, N, prm, work, ks[4]) and ok
            for i in range(2):
                for k in range(K):
                    work[i, k] = y[i, k] + hs * (
                        A61 * ks[0, i, k] + A62 * ks[1, i, k] + A63 * ks[2, i, k]
                        + A64 * ks[3, i, k] + A65 * ks[4, i, k])
            ok = _rhs(t + hs, N, prm, work, ks[5]) and ok
            for i in range(2):
                for k in range(K):
                    ynew[i, k] = y[i, k] + hs * (
                        B1 * ks[0, i, k] + B3 * ks[2, i, k] + B4 * ks[3, i, k]
                        + B5 * ks[4, i, k] + B6 * ks[5, i, k])
            t_new = tb if last else t + hs
            ok = _rhs(t_new, N, prm, ynew, ks[6]) and ok
            if not ok:
                return out, INVALID_DAMPING, n_steps
            n_steps += 1
            if n_steps > max_steps:
                return out, MAX_STEPS, n_steps

            if fixed_h > 0.0:
                err_norm = 0.0
            else:
                for i in range(2):
                    for k in range(K):
                        err[i, k] = hs * (
                            E1 * ks[0, i, k] + E3 * ks[2, i, k] + E4 * ks[3, i, k]
                            + E5 * ks[4, i, k] + E6 * ks[5, i, k] + E7 * ks[6, i, k])
                        work[i, k] = max(abs(y[i, k]), abs(ynew[i, k]))
                err_norm = _rms_scaled(err, work, rtol, atol)

            if err_norm <= 1.0:
                # dense output on accepted step
                while ie < ne and direction * (t_eval[ie] - t_new) <= 0.0:
                    th = (t_eval[ie] - t) / hs
                    th2 = th * th
                    th3 = th2 * th
                    th4 = th3 * th
                    for i in range(2):
                        for k in range(K):
                            acc = 0.0
                            for s in range(7):
                                acc += ks[s, i, k] * (
                                    P[s, 0] * th + P[s, 1] * th2 + P[s, 2] * th3 + P[s, 3] * th4)
                            out[ie, i, k] = y[i, k] + hs * acc
                    ie += 1
                t = t_new
                for i in range(2):
                    for k in range(K):
                        y[i, k] = ynew[i, k]
                        ks[0, i, k] = ks[6, i, k]
                if fixed_h == 0.0:
                    if err_norm == 0.0:
                        fac = 10.0
                    else:
                        fac = min(10.0, 0.9 * err_norm ** -0.2)
                    if not last:
                        h = h_try * fac
                    else:
                        h = max(h, h_try * fac)
            else:
                h = h_try * max(0.2, 0.9 * err_norm ** -0.2)
                if h < 1e-14 * max(1.0, abs(t)) or h < 1e-12 * seg_len:
                    return out, STEP_UNDERFLOW, n_steps
    while ie < ne:
        out[ie] = y
        ie += 1
    return out, OK, n_steps
