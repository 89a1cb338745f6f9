"""Amplitude ratios across a ramp and their dependence on the phonon phase."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData
from .fit import signed_amplitude
from .integrator import accumulated_phase, integrate, n_at, seed_state
from .model import ModelParams, RampProfile, damping, omega, peak_time, radius

DEFAULT_GAMMA_H = (0.0, 0.36, 1.0)


@dataclass
class PhaseSweepPoint:
    phi_peak: float
    ratio: float
    ratio_sigma: float
    t_i: float

    def __post_init__(self):
        if not math.isfinite(self.phi_peak):
            raise ValueError("phi_peak must be finite")
        if not self.ratio > 0:
            raise ValueError("ratio must be positive")


def default_window(params: ModelParams, profile: RampProfile, N=None, periods=4.0,
                   completion=0.99):
    t0 = profile.completion_time(completion)
    w = float(omega(params, profile.R_end, N))
    return t0, t0 + periods * 2 * math.pi / w


def _local_rates(params, profile, N_of_t, t, undamped):
    R = radius(profile, t)
    N = n_at(N_of_t, t, params.N_ref)
    w = omega(params, R, N)
    g = np.zeros_like(w) if undamped else damping(params, R, N)
    return np.sqrt(np.maximum(w * w - g * g, 0.0)), g


def final_amplitude(times, dn, params: ModelParams, profile: RampProfile, N_of_t=None,
                    window=None, t_peak=None, undamped=False):
    """Envelope of the post-ramp oscillation extrapolated back to ``t_peak``.

    Samples inside ``window`` are fitted to
    ``A exp(-gamma_f (t - t_peak)) cos(omega_d,f (t - t_peak) + psi)`` with
    (A, psi) free and the rates taken from ``params`` at ``R_end``.
    Returns (A, sigma_A).
    """
    times = np.asarray(times, dtype=float)
    dn = np.asarray(dn, dtype=float)
    t_peak = peak_time(profile) if t_peak is None else t_peak
    if window is None:
        window = default_window(params, profile, n_at(N_of_t, profile.t_mid, params.N_ref))
    if window[0] < profile.completion_time(0.99) - 1e-9:
        raise ValueError("window must start after 99% ramp completion")
    sel = (times >= window[0]) & (times <= window[1])
    if sel.sum() < 5:
        raise InsufficientData("insufficient data")
    t, y = times[sel], dn[sel]
    if not np.any(y):
        return 0.0, 0.0
    # constant post-ramp rates; the phase offset is absorbed by psi
    N_f = float(n_at(N_of_t, t[-1], params.N_ref))
    wd, g = _local_rates(params, RampProfile.constant(profile.R_end), N_f, t, undamped)
    phase = wd * (t - t_peak)
    env = np.exp(-g * (t - t_peak))
    X = np.column_stack([env * np.cos(phase), -env * np.sin(phase)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    A = math.hypot(*coef)
    dof = len(y) - 2
    resid = y - X @ coef
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.pinv(X.T @ X)
    if A == 0:
        return 0.0, 0.0
    grad = coef / A
    return A, math.sqrt(max(float(grad @ cov @ grad), 0.0))


def trace_final_amplitude(trace, params: ModelParams, window=None, undamped=False):
    """final_amplitude on a measured/synthetic trace (signed slice amplitudes)."""
    s = trace.spec
    dn = signed_amplitude(trace.matrix, params.dtheta, params.m)
    return final_amplitude(s.t_samples, dn, params, s.profile, s.N_series, window,
                           undamped=undamped)


def initial_amplitude(params: ModelParams, profile: RampProfile, N0=None, t_peak=None,
                      undamped=False):
    """Pre-ramp envelope dn_i N0/N_ref exp(-gamma_i t_peak), damping taken at R_start."""
    N0 = params.N_ref if N0 is None else N0
    t_peak = peak_time(profile) if t_peak is None else t_peak
    g = 0.0 if undamped else float(damping(params, profile.R_start, N0))
    return params.dn_i * N0 / params.N_ref * math.exp(-g * t_peak)


def _sweep_point(params, profile, undamped, window, n_window=200):
    t_pk = peak_time(profile)
    phi_peak = accumulated_phase(params, profile, None, t_pk)
    win = default_window(params, profile) if window is None else window
    t_win = np.linspace(win[0], win[1], n_window)
    grid = np.concatenate([[0.0], t_win])
    init = seed_state(params, profile, undamped=undamped)
    traj = integrate(params, profile, None, init, grid, undamped=undamped)
    A_f, s_f = final_amplitude(grid[1:], traj.dn[1:], params, profile, None, win, t_pk,
                               undamped)
    A_i = initial_amplitude(params, profile, None, t_pk, undamped)
    return PhaseSweepPoint(phi_peak, A_f / A_i, s_f / A_i, profile.t_i)


def phase_sweep(params: ModelParams, profile_template: RampProfile, t_i_list=None,
                phi_peak_grid=None, undamped=False, window=None):
    """Amplitude gain versus phonon phase at peak Hubble rate.

    Either shift the ramp start (``t_i_list``, fixed phi_0, as in the
    experiment) or keep the ramp and dial phi_0 so that phi_peak lands on
    ``phi_peak_grid``.
    """
    if (t_i_list is None) == (phi_peak_grid is None):
        raise ValueError("give exactly one of t_i_list or phi_peak_grid")
    pts = []
    tpl = profile_template
    if t_i_list is not None:
        if len(t_i_list) == 0:
            raise ValueError("empty sweep")
        for t_i in t_i_list:
            prof = RampProfile.from_t_i(tpl.R_start, tpl.R_end, float(t_i), tpl.rise_10_90)
            pts.append(_sweep_point(params, prof, undamped, window))
        return pts
    if len(phi_peak_grid) == 0:
        raise ValueError("empty sweep")
    base = accumulated_phase(params.replace(phi_0=0.0), tpl, None, peak_time(tpl))
    for target in phi_peak_grid:
        p = params.replace(phi_0=float(target) - base)
        pts.append(_sweep_point(p, tpl, undamped, window))
    return pts


def adiabatic_scaling(R_i, R_f, alpha, gamma_H=None):
    """WKB amplitude ratio of dn across a slow ramp (gamma_H defaults to alpha)."""
    gamma_H = alpha if gamma_H is None else gamma_H
    return (R_f / R_i) ** (0.75 * alpha - 0.5 - 0.5 * gamma_H)


def slow_profile(params: ModelParams, R_start, R_end, n_periods=100.0):
    """Ramp whose 10-90 time spans ``n_periods`` of the slower endpoint oscillation."""
    w_min = min(float(omega(params, R_start)), float(omega(params, R_end)))
    rise = n_periods * 2 * math.pi / w_min
    tau = RampProfile(R_start, R_end, 0.0, rise).tau
    return RampProfile(R_start, R_end, 6.0 * tau, rise)


def adiabatic_reference(params: ModelParams, R_start=None, R_end=None, n_periods=100.0,
                        phi_0=None):
    """Undamped A_f/A_i through a ramp stretched to ``n_periods`` oscillations."""
    R_start = params.R_i_ref if R_start is None else R_start
    R_end = params.R_f_ref if R_end is None else R_end
    p = params if phi_0 is None else params.replace(phi_0=phi_0)
    prof = slow_profile(p, R_start, R_end, n_periods)
    win = default_window(p, prof, completion=1.0 - 1e-9)
    return _sweep_point(p, prof, True, win).ratio


def gain_curve_family(params: ModelParams, gamma_H_list=DEFAULT_GAMMA_H, n_points=200,
                      phi_range=(math.pi, 3 * math.pi), profile_template=None,
                      undamped=False):
    """{gamma_H: [PhaseSweepPoint, ...]} on a uniform phi_peak grid."""
    tpl = profile_template
    if tpl is None:
        tpl = RampProfile.from_t_i(params.R_i_ref, params.R_f_ref, 38.2)
    grid = np.linspace(phi_range[0], phi_range[1], n_points)
    return {float(g): phase_sweep(params.replace(gamma_H=float(g)), tpl, phi_peak_grid=grid,
                                  undamped=undamped)
            for g in gamma_H_list}


def write_sweep(path, points, extra_columns=None):
    cols = ["phi_peak/pi", "ratio", "sigma", "t_i"]
    rows = [[p.phi_peak / math.pi, p.ratio, p.ratio_sigma, p.t_i] for p in points]
    if extra_columns:
        for name, values in extra_columns.items():
            cols.append(name)
            for r, v in zip(rows, values):
                r.append(v)
    np.savetxt(path, np.array(rows, dtype=float).reshape(len(rows), len(cols)), fmt="%.10g",
               delimiter="\t", header="\t".join(cols))
