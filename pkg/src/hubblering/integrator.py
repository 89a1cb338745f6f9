"""Time integration of the phonon equation along a radius ramp.

    phi'' + [2 gamma(t) + gamma_H Rdot/R] phi' + omega(t)**2 phi = 0
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidDamping, OverdampedUnsupported, StiffFailure
from .model import (
    ModelParams,
    PhononState,
    RampProfile,
    damping,
    density_from_phase,
    hubble_rate,
    omega,
    radius,
)

RTOL = 1e-10
ATOL = 1e-12
MAX_STEPS = 10_000_000


def n_series(N_of_t, N_ref=1.0):
    """Normalize an atom-number spec to step-interpolation arrays (times, values).

    Accepts None (constant ``N_ref``), a scalar, or a sequence of (t, N) pairs.
    """
    if N_of_t is None:
        return np.array([0.0]), np.array([float(N_ref)])
    if np.isscalar(N_of_t):
        return np.array([0.0]), np.array([float(N_of_t)])
    arr = np.asarray(N_of_t, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) == 0:
        raise ValueError("N series must be a sequence of (t, N) pairs")
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise ValueError("N series times must be strictly increasing")
    if np.any(arr[:, 1] <= 0):
        raise ValueError("N values must be positive")
    # repeated values are not change points; dropping them avoids needless restarts
    keep = np.concatenate([[True], arr[1:, 1] != arr[:-1, 1]])
    return np.ascontiguousarray(arr[keep, 0]), np.ascontiguousarray(arr[keep, 1])


def n_at(N_of_t, t, N_ref=1.0):
    times, vals = n_series(N_of_t, N_ref)
    idx = np.clip(np.searchsorted(times, t, side="right") - 1, 0, None)
    return vals[idx]


@dataclass
class Trajectory:
    times: np.ndarray
    phi: np.ndarray
    dphi_dt: np.ndarray
    dn: np.ndarray
    omega_inst: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        if any(len(a) != n for a in (self.phi, self.dphi_dt, self.dn, self.omega_inst)):
            raise ValueError("trajectory arrays must have equal length")

    COLUMNS = ("t", "phi", "dphi_dt", "dn", "omega_inst")

    def to_table(self, path):
        data = np.column_stack([self.times, self.phi, self.dphi_dt, self.dn, self.omega_inst])
        np.savetxt(path, data, fmt="%.12g", delimiter="\t", header="\t".join(self.COLUMNS))

    @classmethod
    def from_table(cls, path):
        data = np.loadtxt(path, delimiter="\t", ndmin=2)
        return cls(*(data[:, i] for i in range(5)))


def rhs(state: PhononState, t, params: ModelParams, profile: RampProfile, N_of_t=None,
        undamped=False):
    R = float(radius(profile, t))
    N = float(n_at(N_of_t, t, params.N_ref))
    w = float(omega(params, R, N))
    gam = 0.0 if undamped else float(damping(params, R, N))
    fric = 2.0 * gam + params.gamma_H * float(hubble_rate(profile, t))
    return state.dphi_dt, -fric * state.dphi_dt - w * w * state.phi


def _check(status):
    if status == kernels.INVALID_DAMPING:
        raise InvalidDamping("invalid damping")
    if status == kernels.STEP_UNDERFLOW:
        raise StiffFailure("stiff failure: step size underflow")
    if status == kernels.MAX_STEPS:
        raise StiffFailure("stiff failure: step budget exhausted")


def solve(params, profile, N_of_t, y0, t_grid, undamped=False, fixed_h=0.0,
          rtol=RTOL, atol=ATOL):
    """Raw solver call. ``y0`` is (2, K); returns array (len(t_grid), 2, K)."""
    times, vals = n_series(N_of_t, params.N_ref)
    prm = kernels.pack(params, profile, undamped)
    t_grid = np.ascontiguousarray(t_grid, dtype=float)
    y0 = np.ascontiguousarray(np.asarray(y0, dtype=float).reshape(2, -1))
    out, status, _ = kernels.dopri_linear(
        prm, times, vals, y0, t_grid, rtol, atol, float(fixed_h), MAX_STEPS)
    _check(status)
    return out


def unit_basis(params, profile, N_of_t, t_grid, undamped=False):
    """dphi/dt of the solutions started from (1, 0) and (0, 1); shape (len(t_grid), 2).

    Any trajectory from ``t_grid[0]`` is a linear combination of these two.
    """
    return solve(params, profile, N_of_t, np.eye(2), t_grid, undamped=undamped)[:, 1, :]


def integrate(params: ModelParams, profile: RampProfile, N_of_t, init: PhononState,
              t_grid, undamped=False, fixed_h=0.0) -> Trajectory:
    """Integrate from ``init`` (taken at ``t_grid[0]``) and sample on ``t_grid``.

    ``t_grid`` may be decreasing for backward integration.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    d = np.diff(t_grid)
    if len(t_grid) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("t_grid must be strictly monotone")
    out = solve(params, profile, N_of_t, [[init.phi], [init.dphi_dt]], t_grid,
                undamped=undamped, fixed_h=fixed_h)
    phi, dphi = out[:, 0, 0], out[:, 1, 0]
    R = radius(profile, t_grid)
    N = n_at(N_of_t, t_grid, params.N_ref)
    return Trajectory(
        times=t_grid,
        phi=phi,
        dphi_dt=dphi,
        dn=density_from_phase(params, R, dphi),
        omega_inst=omega(params, R, N),
    )


def seed_state(params: ModelParams, profile: RampProfile, N0=None, amplitude=None,
               phase=None, t0=0.0, undamped=False) -> PhononState:
    """Initial (phi, dphi/dt) such that locally dn(t) = A e^{-gamma t} cos(w_d t + phase).

    ``A`` defaults to ``params.dn_i`` and ``phase`` to ``params.phi_0``. The
    atom-number factor N/N_ref is applied to dn downstream, not here.
    """
    A = params.dn_i if amplitude is None else amplitude
    ph = params.phi_0 if phase is None else phase
    N0 = params.N_ref if N0 is None else N0
    R0 = float(radius(profile, t0))
    w = float(omega(params, R0, N0))
    gam = 0.0 if undamped else float(damping(params, R0, N0))
    wd = math.sqrt(max(w * w - gam * gam, 0.0))
    scale = A / R0 ** params.alpha
    dphi0 = -scale * math.cos(ph)
    phi0 = scale * (gam * math.cos(ph) - wd * math.sin(ph)) / (w * w)
    return PhononState(phi0, dphi0, t0)


def _analytic(params, R, N, init, t, undamped):
    w = float(omega(params, R, N))
    gam = 0.0 if undamped else float(damping(params, R, N))
    if gam >= w:
        raise OverdampedUnsupported("overdamped unsupported")
    wd = math.sqrt(w * w - gam * gam)
    s = np.asarray(t, dtype=float) - init.t
    env = np.exp(-gam * s)
    c, sn = np.cos(wd * s), np.sin(wd * s)
    p0, v0 = init.phi, init.dphi_dt
    phi = env * (p0 * c + (v0 + gam * p0) / wd * sn)
    dphi = env * (v0 * c - (w * w * p0 + gam * v0) / wd * sn)
    return phi, dphi


def analytic_constant_R(params: ModelParams, R, N, init: PhononState, t,
                        undamped=False) -> PhononState:
    """Closed-form underdamped solution at fixed radius (no Hubble term)."""
    phi, dphi = _analytic(params, R, N, init, t, undamped)
    return PhononState(float(phi), float(dphi), float(t))


def analytic_constant_R_series(params, R, N, init, t, undamped=False):
    """Array version of :func:`analytic_constant_R`; returns (phi, dphi_dt)."""
    return _analytic(params, R, N, init, t, undamped)


def accumulated_phase(params: ModelParams, profile: RampProfile, N_of_t, t_end,
                      panels=10_000) -> float:
    """phi_0 + integral of omega(t) over [0, t_end], composite Simpson."""
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    if t_end == 0:
        return params.phi_0
    if panels % 2:
        panels += 1
    t = np.linspace(0.0, t_end, panels + 1)
    w = omega(params, radius(profile, t), n_at(N_of_t, t, params.N_ref))
    h = t_end / panels
    integral = h / 3.0 * (w[0] + w[-1] + 4.0 * w[1:-1:2].sum() + 2.0 * w[2:-1:2].sum())
    return params.phi_0 + integral


def volume_ratio(params: ModelParams, profile: RampProfile, t):
    """V(t)/V(t0) implied by the friction term, (R(t)/R(t0))**gamma_H."""
    t = np.asarray(t, dtype=float)
    R = radius(profile, t)
    return (R / radius(profile, t.flat[0])) ** params.gamma_H


def wronskian_invariant(params: ModelParams, profile: RampProfile, init_a: PhononState,
                        init_b: PhononState, t_grid, N_of_t=None):
    """W(t) * V_rel(t) for two undamped solutions; constant in exact arithmetic."""
    y0 = [[init_a.phi, init_b.phi], [init_a.dphi_dt, init_b.dphi_dt]]
    out = solve(params, profile, N_of_t, y0, t_grid, undamped=True)
    W = out[:, 0, 0] * out[:, 1, 1] - out[:, 0, 1] * out[:, 1, 0]
    return W * volume_ratio(params, profile, t_grid)


def adiabatic_invariant(traj: Trajectory, params: ModelParams, profile: RampProfile):
    """V_rel (phi'^2 + omega^2 phi^2) / omega along a trajectory."""
    w = traj.omega_inst
    return volume_ratio(params, profile, traj.times) * (
        traj.dphi_dt ** 2 + w ** 2 * traj.phi ** 2) / w
