"""Ring geometry, radius ramp and the static scaling laws of the phonon model.

Units throughout: micrometers, milliseconds, rad/ms.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.special import erf

from .errors import InvalidDamping, NoRamp

Q_FLOOR = 0.5


def erfinv(y: float, tol: float = 1e-12) -> float:
    """Inverse error function by Newton iteration on ``math.erf``."""
    if not -1.0 < y < 1.0:
        raise ValueError("erfinv argument must lie in (-1, 1)")
    x = 0.0
    for _ in range(100):
        step = (math.erf(x) - y) / (2.0 / math.sqrt(math.pi) * math.exp(-x * x))
        x -= step
        if abs(step) < tol:
            break
    return x


ERFINV_08 = erfinv(0.8)


def _from_dict(cls, d):
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**d)


@dataclass(frozen=True)
class RampProfile:
    """Error-function radius schedule going from ``R_start`` to ``R_end``.

    ``t_mid`` is the erf midpoint; ``rise_10_90`` the 10%-90% rise time.
    """

    R_start: float
    R_end: float
    t_mid: float = 0.0
    rise_10_90: float = 3.6

    def __post_init__(self):
        if not (self.R_start > 0 and self.R_end > 0):
            raise ValueError("radii must be positive")
        if not self.rise_10_90 > 0:
            raise ValueError("rise_10_90 must be positive")

    @property
    def tau(self) -> float:
        return self.rise_10_90 / (2.0 * ERFINV_08)

    @property
    def is_constant(self) -> bool:
        return self.R_start == self.R_end

    @property
    def t_i(self) -> float:
        """Nominal ramp start: the 10% point."""
        return self.t_mid - self.rise_10_90 / 2.0

    @classmethod
    def from_t_i(cls, R_start, R_end, t_i, rise_10_90=3.6):
        return cls(R_start, R_end, t_i + rise_10_90 / 2.0, rise_10_90)

    @classmethod
    def constant(cls, R):
        return cls(R, R, 0.0, 3.6)

    def completion_time(self, fraction: float) -> float:
        """Time at which the ramp has covered ``fraction`` of ``R_end - R_start``."""
        return self.t_mid + self.tau * erfinv(2.0 * fraction - 1.0)

    def mirrored(self) -> "RampProfile":
        return RampProfile(self.R_end, self.R_start, self.t_mid, self.rise_10_90)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return _from_dict(cls, d)


@dataclass(frozen=True)
class ModelParams:
    gamma_H: float = 0.36
    alpha: float = 0.52
    Q_i: float = 7.8
    Q_f: float = 3.5
    c_theta_i: float = 4.36
    dn_i: float = 4.50
    phi_0: float = 0.0
    dtheta: float = 0.0
    m: int = 1
    R_i_ref: float = 38.4
    R_f_ref: float = 11.9
    N_ref: float = 1.0

    def __post_init__(self):
        if not (self.Q_i > 0 and self.Q_f > 0):
            raise ValueError("quality factors must be positive")
        if not self.c_theta_i > 0:
            raise ValueError("c_theta_i must be positive")
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be a positive integer")
        if not math.isfinite(self.gamma_H):
            raise ValueError("gamma_H must be finite")
        if not (self.R_i_ref > 0 and self.R_f_ref > 0 and self.N_ref > 0):
            raise ValueError("reference radii and atom number must be positive")

    def replace(self, **kw) -> "ModelParams":
        d = asdict(self)
        d.update(kw)
        return ModelParams(**d)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return _from_dict(cls, d)


@dataclass(frozen=True)
class PhononState:
    phi: float
    dphi_dt: float
    t: float = 0.0

    def __post_init__(self):
        if not all(map(math.isfinite, (self.phi, self.dphi_dt, self.t))):
            raise ValueError("PhononState fields must be finite")


def radius(profile: RampProfile, t):
    x = (np.asarray(t, dtype=float) - profile.t_mid) / profile.tau
    return profile.R_start + (profile.R_end - profile.R_start) * 0.5 * (1.0 + erf(x))


def radius_rate(profile: RampProfile, t):
    x = (np.asarray(t, dtype=float) - profile.t_mid) / profile.tau
    amp = (profile.R_end - profile.R_start) / (profile.tau * math.sqrt(math.pi))
    return amp * np.exp(-x * x)


def hubble_rate(profile: RampProfile, t):
    """Logarithmic expansion rate Rdot/R in 1/ms."""
    return radius_rate(profile, t) / radius(profile, t)


def _golden_max(f, a, b, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def peak_time(profile: RampProfile, tol: float = 1e-6) -> float:
    """Time of maximal |Rdot/R|."""
    if profile.is_constant:
        raise NoRamp("no ramp")
    tau = profile.tau
    return _golden_max(
        lambda t: abs(float(hubble_rate(profile, t))),
        profile.t_mid - 4 * tau,
        profile.t_mid + 4 * tau,
        tol,
    )


def speed_of_sound(params: ModelParams, R, N=None):
    N = params.N_ref if N is None else N
    half = params.alpha / 2.0
    return (
        params.c_theta_i
        * (np.asarray(R, dtype=float) / params.R_i_ref) ** (-half)
        * (np.asarray(N, dtype=float) / params.N_ref) ** half
    )


def omega(params: ModelParams, R, N=None):
    return params.m * speed_of_sound(params, R, N) / np.asarray(R, dtype=float)


def quality_factor(params: ModelParams, R):
    """Q linear in R through (R_i_ref, Q_i) and (R_f_ref, Q_f), floored at 0.5.

    Raises InvalidDamping where the linear extrapolation is non-positive.
    """
    R = np.asarray(R, dtype=float)
    span = params.R_f_ref - params.R_i_ref
    if span == 0:
        q = np.full_like(R, params.Q_i)
    else:
        q = params.Q_i + (params.Q_f - params.Q_i) * (R - params.R_i_ref) / span
    if np.any(q <= 0):
        raise InvalidDamping("invalid damping")
    q = np.maximum(q, Q_FLOOR)
    return q if q.ndim else float(q)


def damping(params: ModelParams, R, N=None):
    return omega(params, R, N) / (2.0 * quality_factor(params, R))


def density_from_phase(params: ModelParams, R, dphi_dt):
    """dn = -R**alpha * dphi/dt (conversion constant g/hbar set to 1)."""
    return -np.asarray(R, dtype=float) ** params.alpha * np.asarray(dphi_dt, dtype=float)
