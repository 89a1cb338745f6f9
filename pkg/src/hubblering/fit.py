"""Slice fits and the shared-parameter global fit over many traces."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import Overparameterized
from .integrator import ATOL, MAX_STEPS, RTOL, _check, n_series, seed_state
from .lm import FitResult, levenberg_marquardt, numeric_jacobian
from .model import ModelParams, damping, omega, radius
from .synth import Dataset

GLOBAL_NAMES = ("gamma_H", "alpha", "Q_i", "Q_f", "c_theta_i", "dn_i")
ODE_GLOBALS = GLOBAL_NAMES[:5]
GLOBAL_BOUNDS = {
    "gamma_H": (-2.0, 3.0),
    "alpha": (0.2, 1.5),
    "Q_i": (0.5, 50.0),
    "Q_f": (0.5, 50.0),
    "c_theta_i": (1e-6, np.inf),
    "dn_i": (1e-9, np.inf),
}


# -- slice fits --------------------------------------------------------------

def slice_fit(column, theta=None, m=1):
    """Fit column(theta) = a sin(m theta) + b cos(m theta) by least squares.

    Returns (amplitude, offset) with amplitude >= 0 and the column written
    as amplitude * sin(m theta + offset).
    """
    column = np.asarray(column, dtype=float)
    n = len(column)
    if n < 3:
        raise ValueError("slice fit needs at least 3 theta bins")
    if theta is None:
        theta = 2 * np.pi * np.arange(n) / n
    X = np.column_stack([np.sin(m * theta), np.cos(m * theta)])
    (a, b), *_ = np.linalg.lstsq(X, column, rcond=None)
    amp = math.hypot(a, b)
    if amp == 0.0:
        return 0.0, 0.0
    return amp, math.atan2(b, a)


def slice_fit_matrix(matrix, m=1):
    """Vectorized slice fits over all time columns; returns (amp, offset, rss)."""
    n = matrix.shape[0]
    theta = 2 * np.pi * np.arange(n) / n
    X = np.column_stack([np.sin(m * theta), np.cos(m * theta)])
    coef, *_ = np.linalg.lstsq(X, matrix, rcond=None)
    a, b = coef
    amp = np.hypot(a, b)
    off = np.where(amp > 0, np.arctan2(b, a), 0.0)
    rss = ((matrix - X @ coef) ** 2).sum(axis=0)
    return amp, off, rss


def signed_amplitude(matrix, dtheta, m=1):
    """Projection of each column onto sin(m theta + dtheta)."""
    n = matrix.shape[0]
    theta = 2 * np.pi * np.arange(n) / n
    basis = np.sin(m * theta + dtheta)
    return basis @ matrix / (basis @ basis)


# -- parameter layout --------------------------------------------------------

@dataclass(frozen=True)
class FitVariant:
    share_phi0: bool = True
    share_dtheta: bool = True
    time_resolved_N: bool = False

    @property
    def name(self):
        return "{}-{}-{}".format(
            "phi0shared" if self.share_phi0 else "phi0each",
            "dthetashared" if self.share_dtheta else "dthetaeach",
            "Nseries" if self.time_resolved_N else "Nfitted",
        )

    @classmethod
    def all(cls):
        return [cls(a, b, c) for a, b, c in itertools.product((True, False), repeat=3)]

    @classmethod
    def from_name(cls, name):
        for v in cls.all():
            if v.name == name:
                return v
        raise ValueError(f"unknown variant {name!r}")

    def n_free(self, n_traces):
        return (len(GLOBAL_NAMES) + (1 if self.share_phi0 else n_traces)
                + (1 if self.share_dtheta else n_traces)
                + (0 if self.time_resolved_N else n_traces))


@dataclass
class ParamVector:
    gamma_H: float
    alpha: float
    Q_i: float
    Q_f: float
    c_theta_i: float
    dn_i: float
    phi_0: np.ndarray
    dtheta: np.ndarray
    n_scale: np.ndarray | None = None

    @property
    def globals(self):
        return {k: float(getattr(self, k)) for k in GLOBAL_NAMES}

    def flatten(self):
        parts = [np.array([getattr(self, k) for k in GLOBAL_NAMES], dtype=float),
                 np.atleast_1d(self.phi_0), np.atleast_1d(self.dtheta)]
        if self.n_scale is not None:
            parts.append(np.atleast_1d(self.n_scale))
        return np.concatenate(parts).astype(float)

    @classmethod
    def from_flat(cls, x, variant: FitVariant, n_traces):
        x = np.asarray(x, dtype=float)
        i = len(GLOBAL_NAMES)
        n_phi = 1 if variant.share_phi0 else n_traces
        n_dth = 1 if variant.share_dtheta else n_traces
        phi = x[i:i + n_phi]
        dth = x[i + n_phi:i + n_phi + n_dth]
        rest = x[i + n_phi + n_dth:]
        n_scale = None if variant.time_resolved_N else rest[:n_traces]
        if len(x) != variant.n_free(n_traces):
            raise ValueError("flat vector length does not match variant layout")
        return cls(*x[:i], phi_0=phi.copy(), dtheta=dth.copy(),
                   n_scale=None if n_scale is None else n_scale.copy())

    @classmethod
    def from_params(cls, params: ModelParams, variant: FitVariant, dataset: Dataset):
        K = len(dataset)
        phi = np.full(1 if variant.share_phi0 else K, params.phi_0)
        dth = np.full(1 if variant.share_dtheta else K, params.dtheta)
        n_scale = None if variant.time_resolved_N else mean_atom_numbers(dataset)
        return cls(*(getattr(params, k) for k in GLOBAL_NAMES), phi_0=phi, dtheta=dth,
                   n_scale=n_scale)

    def for_variant(self, variant: FitVariant, dataset: Dataset):
        """Re-lay out onto another variant (shared values broadcast, per-trace averaged)."""
        K = len(dataset)
        phi = self.phi_0
        phi = (np.array([_circmean(phi)]) if variant.share_phi0
               else np.broadcast_to(phi, (K,)).copy())
        dth = self.dtheta
        dth = (np.array([_circmean(dth)]) if variant.share_dtheta
               else np.broadcast_to(dth, (K,)).copy())
        if variant.time_resolved_N:
            n_scale = None
        else:
            n_scale = (mean_atom_numbers(dataset) if self.n_scale is None
                       else np.asarray(self.n_scale, float).copy())
        return replace(self, phi_0=phi, dtheta=dth, n_scale=n_scale)

    def to_params(self, dataset: Dataset, m=1, trace=0):
        phi = self.phi_0[0 if len(self.phi_0) == 1 else trace]
        dth = self.dtheta[0 if len(self.dtheta) == 1 else trace]
        return ModelParams(**self.globals, phi_0=float(phi), dtheta=float(dth), m=m,
                           R_i_ref=dataset.R_i_ref, R_f_ref=dataset.R_f_ref,
                           N_ref=dataset.N_ref)


def parameter_names(variant: FitVariant, trace_ids):
    names = list(GLOBAL_NAMES)
    names += ["phi_0"] if variant.share_phi0 else [f"phi_0[{t}]" for t in trace_ids]
    names += ["dtheta"] if variant.share_dtheta else [f"dtheta[{t}]" for t in trace_ids]
    if not variant.time_resolved_N:
        names += [f"N[{t}]" for t in trace_ids]
    return names


def parameter_bounds(variant: FitVariant, n_traces):
    n = variant.n_free(n_traces)
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    for i, k in enumerate(GLOBAL_NAMES):
        lo[i], hi[i] = GLOBAL_BOUNDS[k]
    if not variant.time_resolved_N:
        lo[n - n_traces:] = 1e-6
    return lo, hi


def mean_atom_numbers(dataset: Dataset):
    return np.array([float(np.mean(tr.spec.N_at(tr.spec.t_samples))) for tr in dataset.traces])


def _circmean(a, w=None):
    a = np.atleast_1d(a)
    w = np.ones_like(a) if w is None else w
    return float(np.angle(np.sum(w * np.exp(1j * a))))


# -- model -------------------------------------------------------------------

class GlobalModel:
    """Residuals of all traces under one parameter layout.

    ``n_prior_sigma`` is the relative uncertainty of the measured mean atom
    number used to anchor fitted per-trace N (the amplitude and sound-speed
    scale are otherwise degenerate with dn_i and c_theta_i).
    """

    def __init__(self, dataset: Dataset, variant: FitVariant, m=1, n_prior_sigma=0.01,
                 noise_scale=None):
        if len(dataset.ramp_kinds) > 1:
            raise ValueError("expansion and contraction traces cannot share one fit")
        self.dataset = dataset
        self.variant = variant
        self.m = m
        self.K = len(dataset)
        self.names = parameter_names(variant, [t.spec.trace_id for t in dataset.traces])
        self.bounds = parameter_bounds(variant, self.K)
        self.n_free = len(self.names)
        self._traces = []
        for tr in dataset.traces:
            s = tr.spec
            t = s.t_samples
            grid = t if t[0] == 0.0 else np.concatenate([[0.0], t])
            times, vals = n_series(s.N_series)
            self._traces.append(dict(
                grid=np.ascontiguousarray(grid),
                skip=len(grid) - len(t),
                n_times=times,
                n_vals=vals,
                N_t=s.N_at(t),
                N0=float(s.N_at(0.0)),
                R_t=radius(s.profile, t),
                theta=s.theta,
                profile=s.profile,
                data=tr.matrix.ravel(),
            ))
        self.n_data = sum(len(d["data"]) for d in self._traces)
        self.N_mean = mean_atom_numbers(dataset)
        if noise_scale is None:
            rss = sum(slice_fit_matrix(tr.matrix, m)[2].sum() for tr in dataset.traces)
            dof = self.n_data - 2 * sum(tr.matrix.shape[1] for tr in dataset.traces)
            rms = math.sqrt(sum(float(tr.matrix.ravel() @ tr.matrix.ravel())
                                for tr in dataset.traces) / self.n_data)
            noise_scale = max(math.sqrt(rss / max(dof, 1)), 1e-3 * rms)
        self.noise_scale = noise_scale
        self.prior_weight = noise_scale / n_prior_sigma
        self.n_resid = self.n_data + (0 if variant.time_resolved_N else self.K)
        self.dof = self.n_resid - self.n_free
        self.n_evals = 0

    # layout helpers
    def unpack(self, x) -> ParamVector:
        return ParamVector.from_flat(x, self.variant, self.K)

    def _phi(self, pv, k):
        return pv.phi_0[0 if self.variant.share_phi0 else k]

    def _dth(self, pv, k):
        return pv.dtheta[0 if self.variant.share_dtheta else k]

    def _n_const(self, pv, k):
        return None if pv.n_scale is None else float(pv.n_scale[k])

    def _params(self, pv):
        ds = self.dataset
        return ModelParams(**pv.globals, m=self.m, R_i_ref=ds.R_i_ref, R_f_ref=ds.R_f_ref,
                           N_ref=ds.N_ref)

    def basis(self, pv, k):
        """dphi/dt of the two unit initial states, shape (len(t_samples), 2)."""
        d = self._traces[k]
        prm = kernels.pack(self._params(pv), d["profile"])
        n = self._n_const(pv, k)
        if n is None:
            times, vals = d["n_times"], d["n_vals"]
        else:
            times, vals = np.array([0.0]), np.array([n])
        out, status, _ = kernels.dopri_linear(
            prm, times, vals, np.eye(2), d["grid"], RTOL, ATOL, 0.0, MAX_STEPS)
        _check(status)
        return out[d["skip"]:, 1, :]

    def trace_model(self, pv, k, basis):
        d = self._traces[k]
        params = self._params(pv)
        n = self._n_const(pv, k)
        N0 = d["N0"] if n is None else n
        N_t = d["N_t"] if n is None else n
        init = seed_state(params, d["profile"], N0=N0, phase=self._phi(pv, k))
        dphi = basis @ np.array([init.phi, init.dphi_dt])
        dn = -d["R_t"] ** params.alpha * dphi * (N_t / params.N_ref)
        ang = np.sin(self.m * d["theta"] + self._dth(pv, k))
        return np.outer(ang, dn).ravel()

    def _assemble(self, pv, blocks):
        parts = [blocks[k] - self._traces[k]["data"] for k in range(self.K)]
        if pv.n_scale is not None:
            parts.append(self.prior_weight * (pv.n_scale - self.N_mean))
        return np.concatenate(parts)

    def residuals(self, x):
        pv = self.unpack(x)
        self.n_evals += 1
        try:
            blocks = [self.trace_model(pv, k, self.basis(pv, k)) for k in range(self.K)]
        except (ArithmeticError, ValueError, RuntimeError):
            return np.full(self.n_resid, np.inf)
        return self._assemble(pv, blocks)

    def model_blocks(self, x):
        pv = self.unpack(x)
        return [self.trace_model(pv, k, self.basis(pv, k)).reshape(
            self.dataset.traces[k].matrix.shape) for k in range(self.K)]

    def _column_kind(self, i):
        name = self.names[i]
        if name in ODE_GLOBALS:
            return "ode", None
        if name == "dn_i" or name in ("phi_0", "dtheta"):
            return "cheap", None
        tid_index = self._trace_index_of(name)
        if name.startswith("N["):
            return "ode", tid_index
        return "cheap", tid_index

    def _trace_index_of(self, name):
        tid = name[name.index("[") + 1:-1]
        for k, tr in enumerate(self.dataset.traces):
            if tr.spec.trace_id == tid:
                return k
        raise KeyError(name)

    def jacobian(self, x, r0=None, rel_step=1e-6, abs_step=1e-8):
        """Forward-difference Jacobian that only re-integrates affected traces."""
        x = np.asarray(x, dtype=float)
        pv = self.unpack(x)
        bases = [self.basis(pv, k) for k in range(self.K)]
        blocks = [self.trace_model(pv, k, bases[k]) for k in range(self.K)]
        offsets = np.cumsum([0] + [len(b) for b in blocks])
        lo, hi = self.bounds
        J = np.zeros((self.n_resid, self.n_free))
        for i in range(self.n_free):
            h = max(rel_step * abs(x[i]), abs_step)
            if x[i] + h > hi[i]:
                h = -h
            xp = x.copy()
            xp[i] += h
            pvp = self.unpack(xp)
            kind, only = self._column_kind(i)
            traces = range(self.K) if only is None else (only,)
            for k in traces:
                b = self.basis(pvp, k) if kind == "ode" else bases[k]
                J[offsets[k]:offsets[k + 1], i] = (self.trace_model(pvp, k, b) - blocks[k]) / h
            if self.names[i].startswith("N["):
                J[self.n_data + only, i] = self.prior_weight
        self.n_evals += 1
        return J


def numeric_jacobian_model(model: GlobalModel, x):
    """Plain forward-difference Jacobian of the full residual (reference route)."""
    return numeric_jacobian(model.residuals, x, model.bounds)


# -- initial guesses ---------------------------------------------------------

def _damped_sinusoid_fit(t, y):
    """Fit y = e^{-g t}(a cos w t + b sin w t) by grid search plus LM refinement."""
    span = t[-1] - t[0]
    dt = np.median(np.diff(t))
    w_grid = np.linspace(2 * np.pi / (2 * span), np.pi / dt * 0.95, 300)
    best = None
    for w in w_grid:
        for q in (1.0, 2.0, 3.5, 6.0, 10.0, 20.0):
            g = w / (2 * q)
            e = np.exp(-g * (t - t[0]))
            X = np.column_stack([e * np.cos(w * t), e * np.sin(w * t)])
            coef, *_ = np.linalg.lstsq(X, y, rcond=None)
            rss = float(((X @ coef - y) ** 2).sum())
            if best is None or rss < best[0]:
                best = (rss, w, g, coef)
    _, w, g, (a, b) = best

    def res(p):
        a_, b_, w_, g_ = p
        return np.exp(-g_ * (t - t[0])) * (a_ * np.cos(w_ * t) + b_ * np.sin(w_ * t)) - y

    fit = levenberg_marquardt(
        res, lambda p, r: numeric_jacobian(res, p, f0=r), np.array([a, b, w, g]),
        bounds=([-np.inf, -np.inf, 1e-6, 0.0], [np.inf, np.inf, np.inf, np.inf]),
        max_iter=100)
    a, b, w, g = fit.x
    amp0 = math.hypot(a, b) * math.exp(g * t[0])
    # y ~ amp e^{-g t} cos(w t + phase)
    phase = math.atan2(-b, a)
    return amp0, w, g, phase


def initial_guess(dataset: Dataset, variant: FitVariant = FitVariant(), m=1) -> ParamVector:
    """Moment-style starting point derived from the data alone."""
    traces = dataset.traces
    K = len(traces)
    offs = []
    weights = []
    for tr in traces:
        amp, off, _ = slice_fit_matrix(tr.matrix, m)
        offs.append(off)
        weights.append(amp ** 2)
    offs = np.concatenate(offs)
    weights = np.concatenate(weights)
    # offsets are defined modulo pi (sign of dn unknown)
    dtheta = 0.5 * _circmean(2 * offs, weights)
    dth_each = []
    for tr in traces:
        amp, off, _ = slice_fit_matrix(tr.matrix, m)
        dth_each.append(0.5 * _circmean(2 * off, amp ** 2))

    const = [k for k, tr in enumerate(traces) if tr.spec.kind == "constant-R"]
    if len(const) < 2:
        raise ValueError("initial guess needs at least two constant-R traces")
    R_k, w_k, q_k, a_k, ph_k, n_k = [], [], [], [], [], []
    for k in const:
        s = traces[k].spec
        y = signed_amplitude(traces[k].matrix, dtheta, m) / s.N_at(s.t_samples) * dataset.N_ref
        amp0, wd, g, ph = _damped_sinusoid_fit(s.t_samples, y)
        w = math.hypot(wd, g)
        R_k.append(s.profile.R_start)
        w_k.append(w)
        q_k.append(w / (2 * g) if g > 0 else 50.0)
        a_k.append(amp0)
        ph_k.append(ph)
        n_k.append(float(np.mean(s.N_at(s.t_samples))) / dataset.N_ref)
    R_k, w_k, q_k, n_k = map(np.array, (R_k, w_k, q_k, n_k))
    # log(w R / m) = log c + (alpha/2) [log N - log(R/R_i)]
    xreg = np.log(n_k) - np.log(R_k / dataset.R_i_ref)
    slope, icpt = np.polyfit(xreg, np.log(w_k * R_k / m), 1)
    alpha = float(np.clip(2 * slope, *GLOBAL_BOUNDS["alpha"]))
    c = float(math.exp(icpt))
    qs, qi = np.polyfit(R_k, q_k, 1)
    Q_i = float(np.clip(qi + qs * dataset.R_i_ref, *GLOBAL_BOUNDS["Q_i"]))
    Q_f = float(np.clip(qi + qs * dataset.R_f_ref, *GLOBAL_BOUNDS["Q_f"]))
    dn_i = float(np.median(a_k))
    phi_shared = _circmean(np.array(ph_k), np.array(a_k))

    params = ModelParams(gamma_H=alpha, alpha=alpha, Q_i=Q_i, Q_f=Q_f, c_theta_i=c,
                         dn_i=dn_i, m=m, R_i_ref=dataset.R_i_ref,
                         R_f_ref=dataset.R_f_ref, N_ref=dataset.N_ref)
    phi_each = np.full(K, phi_shared)
    for j, k in enumerate(const):
        phi_each[k] = ph_k[j]
    # ramp traces: two-parameter linear fit over the pre-ramp samples
    for k, tr in enumerate(traces):
        s = tr.spec
        if s.kind == "constant-R":
            continue
        pre = s.t_samples < s.profile.t_i
        if pre.sum() < 3:
            continue
        t = s.t_samples[pre]
        N = s.N_at(t)
        y = signed_amplitude(tr.matrix[:, pre], dtheta, m) / N * dataset.N_ref
        w = float(omega(params, s.profile.R_start, N[0]))
        g = float(damping(params, s.profile.R_start, N[0]))
        wd = math.sqrt(max(w * w - g * g, 0.0))
        e = np.exp(-g * t)
        X = np.column_stack([e * np.cos(wd * t), -e * np.sin(wd * t)])
        (a, b), *_ = np.linalg.lstsq(X, y, rcond=None)
        if math.hypot(a, b) > 0.2 * dn_i:
            phi_each[k] = math.atan2(b, a)
    phi_0 = np.array([_circmean(phi_each)]) if variant.share_phi0 else phi_each
    dth = np.array([dtheta]) if variant.share_dtheta else np.array(dth_each)
    return ParamVector(**{k: getattr(params, k) for k in GLOBAL_NAMES}, phi_0=phi_0,
                       dtheta=dth,
                       n_scale=None if variant.time_resolved_N else mean_atom_numbers(dataset))


# -- drivers -----------------------------------------------------------------

def global_fit(dataset: Dataset, variant: FitVariant = FitVariant(), pv0: ParamVector | None = None,
               m=1, n_prior_sigma=0.01, max_iter=500) -> FitResult:
    model = GlobalModel(dataset, variant, m=m, n_prior_sigma=n_prior_sigma)
    if model.dof <= 0:
        raise Overparameterized("overparameterized")
    if pv0 is None:
        pv0 = initial_guess(dataset, variant, m)
    pv0 = pv0.for_variant(variant, dataset)
    res = levenberg_marquardt(model.residuals, model.jacobian, pv0.flatten(), model.bounds,
                              max_iter=max_iter)
    res.names = model.names
    res.best = model.unpack(res.x)
    res.variant = variant
    res.n_evals = model.n_evals
    return res


@dataclass
class FitEnsemble:
    per_variant: list
    mean_params: dict
    combined_sigma: dict
    spread: dict
    mean_sigma: dict

    @property
    def converged(self):
        return all(r.converged for r in self.per_variant)


def combine(results) -> FitEnsemble:
    """Mean over variants; sigma**2 = sample std**2 + (mean 1-sigma)**2."""
    vals = np.array([[r.value(k) for k in GLOBAL_NAMES] for r in results])
    sig = np.array([[r.sigma_of(k) for k in GLOBAL_NAMES] for r in results])
    mean = vals.mean(axis=0)
    spread = vals.std(axis=0, ddof=1) if len(results) > 1 else np.zeros(len(GLOBAL_NAMES))
    msig = sig.mean(axis=0)
    comb = np.sqrt(spread ** 2 + msig ** 2)
    as_dict = lambda a: {k: float(v) for k, v in zip(GLOBAL_NAMES, a)}  # noqa: E731
    return FitEnsemble(list(results), as_dict(mean), as_dict(comb), as_dict(spread), as_dict(msig))


def ensemble_fit(dataset: Dataset, pv0: ParamVector | None = None, variants=None, m=1,
                 n_prior_sigma=0.01, chain=True) -> FitEnsemble:
    """Run every variant and combine.

    With ``chain`` the globals found by the first variant seed the others
    (per-trace phases re-derived from pv0), which saves iterations without
    changing the optimum each variant converges to.
    """
    variants = FitVariant.all() if variants is None else variants
    if pv0 is None:
        pv0 = initial_guess(dataset, variants[0], m)
    results = []
    start = pv0
    for v in variants:
        res = global_fit(dataset, v, start, m=m, n_prior_sigma=n_prior_sigma)
        results.append(res)
        if chain and res.converged:
            start = replace(pv0, **res.best.globals)
    return combine(results)


# -- reports -----------------------------------------------------------------

def result_dict(res: FitResult):
    return {
        "variant": None if res.variant is None else res.variant.name,
        "parameters": [{"name": n, "value": float(v), "sigma": float(s)}
                       for n, v, s in zip(res.names, res.x, res.sigma)],
        "chi2": float(res.chi2),
        "dof": int(res.dof),
        "n_free": len(res.x),
        "converged": bool(res.converged),
        "n_evals": int(res.n_evals),
        "n_iter": int(res.n_iter),
        "message": res.message,
    }


def ensemble_dict(ens: FitEnsemble):
    return {
        "variants": [result_dict(r) for r in ens.per_variant],
        "combined": {k: {"value": ens.mean_params[k], "sigma": ens.combined_sigma[k],
                         "spread": ens.spread[k], "mean_sigma": ens.mean_sigma[k]}
                     for k in GLOBAL_NAMES},
        "converged": bool(ens.converged),
    }


def format_report(obj) -> str:
    results = obj.per_variant if isinstance(obj, FitEnsemble) else [obj]
    lines = []
    for res in results:
        name = res.variant.name if res.variant is not None else "fit"
        lines.append(f"[{name}]")
        lines.append(f"free parameters: {len(res.x)}")
        lines.append(f"chi2: {res.chi2:.10g}  dof: {res.dof}  chi2/dof: {res.chi2 / res.dof:.6g}")
        lines.append(f"converged: {res.converged} ({res.message}); iterations: {res.n_iter}")
        lines.append(f"{'name':<24}{'value':>18}{'sigma':>18}")
        for n, v, s in zip(res.names, res.x, res.sigma):
            lines.append(f"{n:<24}{v:>18.10g}{s:>18.6g}")
        lines.append("")
    if isinstance(obj, FitEnsemble):
        lines.append("[variant matrix]")
        lines.append(f"{'variant':<36}" + "".join(f"{k:>14}" for k in GLOBAL_NAMES))
        for res in obj.per_variant:
            lines.append(f"{res.variant.name:<36}"
                         + "".join(f"{res.value(k):>14.6g}" for k in GLOBAL_NAMES))
        lines.append("")
        lines.append("[combined]")
        lines.append(f"{'name':<24}{'value':>18}{'sigma':>18}")
        for k in GLOBAL_NAMES:
            lines.append(f"{k:<24}{obj.mean_params[k]:>18.10g}{obj.combined_sigma[k]:>18.6g}")
    return "\n".join(lines) + "\n"


def write_report(obj, text_path, json_path):
    with open(text_path, "w") as fh:
        fh.write(format_report(obj))
    doc = ensemble_dict(obj) if isinstance(obj, FitEnsemble) else result_dict(obj)
    with open(json_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
