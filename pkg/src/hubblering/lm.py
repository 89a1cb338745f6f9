"""Bounded Levenberg-Marquardt with Marquardt diagonal scaling."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class FitResult:
    x: np.ndarray
    covariance: np.ndarray
    chi2: float
    dof: int
    converged: bool
    n_evals: int
    n_iter: int = 0
    message: str = ""
    names: list = field(default_factory=list)
    best: Any = None
    variant: Any = None
    history: list = field(default_factory=list)

    @property
    def sigma(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def value(self, name):
        return float(self.x[self.names.index(name)])

    def sigma_of(self, name):
        return float(self.sigma[self.names.index(name)])


def numeric_jacobian(fun, x, bounds=None, f0=None, rel_step=1e-6, abs_step=1e-8):
    """Forward differences; steps that would leave the box go the other way."""
    x = np.asarray(x, dtype=float)
    f0 = fun(x) if f0 is None else f0
    lo, hi = _bounds(bounds, len(x))
    J = np.empty((len(f0), len(x)))
    for i in range(len(x)):
        h = max(rel_step * abs(x[i]), abs_step)
        if x[i] + h > hi[i]:
            h = -h
        xp = x.copy()
        xp[i] += h
        J[:, i] = (fun(xp) - f0) / h
    return J


def _bounds(bounds, n):
    if bounds is None:
        return np.full(n, -np.inf), np.full(n, np.inf)
    lo, hi = bounds
    return np.broadcast_to(np.asarray(lo, float), (n,)), np.broadcast_to(np.asarray(hi, float), (n,))


def _solve(A, b):
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(A, b, rcond=None)[0]


def covariance_from_jacobian(J, chi2, dof):
    JtJ = J.T @ J
    try:
        inv = np.linalg.inv(JtJ)
        if not np.all(np.isfinite(inv)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        inv = np.linalg.pinv(JtJ)
    cov = inv * (chi2 / dof if dof > 0 else np.nan)
    return 0.5 * (cov + cov.T)


def levenberg_marquardt(residual_fn, jacobian_fn, x0, bounds=None, lam0=1e-3,
                        max_iter=500, ftol=1e-12, gtol=1e-10, lam_max=1e12,
                        keep_history=False) -> FitResult:
    """Minimize sum(residual_fn(x)**2) inside a box.

    ``jacobian_fn(x, r)`` receives the residual already computed at ``x``.
    Stops when the projected gradient inf-norm drops below ``gtol``, when
    three consecutive accepted steps each lower the cost by a relative
    amount below ``ftol``, or when the damping exceeds ``lam_max`` (no
    descent direction left at working precision).
    """
    lo, hi = _bounds(bounds, len(np.atleast_1d(x0)))
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    r = residual_fn(x)
    n_evals = 1
    cost = float(r @ r)
    if not np.isfinite(cost):
        raise ValueError("residuals are not finite at the starting point")
    J = jacobian_fn(x, r)
    lam = lam0
    small = 0
    converged = False
    message = "max iterations reached"
    history = [x.copy()] if keep_history else []
    it = 0
    for it in range(1, max_iter + 1):
        g = J.T @ r
        free = ~(((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0)))
        if np.max(np.abs(g[free]), initial=0.0) < gtol:
            converged, message = True, "gradient tolerance"
            break
        A = J.T @ J
        d = np.diag(A).copy()
        d[d <= 0] = max(d.max(initial=0.0) * 1e-12, 1e-300)
        accepted = False
        while lam <= lam_max:
            step = _solve(A + lam * np.diag(d), -g)
            x_new = np.clip(x + step, lo, hi)
            r_new = residual_fn(x_new)
            n_evals += 1
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            converged, message = True, "no further descent"
            break
        rel = (cost - cost_new) / cost if cost > 0 else 0.0
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam / 10.0, 1e-12)
        if keep_history:
            history.append(x.copy())
        small = small + 1 if rel < ftol else 0
        J = jacobian_fn(x, r)
        if cost == 0.0:
            converged, message = True, "zero residual"
            break
        if small >= 3:
            converged, message = True, "cost tolerance"
            break
    dof = len(r) - len(x)
    return FitResult(
        x=x,
        covariance=covariance_from_jacobian(J, cost, dof),
        chi2=cost,
        dof=dof,
        converged=converged,
        n_evals=n_evals,
        n_iter=it,
        message=message,
        history=history,
    )
