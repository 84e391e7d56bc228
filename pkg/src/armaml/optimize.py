"""Local optimizers for the concentrated ARMA likelihood and the CSS objective.

Points outside the causal/invertible region evaluate to ``+inf`` (for the
minimized negative log-likelihood), so the line search simply backtracks
from them; no reparameterization is used.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Mapping, Optional

import numpy as np
from scipy import optimize as sopt

from . import _kernels as K
from .core import (
    MAX_INV_MODULUS,
    ArmaOrder,
    ArmaParams,
    PreconditionError,
    TimeSeries,
    UnsupportedGapError,
    validate_params,
)
from .likelihood import kalman_loglik

MAX_STEP = 1.0
ARMIJO_C1 = 1e-4


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 500
    grad_step: float = 1e-6
    tol: float = 1e-8
    method: str = "bfgs"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.method not in ("bfgs", "nelder-mead"):
            raise ValueError(f"unknown method {self.method!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class OptimizeOutcome:
    params: ArmaParams
    objective: float
    iterations: int
    converged: bool
    approx_hessian: Optional[np.ndarray] = None
    n_evals: int = 0


@dataclass
class _Minimum:
    x: np.ndarray
    fx: float
    iterations: int
    converged: bool
    hess_inv: Optional[np.ndarray]
    n_evals: int


def fd_gradient(f: Callable, x: np.ndarray, fx: float, step: float) -> np.ndarray:
    """Forward differences with relative step; backward where the forward point is infeasible."""
    g = np.zeros_like(x)
    for i in range(x.size):
        h = step * max(abs(x[i]), 1.0)
        xi = x.copy()
        xi[i] += h
        fi = f(xi)
        if math.isfinite(fi):
            g[i] = (fi - fx) / h
            continue
        xi[i] = x[i] - h
        fi = f(xi)
        if math.isfinite(fi):
            g[i] = (fx - fi) / h
    return g


def bfgs_minimize(f: Callable, x0, cfg: OptimizerConfig) -> _Minimum:
    """Quasi-Newton minimization with finite-difference gradients and backtracking."""
    x = np.array(x0, dtype=float)
    fx = f(x)
    evals = 1
    if not math.isfinite(fx):
        raise PreconditionError("objective is not finite at the initial point")
    n = x.size
    if n == 0:
        return _Minimum(x, fx, 0, True, np.zeros((0, 0)), evals)
    g = fd_gradient(f, x, fx, cfg.grad_step)
    evals += n
    H = np.eye(n)
    scaled = False
    converged = False
    it = 0
    while it < cfg.max_iters:
        it += 1
        d = -H @ g
        slope = g @ d
        if not slope < 0:
            H = np.eye(n)
            d = -g
            slope = g @ d
            if not slope < 0:
                converged = True
                break
        dn = np.linalg.norm(d)
        alpha = min(1.0, MAX_STEP / dn) if dn > 0 else 1.0
        accepted = False
        while alpha * dn > 1e-12:
            xn = x + alpha * d
            fn = f(xn)
            evals += 1
            if math.isfinite(fn) and fn <= fx + ARMIJO_C1 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5 if not math.isfinite(fn) else max(0.1, min(0.5, _quad_step(fx, slope, alpha, fn)))
        if not accepted:
            if not np.allclose(H, np.eye(n)):
                H = np.eye(n)
                continue
            converged = it > 1
            break
        gn = fd_gradient(f, xn, fn, cfg.grad_step)
        evals += n
        s = xn - x
        y = gn - g
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if not scaled:
                H = np.eye(n) * (sy / (y @ y))
                scaled = True
            rho = 1.0 / sy
            Hy = H @ y
            H = H + (rho * rho * (y @ Hy) + rho) * np.outer(s, s) - rho * (np.outer(Hy, s) + np.outer(s, Hy))
        small = abs(fx - fn) <= cfg.tol
        x, fx, g = xn, fn, gn
        if small:
            converged = True
            break
    return _Minimum(x, fx, it, converged, H, evals)


def _quad_step(f0: float, slope: float, alpha: float, fa: float) -> float:
    """Fraction of ``alpha`` minimizing the quadratic through f(0), f'(0) and f(alpha)."""
    denom = 2.0 * (fa - f0 - slope * alpha)
    if denom <= 0:
        return 0.5
    return (-slope * alpha * alpha / denom) / alpha


def nelder_mead_minimize(f: Callable, x0, cfg: OptimizerConfig) -> _Minimum:
    x0 = np.asarray(x0, float)
    f0 = f(x0)
    if not math.isfinite(f0):
        raise PreconditionError("objective is not finite at the initial point")
    if x0.size == 0:
        return _Minimum(x0, f0, 0, True, np.zeros((0, 0)), 1)
    res = sopt.minimize(
        f, x0, method="Nelder-Mead",
        options={"maxiter": cfg.max_iters * max(1, x0.size) * 20, "xatol": 1e-8, "fatol": cfg.tol * max(1.0, abs(f0))},
    )
    return _Minimum(res.x, float(res.fun), int(res.nit), bool(res.success), None, int(res.nfev))


def _minimize(f, x0, cfg: OptimizerConfig) -> _Minimum:
    if cfg.method == "nelder-mead":
        return nelder_mead_minimize(f, x0, cfg)
    return bfgs_minimize(f, x0, cfg)


class NegLoglik:
    """Negative concentrated log-likelihood over the scaled free vector.

    The optimizer sees ``u = (v - center) / scale`` where ``v = (phi, theta[, mean])``;
    coefficients are unscaled and the mean is measured in series standard deviations.
    Entries listed in ``fixed`` (index into ``v``) are held at their given values.
    """

    def __init__(self, series: TimeSeries, order: ArmaOrder, fixed: Optional[Mapping[int, float]] = None):
        self.order = order
        self.x = np.ascontiguousarray(series.values, dtype=float)
        self.miss = np.ascontiguousarray(series.missing_mask)
        k = order.n_free
        self.center = np.zeros(k)
        self.scale = np.ones(k)
        if order.include_mean:
            sd = math.sqrt(series.var()) if series.var() > 0 else 1.0
            self.center[-1] = series.mean()
            self.scale[-1] = sd
        self.fixed = dict(fixed or {})
        self.free = np.array([i for i in range(k) if i not in self.fixed], dtype=int)
        self._full = np.zeros(k)
        for i, v in self.fixed.items():
            self._full[i] = v

    def full_vector(self, u) -> np.ndarray:
        v = self._full.copy()
        v[self.free] = self.center[self.free] + self.scale[self.free] * np.asarray(u, float)
        return v

    def to_u(self, v) -> np.ndarray:
        v = np.asarray(v, float)
        return (v[self.free] - self.center[self.free]) / self.scale[self.free]

    def at_vector(self, v) -> float:
        p, q = self.order.p, self.order.q
        mean = v[p + q] if self.order.include_mean else 0.0
        return K.neg_profile_loglik(self.x, self.miss, v[:p], v[p : p + q], mean, MAX_INV_MODULUS)

    def __call__(self, u) -> float:
        return self.at_vector(self.full_vector(u))


def _finish(series, order, v, fx, m: _Minimum, obj: NegLoglik) -> OptimizeOutcome:
    params = ArmaParams.from_vector(v, order)
    out = kalman_loglik(series, params, order, concentrate=True)
    params = params.replace(sigma2=out.sigma2_hat)
    hess = None
    if m.hess_inv is not None and m.hess_inv.size:
        try:
            Hu = np.linalg.inv(m.hess_inv)
            D = obj.scale[obj.free]
            hess = Hu / np.outer(D, D)
        except np.linalg.LinAlgError:
            hess = None
    return OptimizeOutcome(params, out.loglik, m.iterations, m.converged, hess, m.n_evals)


def maximize_loglik(
    series: TimeSeries,
    init: ArmaParams,
    order: ArmaOrder,
    cfg: OptimizerConfig = OptimizerConfig(),
    fixed: Optional[Mapping[int, float]] = None,
) -> OptimizeOutcome:
    """Maximize the concentrated log-likelihood starting from ``init``.

    ``fixed`` pins entries of the vector ``(phi, theta[, mean])`` (used for profiling).
    The returned objective is never below the objective at ``init``.
    """
    init.check_order(order)
    obj = NegLoglik(series, order, fixed)
    v0 = init.to_vector(order.include_mean)
    for i, val in obj.fixed.items():
        v0[i] = val
    if not math.isfinite(obj.at_vector(v0)):
        raise PreconditionError("initial parameters are not causal and invertible")
    m = _minimize(obj, obj.to_u(v0), cfg)
    v = obj.full_vector(m.x)
    return _finish(series, order, v, m.fx, m, obj)


@dataclass(frozen=True)
class CssFit:
    params: ArmaParams
    objective: float
    fallback: bool


def minimize_css(series: TimeSeries, order: ArmaOrder, cfg: OptimizerConfig = OptimizerConfig()) -> CssFit:
    """Conditional-sum-of-squares estimate, started from zero coefficients.

    If the minimizer is not causal and invertible, the zero vector is returned
    with ``fallback=True``.
    """
    if series.has_missing:
        raise UnsupportedGapError("conditional sum of squares is not defined for series with gaps")
    x = np.ascontiguousarray(series.values, dtype=float)
    p, q = order.p, order.q
    xbar = series.mean()
    sd = math.sqrt(series.var()) if series.var() > 0 else 1.0
    n_eff = max(x.size - p, 1)

    def f(u):
        mean = xbar + sd * u[p + q] if order.include_mean else 0.0
        val = K.css_sum(x - mean, u[:p], u[p : p + q]) / n_eff
        return val if math.isfinite(val) else math.inf

    u0 = np.zeros(order.n_free)
    m = _minimize(f, u0, cfg)
    mean = xbar + sd * m.x[p + q] if order.include_mean else 0.0
    phi, theta = m.x[:p], m.x[p : p + q]
    css = m.fx * n_eff
    params = ArmaParams(phi, theta, css / n_eff if css > 0 else max(series.var(), 1e-12), mean)
    if not validate_params(params, order).valid:
        zero_mean = xbar if order.include_mean else 0.0
        return CssFit(ArmaParams(np.zeros(p), np.zeros(q), max(series.var(), 1e-12), zero_mean), css, True)
    return CssFit(params, css, False)
