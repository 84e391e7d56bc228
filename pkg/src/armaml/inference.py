"""Standard errors, profile-likelihood intervals, AIC tables and likelihood-ratio tests."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy import stats

from .core import (
    ArmaError,
    ArmaOrder,
    ArmaParams,
    BoundaryWarning,
    FitResult,
    InconsistentNestingError,
    SingularInformationWarning,
    TimeSeries,
)
from .multistart import MultistartConfig, fit_multistart, fit_single
from .optimize import NegLoglik, maximize_loglik
from .poly import params_root_set
from .sampler import sample_params, start_rng

log = logging.getLogger(__name__)

NEST_TOL = 1e-6
HESS_STEP = 1e-4
BOUNDARY_MODULUS = 0.99
MAX_TABLE_ORDER = 6
ENDPOINT_TOL = 1e-4
ENDPOINT_ITERS = 4
EXTEND_GROWTH = 1.25
BOUNDARY_BISECTIONS = 8


def aic(loglik: float, order: ArmaOrder) -> float:
    return -2.0 * loglik + 2.0 * order.d


def chi2_cutoff(level: float = 0.95, df: int = 1) -> float:
    """Log-likelihood drop defining a profile interval: chi2_df(level) / 2."""
    return float(stats.chi2.ppf(level, df) / 2.0)


def lr_test(ll0: float, ll1: float, df: int = 1) -> tuple[float, float]:
    """Likelihood-ratio test of a nested null (``ll0``) against ``ll1``.

    Returns ``(delta, p_value)`` with ``delta = ll1 - ll0`` and ``2 * delta ~ chi2_df``.
    """
    delta = ll1 - ll0
    if delta < -NEST_TOL:
        raise InconsistentNestingError(
            f"larger model log-likelihood {ll1:.6f} is below the nested model's {ll0:.6f}"
        )
    return float(delta), float(stats.chi2.sf(max(0.0, 2.0 * delta), df))


def _param_index(order: ArmaOrder, parameter_id: Union[int, str]) -> int:
    names = order.param_names()
    if isinstance(parameter_id, str):
        if parameter_id not in names:
            raise ValueError(f"unknown parameter {parameter_id!r}; expected one of {names}")
        return names.index(parameter_id)
    if not 0 <= parameter_id < len(names):
        raise ValueError(f"parameter index {parameter_id} out of range")
    return int(parameter_id)


def _step_scale(order: ArmaOrder, series: TimeSeries) -> np.ndarray:
    s = np.ones(order.n_free)
    if order.include_mean:
        s[-1] = math.sqrt(series.var()) if series.var() > 0 else 1.0
    return s


def loglik_hessian(series: TimeSeries, params: ArmaParams, order: ArmaOrder, step: float = HESS_STEP):
    """Central-difference Hessian of the concentrated log-likelihood in ``(phi, theta[, mean])``.

    Returns ``None`` if the stencil cannot be kept inside the valid region.
    """
    obj = NegLoglik(series, order)
    v0 = params.to_vector(order.include_mean)
    k = v0.size
    base = np.maximum(np.abs(v0), _step_scale(order, series))
    for shrink in range(4):
        h = step * base / 2**shrink
        f0 = obj.at_vector(v0)
        H = np.zeros((k, k))
        ok = math.isfinite(f0)
        for i in range(k):
            if not ok:
                break
            for j in range(i, k):
                vals = []
                for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    v = v0.copy()
                    v[i] += si * h[i]
                    v[j] += sj * h[j]
                    vals.append(obj.at_vector(v))
                if not all(math.isfinite(x) for x in vals):
                    ok = False
                    break
                H[i, j] = H[j, i] = (vals[0] - vals[1] - vals[2] + vals[3]) / (4 * h[i] * h[j])
        if ok:
            return -H
    return None


def fisher_se(fit: FitResult, series: TimeSeries, order: Optional[ArmaOrder] = None) -> np.ndarray:
    """Standard errors from the inverse observed information at the fitted parameters.

    Entries that cannot be computed are ``nan`` and a ``SingularInformationWarning`` is
    issued.  A ``BoundaryWarning`` flags estimates with an inverted root of modulus
    above 0.99, where these standard errors are unreliable.
    """
    order = order or fit.order
    k = order.n_free
    rs = params_root_set(fit.params.phi, fit.params.theta)
    if rs.moduli().size and rs.moduli().max() > BOUNDARY_MODULUS:
        warnings.warn(
            f"estimate has an inverted root of modulus {rs.moduli().max():.4f}; "
            "Fisher standard errors are unreliable near the boundary",
            BoundaryWarning,
            stacklevel=2,
        )
    H = loglik_hessian(series, fit.params, order)
    if H is None:
        warnings.warn("Hessian stencil leaves the valid region", SingularInformationWarning, stacklevel=2)
        return np.full(k, np.nan)
    info = -H
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        warnings.warn("observed information is singular", SingularInformationWarning, stacklevel=2)
        return np.full(k, np.nan)
    d = np.diag(cov)
    if np.any(np.linalg.eigvalsh(info) <= 0) or np.any(d <= 0):
        warnings.warn("observed information is not positive definite", SingularInformationWarning, stacklevel=2)
    return np.where(d > 0, np.sqrt(np.abs(d)), np.nan)


def wald_interval(estimate: float, se: float, level: float = 0.95) -> tuple[float, float]:
    z = stats.norm.ppf(0.5 + level / 2.0)
    return estimate - z * se, estimate + z * se


# --- profile likelihood -------------------------------------------------------------


@dataclass
class ProfileCurve:
    parameter_id: str
    grid: np.ndarray
    profile_loglik: np.ndarray
    ci_low: float
    ci_high: float
    level: float = 0.95
    mle: float = float("nan")
    mle_loglik: float = float("nan")
    cutoff: float = float("nan")
    low_truncated: bool = False
    high_truncated: bool = False
    dropped: list = field(default_factory=list)

    def to_rows(self) -> list[dict]:
        ref = self.reference_loglik
        return [
            {
                "parameter": self.parameter_id,
                "value": float(g),
                "profile_loglik": float(l),
                "inside": bool(l >= ref - self.cutoff),
            }
            for g, l in zip(self.grid, self.profile_loglik)
        ]

    @property
    def reference_loglik(self) -> float:
        return float(max(self.mle_loglik, np.max(self.profile_loglik))) if self.grid.size else self.mle_loglik

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter_id,
            "level": self.level,
            "mle": self.mle,
            "mle_loglik": self.mle_loglik,
            "cutoff": self.cutoff,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "low_truncated": self.low_truncated,
            "high_truncated": self.high_truncated,
            "dropped": [float(x) for x in self.dropped],
        }


def _pinned_starts(series, order, idx, value, cfg: MultistartConfig, k: int, tries: int = 50):
    """Sampled start ``k`` with entry ``idx`` replaced by ``value``; ``None`` if none is valid."""
    obj = NegLoglik(series, order)
    rng = start_rng(cfg.sampler.seed, k)
    for _ in range(tries):
        v = sample_params(order, cfg.sampler, rng, series).to_vector(order.include_mean)
        v[idx] = value
        if math.isfinite(obj.at_vector(v)):
            return ArmaParams.from_vector(v, order)
    return None


def profile_point(
    series: TimeSeries,
    order: ArmaOrder,
    idx: int,
    value: float,
    cfg: MultistartConfig,
    warm: Optional[ArmaParams] = None,
) -> tuple[float, Optional[ArmaParams]]:
    """Maximized log-likelihood with entry ``idx`` of ``(phi, theta[, mean])`` pinned at ``value``.

    Starts are the warm start (if valid) followed by sampled restarts, stopping after
    ``cfg.M`` restarts without improvement.  Returns ``(-inf, None)`` when no valid start exists.
    """
    obj = NegLoglik(series, order)
    fixed = {idx: value}
    best_ll, best = -math.inf, None

    def run(init):
        nonlocal best_ll, best
        try:
            out = maximize_loglik(series, init, order, cfg.optimizer, fixed=fixed)
        except ArmaError:
            return False
        if out.objective > best_ll + cfg.improvement_eps:
            best_ll, best = out.objective, out.params
            return True
        if out.objective > best_ll:
            best_ll, best = out.objective, out.params
        return False

    if warm is not None:
        v = warm.to_vector(order.include_mean)
        v[idx] = value
        if math.isfinite(obj.at_vector(v)):
            run(ArmaParams.from_vector(v, order))
    since, k = 0, 1
    while since < cfg.M and k < cfg.max_starts:
        init = _pinned_starts(series, order, idx, value, cfg, k)
        k += 1
        if init is None:
            since += 1
            continue
        since = 0 if run(init) else since + 1
    return best_ll, best


def _crossing(x_in, l_in, x_out, l_out, target):
    if l_in == l_out:
        return x_out
    return x_in + (target - l_in) * (x_out - x_in) / (l_out - l_in)


def _refine_crossing(series, order, idx, cfg, inner, outer, target, points, iters=ENDPOINT_ITERS):
    """Regula falsi on the bracketing grid pair; evaluated points are added to ``points``."""
    (x_in, l_in, p_in), (x_out, l_out, _) = inner, outer
    x = _crossing(x_in, l_in, x_out, l_out, target)
    for _ in range(iters):
        ll, pr = profile_point(series, order, idx, x, cfg, warm=p_in)
        if pr is None:
            break
        points.append((x, ll, pr))
        if abs(ll - target) < ENDPOINT_TOL:
            break
        if ll >= target:
            x_in, l_in, p_in = x, ll, pr
        else:
            x_out, l_out = x, ll
        x = _crossing(x_in, l_in, x_out, l_out, target)
    return float(x)


def profile_ci(
    series: TimeSeries,
    order: ArmaOrder,
    fit: FitResult,
    parameter_id: Union[int, str],
    level: float = 0.95,
    cfg: Optional[MultistartConfig] = None,
    n_grid: int = 41,
    width_se: float = 6.0,
    max_extensions: int = 30,
) -> ProfileCurve:
    """Profile-likelihood confidence interval for one entry of ``(phi, theta[, mean])``.

    The grid spans the estimate +- ``width_se`` Fisher standard errors and is extended,
    with geometrically growing steps, on any side where the drop ``chi2_1(level) / 2``
    has not been reached, until it is reached or the valid region ends.  In the latter
    case the side is bisected toward the edge of the valid region and the interval is
    flagged as truncated there.  Endpoints are found by linear interpolation between
    the bracketing grid points, refined by a few regula falsi steps.
    """
    cfg = replace(cfg or MultistartConfig(), M=3)
    idx = _param_index(order, parameter_id)
    name = order.param_names()[idx]
    est = float(fit.params.to_vector(order.include_mean)[idx])
    se = float(fit.se[idx]) if fit.se is not None and idx < len(fit.se) else float("nan")
    if not (math.isfinite(se) and se > 0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            se_all = fisher_se(fit, series, order)
        se = float(se_all[idx])
    scale = _step_scale(order, series)[idx]
    if not (math.isfinite(se) and se > 0):
        se = 0.05 * scale
    half = n_grid // 2
    spacing = width_se * se / half
    cutoff = chi2_cutoff(level)

    points: dict[int, tuple[float, float, Optional[ArmaParams]]] = {}
    dropped = []
    ll0, p0 = profile_point(series, order, idx, est, cfg, warm=fit.params)
    points[0] = (est, ll0, p0)
    ref = max(fit.loglik, ll0)
    for direction in (1, -1):
        warm = fit.params
        offset, step = 0.0, spacing
        for j in range(1, half + max_extensions + 1):
            if j > half:
                step *= EXTEND_GROWTH
            offset += step
            value = est + direction * offset
            ll, pr = profile_point(series, order, idx, value, cfg, warm=warm)
            if pr is None:
                dropped.append(value)
                # close in on the edge of the valid region
                good, bad = offset - step, offset
                for _ in range(BOUNDARY_BISECTIONS):
                    mid = 0.5 * (good + bad)
                    ll, pr = profile_point(series, order, idx, est + direction * mid, cfg, warm=warm)
                    if pr is None:
                        bad = mid
                        continue
                    good = mid
                    j += 1
                    points[direction * j] = (est + direction * mid, ll, pr)
                    warm = pr
                    ref = max(ref, ll)
                    if ll < ref - cutoff:
                        break
                break
            points[direction * j] = (value, ll, pr)
            warm = pr
            ref = max(ref, ll)
            if ll < ref - cutoff and j >= half:
                break
    pts = [points[k] for k in sorted(points)]
    prof = np.array([pt[1] for pt in pts])
    ref = max(fit.loglik, float(prof.max()))
    target = ref - cutoff
    top = int(np.argmax(prof))
    extra: list = []
    lo_i = top
    while lo_i > 0 and prof[lo_i - 1] >= target:
        lo_i -= 1
    if lo_i > 0:
        ci_low = _refine_crossing(series, order, idx, cfg, pts[lo_i], pts[lo_i - 1], target, extra)
        low_trunc = False
    else:
        ci_low, low_trunc = float(pts[0][0]), True
    hi_i = top
    while hi_i < prof.size - 1 and prof[hi_i + 1] >= target:
        hi_i += 1
    if hi_i < prof.size - 1:
        ci_high = _refine_crossing(series, order, idx, cfg, pts[hi_i], pts[hi_i + 1], target, extra)
        high_trunc = False
    else:
        ci_high, high_trunc = float(pts[-1][0]), True
    pts = sorted(pts + extra, key=lambda pt: pt[0])
    grid = np.array([pt[0] for pt in pts])
    prof = np.array([pt[1] for pt in pts])
    return ProfileCurve(
        parameter_id=name,
        grid=grid,
        profile_loglik=prof,
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        level=level,
        mle=est,
        mle_loglik=float(fit.loglik),
        cutoff=cutoff,
        low_truncated=low_trunc,
        high_truncated=high_trunc,
        dropped=dropped,
    )


def profile_covers(
    series: TimeSeries,
    order: ArmaOrder,
    fit: FitResult,
    parameter_id: Union[int, str],
    value: float,
    level: float,
    cfg: Optional[MultistartConfig] = None,
) -> bool:
    """Whether ``value`` lies in the profile-likelihood confidence set at ``level``.

    Equivalent to checking the profile log-likelihood at ``value`` against the
    maximum minus ``chi2_1(level) / 2``; needs one profile evaluation instead of a grid.
    """
    cfg = replace(cfg or MultistartConfig(), M=3)
    idx = _param_index(order, parameter_id)
    ll, _ = profile_point(series, order, idx, value, cfg, warm=fit.params)
    ref = max(fit.loglik, ll)
    return bool(ll >= ref - chi2_cutoff(level))


# --- AIC tables ----------------------------------------------------------------------


def find_inconsistencies(logliks: np.ndarray, tol: float = NEST_TOL) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Nested pairs ``(small, large)`` where the smaller model has the higher log-likelihood."""
    P, Q = logliks.shape
    out = []
    for p1 in range(P):
        for q1 in range(Q):
            l1 = logliks[p1, q1]
            if not np.isfinite(l1):
                continue
            for p2 in range(p1, P):
                for q2 in range(q1, Q):
                    if (p1, q1) == (p2, q2):
                        continue
                    l2 = logliks[p2, q2]
                    if np.isfinite(l2) and l1 > l2 + tol:
                        out.append(((p1, q1), (p2, q2)))
    return out


@dataclass
class AicTable:
    max_p: int
    max_q: int
    cells: dict
    include_mean: bool = True
    errors: dict = field(default_factory=dict)
    inconsistencies: list = field(default_factory=list)

    def loglik_grid(self) -> np.ndarray:
        g = np.full((self.max_p + 1, self.max_q + 1), np.nan)
        for (p, q), fit in self.cells.items():
            if fit is not None:
                g[p, q] = fit.loglik
        return g

    def aic_grid(self) -> np.ndarray:
        g = np.full((self.max_p + 1, self.max_q + 1), np.nan)
        for (p, q), fit in self.cells.items():
            if fit is not None:
                g[p, q] = fit.aic
        return g

    @property
    def consistent(self) -> bool:
        return not self.inconsistencies

    def marked_cells(self) -> set:
        """Larger models in nested violations (their likelihood was not fully maximized)."""
        return {large for _, large in self.inconsistencies}

    def best_order(self) -> tuple[int, int]:
        g = self.aic_grid()
        i = np.nanargmin(g)
        return tuple(int(v) for v in np.unravel_index(i, g.shape))

    def to_text(self, digits: int = 1) -> str:
        g = self.aic_grid()
        marked = self.marked_cells()
        width = max(8, digits + 8)
        head = " " * 5 + "".join(f"{'MA' + str(q):>{width}}" for q in range(self.max_q + 1))
        lines = [head]
        for p in range(self.max_p + 1):
            row = f"{'AR' + str(p):<5}"
            for q in range(self.max_q + 1):
                v = g[p, q]
                cell = "NA" if not np.isfinite(v) else f"{v:.{digits}f}"
                cell += "*" if (p, q) in marked else " "
                row += f"{cell:>{width}}"
            lines.append(row)
        if marked:
            lines.append("* likelihood below that of a nested smaller model")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "max_p": self.max_p,
            "max_q": self.max_q,
            "include_mean": self.include_mean,
            "aic": [[None if not np.isfinite(v) else float(v) for v in row] for row in self.aic_grid()],
            "loglik": [[None if not np.isfinite(v) else float(v) for v in row] for row in self.loglik_grid()],
            "consistent": self.consistent,
            "inconsistencies": [[list(a), list(b)] for a, b in self.inconsistencies],
            "marked": sorted(list(c) for c in self.marked_cells()),
            "errors": {f"{p},{q}": msg for (p, q), msg in self.errors.items()},
        }


def build_aic_table(
    series: TimeSeries,
    max_p: int,
    max_q: int,
    cfg: MultistartConfig = MultistartConfig(),
    include_mean: bool = True,
    baseline: bool = False,
) -> AicTable:
    """Fit every ``(p, q)`` up to the given maxima and flag nested inconsistencies.

    ``baseline=True`` uses the single-start fit in every cell.
    """
    if max_p > MAX_TABLE_ORDER or max_q > MAX_TABLE_ORDER or max_p < 0 or max_q < 0:
        raise ValueError(f"table orders must lie in 0..{MAX_TABLE_ORDER}")
    cells, errors = {}, {}
    for p in range(max_p + 1):
        for q in range(max_q + 1):
            order = ArmaOrder(p, q, include_mean)
            try:
                cells[(p, q)] = fit_single(series, order, cfg) if baseline else fit_multistart(series, order, cfg)
            except ArmaError as exc:
                log.warning("cell (%d, %d) failed: %s", p, q, exc)
                cells[(p, q)] = None
                errors[(p, q)] = str(exc)
    table = AicTable(max_p, max_q, cells, include_mean, errors)
    table.inconsistencies = find_inconsistencies(table.loglik_grid())
    return table
