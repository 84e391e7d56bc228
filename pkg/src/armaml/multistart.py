"""Multi-start maximum likelihood: CSS-initialized first fit plus sampled restarts."""

from __future__ import annotations

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import ArmaError, ArmaOrder, ArmaParams, FitResult, TimeSeries, UnsupportedGapError
from .optimize import OptimizeOutcome, OptimizerConfig, maximize_loglik, minimize_css
from .sampler import SamplerConfig, sample_params, start_rng

log = logging.getLogger(__name__)

RNG_NAME = "numpy PCG64 via SeedSequence(seed, spawn_key=(start,))"


@dataclass(frozen=True)
class MultistartConfig:
    M: int = 10
    max_starts: int = 200
    improvement_eps: float = 1e-5
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if self.M < 1 or self.max_starts < 1:
            raise ValueError("M and max_starts must be >= 1")
        if not self.improvement_eps > 0:
            raise ValueError("improvement_eps must be positive")

    def with_seed(self, seed: int) -> "MultistartConfig":
        return replace(self, sampler=replace(self.sampler, seed=int(seed)))

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "max_starts": self.max_starts,
            "improvement_eps": self.improvement_eps,
            "sampler": self.sampler.to_dict(),
            "optimizer": self.optimizer.to_dict(),
            "rng": RNG_NAME,
        }


def initial_estimate(series: TimeSeries, order: ArmaOrder, cfg: OptimizerConfig) -> tuple[ArmaParams, bool]:
    """CSS estimate, or zero coefficients when CSS is unavailable or invalid."""
    try:
        css = minimize_css(series, order, cfg)
        return css.params, css.fallback
    except UnsupportedGapError:
        mean = series.mean() if order.include_mean else 0.0
        return ArmaParams(np.zeros(order.p), np.zeros(order.q), max(series.var(), 1e-12), mean), True


def _run_start(series, order, cfg: MultistartConfig, k: int, init: Optional[ArmaParams] = None):
    if init is None:
        init = sample_params(order, cfg.sampler, start_rng(cfg.sampler.seed, k), series)
    try:
        return maximize_loglik(series, init, order, cfg.optimizer)
    except ArmaError as exc:
        log.debug("start %d failed: %s", k, exc)
        return None


def stop_index(per_start_logliks, M: int, improvement_eps: float, max_starts: Optional[int] = None) -> int:
    """Number of starts a run with window ``M`` uses, given the full start sequence.

    Start 0 never counts toward the window.  Runs with identical seeds share
    their start sequence, so a shorter window is a prefix of a longer one.
    """
    lls = np.asarray(per_start_logliks, float)
    cap = lls.size if max_starts is None else min(max_starts, lls.size)
    best = lls[0]
    since = 0
    k = 1
    while k < cap and since < M:
        if lls[k] > best + improvement_eps:
            since = 0
        else:
            since += 1
        best = max(best, lls[k])
        k += 1
    return k


def fit_multistart(
    series: TimeSeries,
    order: ArmaOrder,
    cfg: MultistartConfig = MultistartConfig(),
    executor: Optional[Executor] = None,
    keep_trace: bool = False,
) -> FitResult:
    """Best of the CSS-initialized fit and randomly initialized restarts.

    Restarts stop once ``cfg.M`` consecutive restarts fail to beat the incumbent
    by more than ``cfg.improvement_eps`` or ``cfg.max_starts`` starts have run.
    With an ``executor``, restarts are evaluated in batches of ``M`` and reduced
    in start order, giving the same result as the sequential run.
    """
    init, fallback = initial_estimate(series, order, cfg.optimizer)
    first = _run_start(series, order, cfg, 0, init)
    if first is None:
        raise ArmaError(f"initial fit failed for {order}")
    outcomes: list[Optional[OptimizeOutcome]] = [first]
    lls = [first.objective]
    best_i = 0
    incumbent = first.objective
    since = 0
    k = 1
    while k < cfg.max_starts and since < cfg.M:
        batch = list(range(k, min(k + (cfg.M - since if executor else 1), cfg.max_starts)))
        if executor is None:
            results = [_run_start(series, order, cfg, j) for j in batch]
        else:
            results = list(executor.map(lambda j: _run_start(series, order, cfg, j), batch))
        for out in results:
            ll = out.objective if out is not None else -math.inf
            outcomes.append(out)
            lls.append(ll)
            if ll > incumbent + cfg.improvement_eps:
                since = 0
            else:
                since += 1
            if ll > lls[best_i]:
                best_i = len(lls) - 1
            incumbent = max(incumbent, ll)
            k += 1
            if since >= cfg.M or k >= cfg.max_starts:
                break
    best = outcomes[best_i]
    config = cfg.to_dict()
    if keep_trace:
        config["trace"] = [None if o is None else o.params.to_dict() for o in outcomes]
    return FitResult(
        order=order,
        params=best.params,
        loglik=float(lls[best_i]),
        aic=-2.0 * float(lls[best_i]) + 2.0 * order.d,
        n_starts_used=len(lls),
        per_start_logliks=np.array(lls),
        converged=bool(best.converged),
        css_fallback=fallback,
        config=config,
    )


def fit_single(series: TimeSeries, order: ArmaOrder, cfg: MultistartConfig = MultistartConfig()) -> FitResult:
    """The CSS-initialized (or zero-initialized) single-start fit."""
    return fit_multistart(series, order, replace(cfg, max_starts=1))
