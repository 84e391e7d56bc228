"""Random initial parameters drawn through their inverted polynomial roots.

Each polynomial's roots are grouped into pairs (plus one unpaired root when
the degree is odd).  A pair is real with probability ``p_real``; real pairs
take magnitudes from U(gamma, 1 - gamma) and share a sign with probability
``p_real``, complex pairs are ``r * exp(+-i tau)`` with tau ~ U(0, pi).  With
the default ``p_real = sqrt(1/2)`` the product of a pair is positive with
probability one half.  The whole draw is repeated until every AR root is at
least ``alpha`` away from every MA root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ArmaOrder, ArmaParams, SamplerExhaustedError, TimeSeries
from .poly import RootSet, inv_roots_to_coeffs, min_cross_distance

MAX_REJECTIONS = 10_000


@dataclass(frozen=True)
class SamplerConfig:
    alpha: float = 0.01
    p_real: float = math.sqrt(0.5)
    gamma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0.0 <= self.p_real <= 1.0:
            raise ValueError("p_real must lie in [0, 1]")
        if not 0.0 < self.gamma < 0.5:
            raise ValueError("gamma must lie in (0, 0.5)")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "p_real": self.p_real, "gamma": self.gamma, "seed": self.seed}


def start_rng(seed: int, index: int) -> np.random.Generator:
    """Independent PCG64 stream for one start (or replicate) of a seeded run."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def _sample_poly_roots(k: int, cfg: SamplerConfig, rng: np.random.Generator) -> np.ndarray:
    lo, hi = cfg.gamma, 1.0 - cfg.gamma
    roots = []
    for _ in range(k // 2):
        if rng.random() < cfg.p_real:
            r1, r2 = rng.uniform(lo, hi, size=2)
            s1 = 1.0 if rng.random() < 0.5 else -1.0
            s2 = s1 if rng.random() < cfg.p_real else -s1
            roots += [s1 * r1, s2 * r2]
        else:
            tau = rng.uniform(0.0, math.pi)
            r = rng.uniform(lo, hi)
            z = complex(r * math.cos(tau), r * math.sin(tau))
            roots += [z, z.conjugate()]
    if k % 2:
        tau = 0.0 if rng.random() < 0.5 else math.pi
        r = rng.uniform(lo, hi)
        roots.append(r * math.cos(tau))
    return np.array(roots, dtype=complex)


def sample_root_set(order: ArmaOrder, cfg: SamplerConfig, rng: np.random.Generator) -> RootSet:
    for _ in range(MAX_REJECTIONS):
        rs = RootSet(_sample_poly_roots(order.p, cfg, rng), _sample_poly_roots(order.q, cfg, rng))
        if min_cross_distance(rs) >= cfg.alpha:
            return rs
    raise SamplerExhaustedError(
        f"no root set with cross distance >= {cfg.alpha} after {MAX_REJECTIONS} draws for {order}"
    )


def sample_params(
    order: ArmaOrder,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    series: Optional[TimeSeries] = None,
) -> ArmaParams:
    """Sampled coefficients; variance and mean start at the series' moments when given."""
    rs = sample_root_set(order, cfg, rng)
    phi = inv_roots_to_coeffs(rs.ar_inv_roots, "AR")
    theta = inv_roots_to_coeffs(rs.ma_inv_roots, "MA")
    sigma2, mean = 1.0, 0.0
    if series is not None:
        v = series.var()
        sigma2 = v if v > 0 else 1.0
        mean = series.mean()
    return ArmaParams(phi, theta, sigma2, mean)


def naive_uniform_ar(p: int, n_draws: int, rng: np.random.Generator, low: float = -1.0, high: float = 1.0):
    """Independent U(low, high) AR coefficient draws, for comparison with root sampling.

    Returns ``(draw_fraction, root_fraction)``: the share of coefficient vectors that
    are not causal, and the share of all inverted roots lying on or outside the unit circle.
    """
    from .poly import coeffs_to_inv_roots

    phis = rng.uniform(low, high, size=(n_draws, p))
    bad_draws = 0
    bad_roots = 0
    for phi in phis:
        m = np.abs(coeffs_to_inv_roots(phi, "AR"))
        outside = int((m >= 1.0).sum())
        bad_roots += outside
        bad_draws += outside > 0
    return bad_draws / n_draws, bad_roots / (n_draws * p)
