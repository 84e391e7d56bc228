"""Domain types shared across the package and validity predicates on ARMA parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# Inverted roots with modulus at or above this value count as on/outside the unit circle.
# Equivalent to treating roots with |root| <= 1 + 1e-8 as non-causal / non-invertible.
BOUNDARY_TOL = 1e-8
MAX_INV_MODULUS = 1.0 / (1.0 + BOUNDARY_TOL)


class ArmaError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(ArmaError, ValueError):
    pass


class ConjugacyError(ArmaError, ValueError):
    pass


class SamplerExhaustedError(ArmaError, RuntimeError):
    pass


class StationarityError(ArmaError, ValueError):
    """Parameters admit no stationary initial state (AR part not causal)."""


class NumericalDegeneracyError(ArmaError, FloatingPointError):
    pass


class UnsupportedGapError(ArmaError, ValueError):
    """Raised by CSS routines when the series has missing values."""


class PreconditionError(ArmaError, ValueError):
    pass


class InconsistentNestingError(ArmaError, ValueError):
    pass


class SingularInformationWarning(UserWarning):
    pass


class BoundaryWarning(UserWarning):
    pass


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Observed series ``x_1..x_n`` with a per-index missing mask.

    Missing entries hold ``nan`` in ``values``.
    """

    values: np.ndarray
    missing_mask: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        mask = np.array(self.missing_mask, dtype=bool).reshape(-1)
        if values.size < 1:
            raise ValueError("series must contain at least one value")
        if mask.shape != values.shape:
            raise DimensionError("missing_mask must match values in length")
        values[mask] = np.nan
        if mask.all():
            raise ValueError("series must contain at least one non-missing value")
        if not np.all(np.isfinite(values[~mask])):
            raise ValueError("non-missing values must be finite")
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing_mask", mask)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "TimeSeries":
        """Build a series, treating ``nan`` / ``None`` entries as missing."""
        arr = np.array(values, dtype=float).reshape(-1)
        return cls(arr, np.isnan(arr))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def n_obs(self) -> int:
        return int((~self.missing_mask).sum())

    @property
    def has_missing(self) -> bool:
        return bool(self.missing_mask.any())

    def observed(self) -> np.ndarray:
        return self.values[~self.missing_mask]

    def mean(self) -> float:
        return float(self.observed().mean())

    def var(self) -> float:
        return float(self.observed().var())

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class ArmaOrder:
    p: int
    q: int
    include_mean: bool = False

    def __post_init__(self):
        if int(self.p) != self.p or int(self.q) != self.q or self.p < 0 or self.q < 0:
            raise ValueError(f"orders must be non-negative integers, got ({self.p}, {self.q})")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "include_mean", bool(self.include_mean))

    @property
    def d(self) -> int:
        """Parameter count used by AIC (coefficients, variance, and intercept if any)."""
        return self.p + self.q + int(self.include_mean) + 1

    @property
    def n_free(self) -> int:
        """Length of the optimizer vector (phi, theta[, mean])."""
        return self.p + self.q + int(self.include_mean)

    def param_names(self) -> list[str]:
        names = [f"phi{i + 1}" for i in range(self.p)] + [f"theta{j + 1}" for j in range(self.q)]
        if self.include_mean:
            names.append("mean")
        return names

    def __str__(self) -> str:
        return f"ARMA({self.p},{self.q})" + ("+mean" if self.include_mean else "")


@dataclass(frozen=True)
class ArmaParams:
    phi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma2: float = 1.0
    mean: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phi", _frozen(self.phi))
        object.__setattr__(self, "theta", _frozen(self.theta))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "mean", float(self.mean))

    def check_order(self, order: ArmaOrder) -> None:
        if self.phi.size != order.p or self.theta.size != order.q:
            raise DimensionError(
                f"params have (p, q) = ({self.phi.size}, {self.theta.size}); order is ({order.p}, {order.q})"
            )

    def to_vector(self, include_mean: bool) -> np.ndarray:
        parts = [self.phi, self.theta]
        if include_mean:
            parts.append([self.mean])
        return np.concatenate(parts).astype(float)

    @classmethod
    def from_vector(cls, vec, order: ArmaOrder, sigma2: float = 1.0, mean: float = 0.0) -> "ArmaParams":
        vec = np.asarray(vec, dtype=float)
        if vec.size != order.n_free:
            raise DimensionError(f"expected vector of length {order.n_free}, got {vec.size}")
        p, q = order.p, order.q
        m = float(vec[p + q]) if order.include_mean else mean
        return cls(vec[:p], vec[p : p + q], sigma2, m)

    def replace(self, **changes) -> "ArmaParams":
        kw = dict(phi=self.phi, theta=self.theta, sigma2=self.sigma2, mean=self.mean)
        kw.update(changes)
        return ArmaParams(**kw)

    def to_dict(self) -> dict:
        return {
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "sigma2": self.sigma2,
            "mean": self.mean,
        }


@dataclass(frozen=True)
class ValidityReport:
    causal: bool
    invertible: bool
    sigma2_positive: bool

    @property
    def valid(self) -> bool:
        return self.causal and self.invertible and self.sigma2_positive


def max_inv_root_modulus(coeffs: np.ndarray, kind: str) -> float:
    """Largest modulus among the inverted roots of Phi (``kind='AR'``) or Theta (``'MA'``)."""
    from .poly import coeffs_to_inv_roots

    roots = coeffs_to_inv_roots(coeffs, kind)
    return float(np.abs(roots).max()) if roots.size else 0.0


def validate_params(params: ArmaParams, order: ArmaOrder) -> ValidityReport:
    params.check_order(order)
    causal = max_inv_root_modulus(params.phi, "AR") < MAX_INV_MODULUS
    invertible = max_inv_root_modulus(params.theta, "MA") < MAX_INV_MODULUS
    return ValidityReport(bool(causal), bool(invertible), params.sigma2 > 0)


@dataclass(frozen=True)
class FitResult:
    """Outcome of a (multi-start) maximum likelihood fit."""

    order: ArmaOrder
    params: ArmaParams
    loglik: float
    aic: float
    n_starts_used: int
    per_start_logliks: np.ndarray
    converged: bool
    se: Optional[np.ndarray] = None
    css_fallback: bool = False
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "per_start_logliks", _frozen(self.per_start_logliks))
        if self.se is not None:
            object.__setattr__(self, "se", _frozen(self.se))

    def with_se(self, se) -> "FitResult":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw["se"] = se
        return FitResult(**kw)

    def to_dict(self) -> dict:
        names = self.order.param_names()
        se = None
        if self.se is not None:
            se = {k: (None if not np.isfinite(v) else float(v)) for k, v in zip(names, self.se)}
        return {
            "order": {"p": self.order.p, "q": self.order.q, "include_mean": self.order.include_mean},
            "params": self.params.to_dict(),
            "loglik": self.loglik,
            "aic": self.aic,
            "se": se,
            "n_starts_used": self.n_starts_used,
            "per_start_logliks": self.per_start_logliks.tolist(),
            "converged": self.converged,
            "css_fallback": self.css_fallback,
            "config": self.config,
        }
