"""Exact Gaussian ARMA log-likelihood through the Kalman filter, and the CSS objective.

The state-space form has dimension ``r = max(p, q + 1)``::

    z_t = T z_{t-1} + Q w_t,    x_t = (1 0 ... 0) z_t

with phi_1..phi_r in the first column of ``T``, ones on the superdiagonal and
``Q = (1, theta_1, ..., theta_{r-1})``.  The initial state covariance is the
stationary solution of ``P = T P T' + sigma^2 Q Q'``.

The log-likelihood always includes the ``-(n/2) log(2 pi)`` constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .core import (
    MAX_INV_MODULUS,
    ArmaOrder,
    ArmaParams,
    NumericalDegeneracyError,
    StationarityError,
    TimeSeries,
    UnsupportedGapError,
)


@dataclass(frozen=True)
class StateSpace:
    r: int
    T: np.ndarray
    Q: np.ndarray
    phi_ext: np.ndarray
    theta_ext: np.ndarray

    @property
    def Z(self) -> np.ndarray:
        z = np.zeros(self.r)
        z[0] = 1.0
        return z


@dataclass(frozen=True)
class FilterOutput:
    loglik: float
    innovations: np.ndarray
    innovation_variances: np.ndarray
    sigma2_hat: float


def build_state_space(params: ArmaParams, order: ArmaOrder) -> StateSpace:
    params.check_order(order)
    phi_r, theta_r = K.pad(np.asarray(params.phi, float), np.asarray(params.theta, float))
    r = phi_r.size
    T = np.zeros((r, r))
    T[:, 0] = phi_r
    T[np.arange(r - 1), np.arange(1, r)] = 1.0
    Q = np.concatenate([[1.0], theta_r])
    return StateSpace(r, T, Q, phi_r, theta_r)


def stationary_covariance(ss: StateSpace, sigma2: float = 1.0) -> np.ndarray:
    """Solve ``(I - T kron T) vec(P) = vec(sigma^2 Q Q')`` for the initial state covariance."""
    return sigma2 * K.stationary_cov(ss.phi_ext, ss.theta_ext)


def kalman_loglik(
    series: TimeSeries,
    params: ArmaParams,
    order: ArmaOrder,
    concentrate: bool = True,
) -> FilterOutput:
    """Exact log-likelihood of ``series`` under ``params``.

    With ``concentrate=True`` the variance is replaced by its maximizer
    ``sum(e_t^2 / F_t) / n_obs`` and ``params.sigma2`` is ignored.  Missing
    observations skip the filter's update step and do not count in ``n_obs``.
    The series mean is removed using ``params.mean`` when the order includes a
    mean; otherwise the series is taken as zero-mean.
    """
    params.check_order(order)
    if K.max_inv_modulus(params.phi, 1.0) >= MAX_INV_MODULUS:
        raise StationarityError("AR polynomial has a root on or inside the unit circle")
    mean = params.mean if order.include_mean else 0.0
    y = np.asarray(series.values, float) - mean
    miss = np.asarray(series.missing_mask)
    e, F, status = K.kalman_filter(y, miss, *K.pad(params.phi, params.theta))
    if status == K.NOT_STATIONARY:
        raise StationarityError("no stationary initial covariance exists")
    if status == K.DEGENERATE:
        raise NumericalDegeneracyError("non-positive innovation variance")
    obs = ~miss
    nobs = int(obs.sum())
    scaled = np.sum(e[obs] ** 2 / F[obs])
    logdet = np.sum(np.log(F[obs]))
    if concentrate:
        sigma2 = scaled / nobs
        ll = -0.5 * nobs * (np.log(2 * np.pi * sigma2) + 1.0) - 0.5 * logdet
    else:
        sigma2 = params.sigma2
        ll = -0.5 * (nobs * np.log(2 * np.pi * sigma2) + logdet + scaled / sigma2)
    innov = np.where(obs, e, np.nan)
    return FilterOutput(float(ll), innov, F * sigma2, float(sigma2))


def css_residuals(series: TimeSeries, params: ArmaParams, order: ArmaOrder) -> np.ndarray:
    params.check_order(order)
    if series.has_missing:
        raise UnsupportedGapError("conditional sum of squares is not defined for series with gaps")
    mean = params.mean if order.include_mean else 0.0
    return K.css_residuals(np.asarray(series.values, float) - mean, params.phi, params.theta)


def css_objective(series: TimeSeries, params: ArmaParams, order: ArmaOrder) -> float:
    """Conditional sum of squares ``sum_{t=p+1}^n w_t^2`` with pre-sample noise set to zero."""
    w = css_residuals(series, params, order)
    return float(np.sum(w[order.p :] ** 2))
