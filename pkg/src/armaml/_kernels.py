"""Compiled inner loops: Kalman filter, CSS recursion, root-modulus checks.

The filter runs the Harvey-form state space with unit disturbance variance;
callers rescale by sigma^2 (the filter is linear in it).
"""

import numpy as np
from numba import njit

OK = 0
NOT_STATIONARY = 1
DEGENERATE = 2

# max entrywise change of the predicted covariance treated as converged
STEADY_TOL = 1e-13


@njit(cache=True, nogil=True)
def max_inv_modulus(coeffs, sign):
    k = coeffs.size
    while k > 0 and coeffs[k - 1] == 0.0:
        k -= 1
    if k == 0:
        return 0.0
    if k == 1:
        return abs(coeffs[0])
    C = np.zeros((k, k), np.complex128)
    for i in range(k):
        C[0, i] = sign * coeffs[i]
    for i in range(1, k):
        C[i, i - 1] = 1.0
    ev = np.linalg.eigvals(C)
    m = 0.0
    for v in ev:
        a = abs(v)
        if a > m:
            m = a
    return m


@njit(cache=True, nogil=True)
def pad(phi, theta):
    p = phi.size
    q = theta.size
    r = max(p, q + 1)
    phi_r = np.zeros(r)
    theta_r = np.zeros(r - 1)
    phi_r[:p] = phi
    theta_r[:q] = theta
    return phi_r, theta_r


@njit(cache=True, nogil=True)
def stationary_cov(phi_r, theta_r):
    r = phi_r.size
    T = np.zeros((r, r))
    for i in range(r):
        T[i, 0] = phi_r[i]
        if i + 1 < r:
            T[i, i + 1] = 1.0
    R = np.ones(r)
    R[1:] = theta_r
    A = np.eye(r * r) - np.kron(T, T)
    b = np.outer(R, R).ravel()
    return np.linalg.solve(A, b).reshape(r, r)


@njit(cache=True, nogil=True)
def kalman_filter(y, miss, phi_r, theta_r):
    """Innovations ``e`` and unit-scale variances ``F`` for a zero-mean series.

    ``F[t]`` is nan at missing indices.  Returns ``(e, F, status)``.
    """
    n = y.size
    r = phi_r.size
    e = np.zeros(n)
    F = np.full(n, np.nan)
    P = stationary_cov(phi_r, theta_r)
    for i in range(r):
        if not np.isfinite(P[i, i]) or P[i, i] < 0.0:
            return e, F, NOT_STATIONARY
    R = np.ones(r)
    R[1:] = theta_r
    a = np.zeros(r)
    an = np.zeros(r)
    Pn = np.zeros((r, r))
    k = np.zeros(r)
    row0 = np.zeros(r)
    Pprev = np.zeros((r, r))
    steady = False
    for t in range(n):
        if steady and not miss[t]:
            # covariance has converged: P is fixed, only the mean recursion runs
            f = P[0, 0]
            et = y[t] - a[0]
            e[t] = et
            F[t] = f
            for i in range(r):
                a[i] += k[i] * et
            for i in range(r):
                an[i] = phi_r[i] * a[0] + (a[i + 1] if i + 1 < r else 0.0)
            for i in range(r):
                a[i] = an[i]
            continue
        steady = False
        for i in range(r):
            for j in range(r):
                Pprev[i, j] = P[i, j]
        if not miss[t]:
            f = P[0, 0]
            if not f > 0.0:
                return e, F, DEGENERATE
            et = y[t] - a[0]
            e[t] = et
            F[t] = f
            for i in range(r):
                k[i] = P[i, 0] / f
                row0[i] = P[0, i]
            for i in range(r):
                a[i] += k[i] * et
            for i in range(r):
                for j in range(r):
                    P[i, j] -= k[i] * row0[j]
        # predict: (T a)_i = phi_i a_0 + a_{i+1}
        for i in range(r):
            an[i] = phi_r[i] * a[0] + (a[i + 1] if i + 1 < r else 0.0)
        for i in range(r):
            for j in range(i, r):
                v = phi_r[i] * phi_r[j] * P[0, 0] + R[i] * R[j]
                if j + 1 < r:
                    v += phi_r[i] * P[0, j + 1]
                if i + 1 < r:
                    v += phi_r[j] * P[i + 1, 0]
                    if j + 1 < r:
                        v += P[i + 1, j + 1]
                Pn[i, j] = v
                Pn[j, i] = v
        diff = 0.0
        for i in range(r):
            a[i] = an[i]
            for j in range(r):
                d = abs(Pn[i, j] - Pprev[i, j])
                if d > diff:
                    diff = d
                P[i, j] = Pn[i, j]
        if not miss[t] and diff < STEADY_TOL:
            steady = True
            for i in range(r):
                k[i] = P[i, 0] / P[0, 0]
    return e, F, OK


@njit(cache=True, nogil=True)
def filter_sums(y, miss, phi, theta):
    """(sum e^2/F, sum log F, n_obs, status) for the zero-mean series ``y``."""
    phi_r, theta_r = pad(phi, theta)
    e, F, status = kalman_filter(y, miss, phi_r, theta_r)
    s = 0.0
    lf = 0.0
    nobs = 0
    if status != OK:
        return s, lf, nobs, status
    for t in range(y.size):
        if not miss[t]:
            s += e[t] * e[t] / F[t]
            lf += np.log(F[t])
            nobs += 1
    return s, lf, nobs, status


@njit(cache=True, nogil=True)
def neg_profile_loglik(x, miss, phi, theta, mean, max_mod):
    """Negative concentrated log-likelihood; ``inf`` outside the causal/invertible region."""
    if max_inv_modulus(phi, 1.0) >= max_mod or max_inv_modulus(theta, -1.0) >= max_mod:
        return np.inf
    y = x - mean
    s, lf, nobs, status = filter_sums(y, miss, phi, theta)
    if status != OK or not s > 0.0:
        return np.inf
    sigma2 = s / nobs
    ll = -0.5 * nobs * (np.log(2.0 * np.pi * sigma2) + 1.0) - 0.5 * lf
    if not np.isfinite(ll):
        return np.inf
    return -ll


@njit(cache=True, nogil=True)
def css_residuals(x, phi, theta):
    """Residuals w_t for t > p with w_t = 0 for t <= p (zero-based: first p entries are 0)."""
    n = x.size
    p = phi.size
    q = theta.size
    w = np.zeros(n)
    for t in range(p, n):
        v = x[t]
        for i in range(p):
            v -= phi[i] * x[t - 1 - i]
        for j in range(q):
            s = t - 1 - j
            if s >= p:
                v -= theta[j] * w[s]
        w[t] = v
    return w


@njit(cache=True, nogil=True)
def css_sum(x, phi, theta):
    w = css_residuals(x, phi, theta)
    s = 0.0
    for t in range(phi.size, x.size):
        s += w[t] * w[t]
    return s
