"""Independent reference computations used by the test suite.

Apart from the MA(1) grid scan, nothing here touches the state-space code: autocovariances come from the
extended Yule-Walker system and the log-density from a dense covariance.
"""

import numpy as np
from scipy import stats

from armaml.core import ArmaParams
from armaml.likelihood import kalman_loglik


def psi_weights(phi, theta, n):
    p, q = len(phi), len(theta)
    psi = np.zeros(n)
    psi[0] = 1.0
    for j in range(1, n):
        v = theta[j - 1] if j <= q else 0.0
        for i in range(1, min(j, p) + 1):
            v += phi[i - 1] * psi[j - i]
        psi[j] = v
    return psi


def arma_acvf(phi, theta, sigma2, nlags):
    """gamma(0..nlags-1) from the extended Yule-Walker equations.

    gamma(k) - sum_i phi_i gamma(k-i) = sigma2 * sum_{j>=k} theta_j psi_{j-k}, theta_0 = 1.
    """
    phi = np.asarray(phi, float)
    theta = np.asarray(theta, float)
    p, q = phi.size, theta.size
    th = np.concatenate([[1.0], theta])
    psi = psi_weights(phi, theta, q + 1)
    m = max(p, q) + 1
    rhs_full = np.zeros(max(m, nlags))
    for k in range(q + 1):
        rhs_full[k] = sigma2 * sum(th[j] * psi[j - k] for j in range(k, q + 1))
    # unknowns gamma(0..p); equations k = 0..p
    A = np.zeros((p + 1, p + 1))
    for k in range(p + 1):
        A[k, k] += 1.0
        for i in range(1, p + 1):
            A[k, abs(k - i)] -= phi[i - 1]
    g = list(np.linalg.solve(A, rhs_full[: p + 1]))
    for k in range(p + 1, max(nlags, m)):
        g.append(rhs_full[k] + sum(phi[i - 1] * g[k - i] for i in range(1, p + 1)))
    return np.array(g[:nlags])


def dense_loglik(x, phi, theta, sigma2, mean=0.0, mask=None):
    """Gaussian log-density of the observed entries under the model covariance."""
    x = np.asarray(x, float)
    n = x.size
    g = arma_acvf(phi, theta, sigma2, n)
    idx = np.arange(n)
    cov = g[np.abs(idx[:, None] - idx[None, :])]
    keep = np.ones(n, bool) if mask is None else ~np.asarray(mask, bool)
    return float(stats.multivariate_normal(mean=np.full(keep.sum(), mean), cov=cov[np.ix_(keep, keep)]).logpdf(x[keep]))


def css_scalar(x, phi, theta):
    """Plain-Python CSS recursion written without array slicing."""
    p, q = len(phi), len(theta)
    w = {}
    total = 0.0
    for t in range(1, len(x) + 1):
        if t <= p:
            w[t] = 0.0
            continue
        v = x[t - 1]
        for i in range(1, p + 1):
            v -= phi[i - 1] * x[t - 1 - i]
        for j in range(1, q + 1):
            v -= theta[j - 1] * w.get(t - j, 0.0)
        w[t] = v
        total += v * v
    return total


def random_valid(p, q, rng, max_mod=0.9):
    """Coefficients from random inverted roots inside a disc of radius max_mod."""
    def poly(k, sign):
        roots = []
        while len(roots) < k:
            if k - len(roots) >= 2 and rng.random() < 0.5:
                r, a = rng.uniform(0, max_mod), rng.uniform(0, np.pi)
                z = r * np.exp(1j * a)
                roots += [z, np.conj(z)]
            else:
                roots.append(rng.uniform(-max_mod, max_mod))
        c = np.array([1.0 + 0j])
        for z in roots:
            c = np.convolve(c, [1.0, -z])
        return sign * -c.real[1:]

    return poly(p, 1.0), poly(q, -1.0)


# MA(1) series with two interior likelihood modes (theta ~ -0.898 global, ~ -0.051 local)
MA1_BIMODAL = [
    -2.186416, -0.417671, -0.295127, 0.230142, 0.242827, 1.634151, 0.635426, -1.586308, -1.338573,
    1.244038, -0.25499, 1.023979, 0.091794, -0.580602, 0.933671, -0.172784, -1.136395, -0.165755,
    1.227489, -0.61445, 1.324528, -0.388881, -0.794936, -0.604888, 0.022939,
]


def grid_modes(series, order, lo=-0.999, hi=0.999, num=1999):
    """Local maxima of the MA(1) log-likelihood on a dense theta grid."""
    g = np.linspace(lo, hi, num)
    ll = np.array([kalman_loglik(series, ArmaParams([], [t]), order).loglik for t in g])
    idx = [i for i in range(1, num - 1) if ll[i] > ll[i - 1] and ll[i] > ll[i + 1]]
    return g[idx], ll[idx]
