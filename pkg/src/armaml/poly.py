"""Conversions between ARMA coefficients and inverted polynomial roots.

Sign conventions follow the model definition::

    Phi(x)   = 1 - phi_1 x - ... - phi_p x^p   = prod_i (1 - lambda_i x)
    Theta(x) = 1 + theta_1 x + ... + theta_q x^q = prod_j (1 - nu_j x)

so the inverted roots ``lambda_i`` / ``nu_j`` are the eigenvalues of the
companion matrix built from the coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ConjugacyError

CONJ_TOL = 1e-10


def _kind_sign(kind: str) -> float:
    kind = kind.upper()
    if kind == "AR":
        return 1.0
    if kind == "MA":
        return -1.0
    raise ValueError(f"kind must be 'AR' or 'MA', got {kind!r}")


@dataclass(frozen=True)
class RootSet:
    """Inverted AR roots (``lambda``) and inverted MA roots (``nu``)."""

    ar_inv_roots: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    ma_inv_roots: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def __post_init__(self):
        for name in ("ar_inv_roots", "ma_inv_roots"):
            arr = np.array(getattr(self, name), dtype=complex).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def moduli(self) -> np.ndarray:
        return np.abs(np.concatenate([self.ar_inv_roots, self.ma_inv_roots]))

    def is_stationary_invertible(self) -> bool:
        m = self.moduli()
        return bool(np.all(m < 1.0))


def companion(coeffs: np.ndarray, kind: str = "AR") -> np.ndarray:
    """Companion matrix whose eigenvalues are the inverted roots."""
    c = _kind_sign(kind) * np.asarray(coeffs, dtype=float)
    k = c.size
    C = np.zeros((k, k))
    if k:
        C[0, :] = c
        C[1:, :-1] = np.eye(k - 1)
    return C


def coeffs_to_inv_roots(coeffs, kind: str = "AR") -> np.ndarray:
    """Inverted roots (reciprocals of the polynomial roots) via companion-matrix eigenvalues.

    Trailing zero coefficients correspond to inverted roots at the origin.
    """
    c = np.asarray(coeffs, dtype=float).reshape(-1)
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    if c.size == 0:
        return np.zeros(0, dtype=complex)
    return np.linalg.eigvals(companion(c, kind)).astype(complex)


def _symmetrize(z: np.ndarray, tol: float) -> np.ndarray:
    """Snap near-real values to the real axis and average conjugate partners."""
    z = np.array(z, dtype=complex)
    scale = max(1.0, float(np.abs(z).max())) if z.size else 1.0
    out = z.copy()
    real = np.abs(z.imag) <= tol * scale
    out[real] = z[real].real
    rest = list(np.flatnonzero(~real))
    while rest:
        i = rest.pop(0)
        cands = [j for j in rest if abs(z[j] - np.conj(z[i])) <= tol * scale]
        if not cands:
            raise ConjugacyError(f"root {z[i]} has no conjugate partner")
        j = min(cands, key=lambda k: abs(z[k] - np.conj(z[i])))
        rest.remove(j)
        avg = 0.5 * (z[i] + np.conj(z[j]))
        out[i], out[j] = avg, np.conj(avg)
    return out


def inv_roots_to_coeffs(inv_roots, kind: str = "AR", tol: float = CONJ_TOL) -> np.ndarray:
    """Expand ``prod(1 - z_i x)`` and return phi (AR) or theta (MA)."""
    sign = _kind_sign(kind)
    z = _symmetrize(np.asarray(inv_roots, dtype=complex).reshape(-1), tol)
    poly = np.array([1.0 + 0j])
    for zi in z:
        poly = np.convolve(poly, [1.0, -zi])
    if np.any(np.abs(poly.imag) > tol * max(1.0, np.abs(poly).max())):
        raise ConjugacyError("reconstructed coefficients are not real")
    # poly = (1, a_1, ..., a_k) with Phi(x) = 1 + sum a_i x^i, so phi_i = -a_i
    return -sign * poly.real[1:]


def min_cross_distance(roots: RootSet) -> float:
    """Smallest |lambda_i - nu_j| over all AR/MA inverted-root pairs (inf if either is empty)."""
    a, m = roots.ar_inv_roots, roots.ma_inv_roots
    if a.size == 0 or m.size == 0:
        return float("inf")
    return float(np.abs(a[:, None] - m[None, :]).min())


def min_within_distance(inv_roots) -> float:
    """Smallest pairwise distance inside one polynomial's inverted roots (diagnostic only)."""
    z = np.asarray(inv_roots, dtype=complex)
    if z.size < 2:
        return float("inf")
    d = np.abs(z[:, None] - z[None, :])
    return float(d[np.triu_indices(z.size, 1)].min())


def params_root_set(phi, theta) -> RootSet:
    return RootSet(coeffs_to_inv_roots(phi, "AR"), coeffs_to_inv_roots(theta, "MA"))
