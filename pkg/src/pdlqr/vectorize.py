"""Vectorization maps between matrices, symmetric matrices and flat coordinates.

All half-vectorized quantities share one upper-triangular ordering:
(0,0), (0,1), ..., (0,n-1), (1,1), ..., (n-1,n-1). Every consumer in the
package goes through these functions so the ordering can never drift.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, SymmetryError

SYMMETRY_RTOL = 1e-12


def symmetrize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def as_symmetric(m, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Validate symmetry to within ``rtol`` and absorb roundoff via (M + M^T)/2."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    skew = np.linalg.norm(m - m.T)
    if skew > rtol * (1.0 + np.linalg.norm(m)):
        raise SymmetryError(f"matrix is asymmetric: ||M - M^T|| = {skew:.3e}")
    return symmetrize(m)


def tri_len(n: int) -> int:
    """Number of upper-triangular entries of an n x n matrix."""
    return n * (n + 1) // 2


def tri_dim(length: int) -> int:
    """Inverse of :func:`tri_len`; raises if ``length`` is not triangular."""
    n = int(round((np.sqrt(8 * length + 1) - 1) / 2))
    if tri_len(n) != length:
        raise DimensionError(f"{length} is not a triangular number")
    return n


def param_dim(n_x: int, n_u: int) -> int:
    """Length of the stacked parameter vector [vec, vecs, vecs blocks]."""
    return n_u * n_x + tri_len(n_u) + tri_len(n_x)


def vec(m) -> np.ndarray:
    """Stack the columns of a matrix into one vector."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got ndim={m.ndim}")
    return m.ravel(order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != rows * cols:
        raise DimensionError(f"cannot reshape length {v.size} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def vecv(v) -> np.ndarray:
    """Quadratic monomials [v1^2, v1*v2, ..., v1*vn, v2^2, ..., vn^2]."""
    v = np.asarray(v, dtype=float).ravel()
    i, j = np.triu_indices(v.size)
    return v[i] * v[j]


def vecv_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise :func:`vecv` of a 2-D array of samples."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DimensionError(f"expected samples in rows, got ndim={x.ndim}")
    i, j = np.triu_indices(x.shape[1])
    return x[:, i] * x[:, j]


def vecs(p, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Upper-triangular stack of a symmetric matrix, off-diagonals doubled."""
    p = as_symmetric(p, rtol)
    i, j = np.triu_indices(p.shape[0])
    scale = np.where(i == j, 1.0, 2.0)
    return scale * p[i, j]


def unvecs(v) -> np.ndarray:
    """Inverse of :func:`vecs`; off-diagonals are half the stored coefficients."""
    v = np.asarray(v, dtype=float).ravel()
    n = tri_dim(v.size)
    i, j = np.triu_indices(n)
    out = np.zeros((n, n))
    out[i, j] = np.where(i == j, v, 0.5 * v)
    out[j, i] = out[i, j]
    return out


def kron(x, y) -> np.ndarray:
    """Kronecker product of two vectors: block i of the output is x[i] * y."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    return np.kron(x, y)
