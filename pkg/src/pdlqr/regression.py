"""Bellman regression pairs and the plain least-squares baseline.

A triple (x, u, x+) together with a gain K yields one regression pair
(gamma_hat, c) whose noise-free version satisfies <gamma, xi_K> = c with
xi_K the stacked parameters [vec(B^T P A); vecs(B^T P B); vecs(P)]. The
next state enters the regressor itself, so ordinary least squares on these
pairs is an errors-in-variables problem and stays biased under process
noise; it is kept here as the baseline.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, InformativityError
from .lqr import CostWeights, stage_cost_matrix
from .vectorize import param_dim, tri_len, unvec, unvecs, vecv_rows


def bellman_regressors(x, u, x_plus, gain, weights: CostWeights,
                       noise_lift_vec) -> tuple[np.ndarray, np.ndarray]:
    """Build all regression pairs for one gain from raw sample arrays.

    Parameters
    ----------
    x, u, x_plus : (N, n_x), (N, n_u), (N, n_x) arrays of triples.
    gain : the feedback gain the pairs are evaluated at.
    weights : stage-cost weights defining the targets.
    noise_lift_vec : vecs-dual lift of the noise covariance.

    Returns
    -------
    (regressors, targets) : (N, d) matrix of gamma_hat rows and (N,) targets.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    x_plus = np.atleast_2d(np.asarray(x_plus, dtype=float))
    gain = np.asarray(gain, dtype=float)
    n_u, n_x = gain.shape
    if x.shape[1] != n_x or u.shape[1] != n_u or x_plus.shape[1] != n_x:
        raise DimensionError("sample widths do not match the gain dimensions")
    w_lift = np.asarray(noise_lift_vec, dtype=float).ravel()
    if w_lift.size != tri_len(n_x):
        raise DimensionError("noise lift has the wrong length")

    deviation = u - x @ gain.T
    # row-wise kron(x_k, deviation_k): slot i*n_u + j holds x_i * dev_j
    cross = 2.0 * np.einsum("ni,nj->nij", x, deviation).reshape(len(x), -1)
    kx = x @ gain.T
    regressors = np.hstack([
        cross,
        vecv_rows(u) - vecv_rows(kx),
        vecv_rows(x) + w_lift - vecv_rows(x_plus),
    ])
    q_k = stage_cost_matrix(weights, gain)
    targets = np.einsum("ni,ij,nj->n", x, q_k, x)
    return regressors, targets


def build_sample(x, u, x_plus, gain, weights: CostWeights,
                 noise_lift_vec) -> tuple[np.ndarray, float]:
    """Regression pair (gamma_hat, c) of a single triple."""
    g, c = bellman_regressors(
        np.asarray(x, dtype=float)[None, :],
        np.asarray(u, dtype=float)[None, :],
        np.asarray(x_plus, dtype=float)[None, :],
        gain, weights, noise_lift_vec,
    )
    return g[0], float(c[0])


def lstsq_estimate(regressors: np.ndarray, targets: np.ndarray,
                   max_condition: float = 1e12) -> np.ndarray:
    """Least-squares solution of regressors @ xi = targets via QR/SVD.

    Raises InformativityError when the problem is underdetermined or the
    regressor matrix is numerically rank deficient.
    """
    g = np.asarray(regressors, dtype=float)
    c = np.asarray(targets, dtype=float).ravel()
    if g.ndim != 2 or len(g) != len(c):
        raise DimensionError("regressors and targets do not align")
    n, d = g.shape
    if n < d:
        raise InformativityError(
            f"underdetermined regression: {n} samples for {d} unknowns"
        )
    solution, _, rank, singular_values = np.linalg.lstsq(g, c, rcond=None)
    smallest = float(singular_values[-1])
    if rank < d or smallest <= 0 or singular_values[0] / smallest > max_condition:
        raise InformativityError(
            f"regressors are numerically rank deficient: "
            f"smallest singular value {smallest:.6e}"
        )
    return solution


def split_parameters(xi, n_x: int, n_u: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unpack a stacked parameter vector into (B^T P A, B^T P B, P)."""
    xi = np.asarray(xi, dtype=float).ravel()
    if xi.size != param_dim(n_x, n_u):
        raise DimensionError(
            f"parameter vector length {xi.size} does not match "
            f"(n_x={n_x}, n_u={n_u})"
        )
    a_len = n_u * n_x
    b_len = tri_len(n_u)
    btpa = unvec(xi[:a_len], n_u, n_x)
    btpb = unvecs(xi[a_len:a_len + b_len])
    p = unvecs(xi[a_len + b_len:])
    return btpa, btpb, p


def informativity_floor(regressors) -> float:
    """Smallest squared row norm over a batch of regressors.

    Zero means some sample carries no information and identifiability-based
    error bounds are void; callers must reject such batches.
    """
    g = np.atleast_2d(np.asarray(regressors, dtype=float))
    if g.size == 0:
        raise ValueError("empty regressor batch")
    return float(np.min(np.einsum("nd,nd->n", g, g)))


def mean_abs_residual(xi, regressors, targets) -> float:
    """Mean absolute Bellman residual (1/N) sum_k |<gamma_k, xi> - c_k|.

    Evaluated with exact (noise-free) regressors this upper-bounds
    sqrt(informativity_floor) * ||xi - xi_K||, which is the computable
    surrogate linking the saddle-point gap to the estimation error.
    """
    g = np.atleast_2d(np.asarray(regressors, dtype=float))
    c = np.asarray(targets, dtype=float).ravel()
    if len(g) != len(c):
        raise DimensionError("regressors and targets do not align")
    return float(np.mean(np.abs(g @ np.asarray(xi, dtype=float) - c)))
