"""Exact model-based machinery for the average-cost discrete-time LQR.

Everything here assumes the plant is known; these routines serve both as the
reference update rules and as oracles against which the data-driven
estimators are validated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    StabilityError,
    StabilizabilityError,
)
from .vectorize import as_symmetric, kron, symmetrize, vec, vecs, vecv

#: Gains with closed-loop spectral radius above 1 - STABILITY_MARGIN are
#: rejected, so boundary cases never flap between stable and unstable.
STABILITY_MARGIN = 1e-9

_LYAP_INTERNAL_TOL = 1e-13
_LYAP_ACCEPT_TOL = 1e-10
_MAX_ITER = 10**5


@dataclass(frozen=True)
class LinearSystem:
    """Discrete-time plant x+ = A x + B u + w with w ~ N(0, sigma_w)."""

    A: np.ndarray
    B: np.ndarray
    sigma_w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float))
        object.__setattr__(self, "sigma_w", as_symmetric(self.sigma_w))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError(f"A must be square, got {self.A.shape}")
        if self.B.ndim != 2 or self.B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {self.B.shape}")
        if self.sigma_w.shape != (n, n):
            raise DimensionError(
                f"sigma_w must be {n}x{n}, got {self.sigma_w.shape}"
            )
        if smallest_eigenvalue(self.sigma_w) < -1e-10:
            raise DomainError("sigma_w must be positive semidefinite")

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class CostWeights:
    """Quadratic stage-cost weights; both matrices must be positive definite."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Q", as_symmetric(self.Q))
        object.__setattr__(self, "R", as_symmetric(self.R))
        if smallest_eigenvalue(self.Q) <= 0:
            raise DomainError("Q must be positive definite")
        if smallest_eigenvalue(self.R) <= 0:
            raise DomainError("R must be positive definite")


@dataclass(frozen=True)
class ValueSolution:
    """Value matrix, average cost and stationary covariance of one policy."""

    P: np.ndarray
    cost: float
    sigma: np.ndarray


def smallest_eigenvalue(m) -> float:
    return float(np.linalg.eigvalsh(as_symmetric(m))[0])


def spectral_radius(m) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def closed_loop(sys: LinearSystem, gain) -> np.ndarray:
    gain = np.asarray(gain, dtype=float)
    if gain.shape != (sys.n_u, sys.n_x):
        raise DimensionError(
            f"gain must be {sys.n_u}x{sys.n_x}, got {gain.shape}"
        )
    return sys.A + sys.B @ gain


def is_stabilizing(sys: LinearSystem, gain) -> bool:
    return spectral_radius(closed_loop(sys, gain)) < 1.0 - STABILITY_MARGIN


def _require_stabilizing(sys: LinearSystem, gain) -> np.ndarray:
    a_cl = closed_loop(sys, gain)
    rho = spectral_radius(a_cl)
    if rho >= 1.0 - STABILITY_MARGIN:
        raise StabilityError(f"closed-loop spectral radius {rho:.6f} >= 1")
    return a_cl


def stage_cost_matrix(weights: CostWeights, gain) -> np.ndarray:
    gain = np.asarray(gain, dtype=float)
    return symmetrize(weights.Q + gain.T @ weights.R @ gain)


def _doubling_fixed_point(m: np.ndarray, q0: np.ndarray, transpose_left: bool,
                          tol: float = _LYAP_INTERNAL_TOL,
                          max_iter: int = _MAX_ITER) -> np.ndarray:
    # Accumulates sum_j M^j Q0 (M^T)^j (or the transposed pairing) by
    # repeated squaring, so 2^k terms cost k sweeps.
    p = q0.copy()
    mk = m.copy()
    for _ in range(max_iter):
        if transpose_left:
            inc = mk.T @ p @ mk
        else:
            inc = mk @ p @ mk.T
        p_new = symmetrize(p + inc)
        if np.linalg.norm(inc) <= tol * max(1.0, np.linalg.norm(p_new)):
            return p_new
        p = p_new
        mk = mk @ mk
    raise ConvergenceError("fixed-point doubling iteration did not converge")


def solve_policy_lyapunov(sys: LinearSystem, weights: CostWeights, gain) -> np.ndarray:
    """Value matrix P of a stabilizing gain: P = A_K^T P A_K + Q + K^T R K.

    Raises
    ------
    StabilityError
        If the gain does not stabilize the closed loop.
    ConvergenceError
        If the accepted residual 1e-10 * max(1, ||P||_F) is not met.
    """
    a_cl = _require_stabilizing(sys, gain)
    q_k = stage_cost_matrix(weights, gain)
    p = _doubling_fixed_point(a_cl, q_k, transpose_left=True)
    residual = np.linalg.norm(p - a_cl.T @ p @ a_cl - q_k)
    if residual > _LYAP_ACCEPT_TOL * max(1.0, np.linalg.norm(p)):
        raise ConvergenceError(f"Lyapunov residual {residual:.3e} too large")
    return p


def stationary_covariance(sys: LinearSystem, gain) -> np.ndarray:
    """Steady-state covariance of a stabilizing closed loop.

    Solves sigma = A_K sigma A_K^T + sigma_w; the long-run time average of
    the state covariance equals this fixed point for any initial state
    distribution, so the initial covariance never enters.
    """
    a_cl = _require_stabilizing(sys, gain)
    sigma = _doubling_fixed_point(a_cl, sys.sigma_w, transpose_left=False)
    residual = np.linalg.norm(sigma - a_cl @ sigma @ a_cl.T - sys.sigma_w)
    if residual > _LYAP_ACCEPT_TOL * max(1.0, np.linalg.norm(sigma)):
        raise ConvergenceError(f"covariance residual {residual:.3e} too large")
    return sigma


def average_cost(sys: LinearSystem, weights: CostWeights, gain) -> float:
    """Infinite-horizon average cost Tr(P_K sigma_w) of a stabilizing gain.

    The dual expression Tr(Q_K sigma_K) is evaluated as an internal
    consistency check; a relative mismatch above 1e-9 raises.
    """
    p = solve_policy_lyapunov(sys, weights, gain)
    sigma = stationary_covariance(sys, gain)
    primal = float(np.trace(p @ sys.sigma_w))
    dual = float(np.trace(stage_cost_matrix(weights, gain) @ sigma))
    if abs(primal - dual) > 1e-9 * max(1.0, abs(primal)):
        raise ConvergenceError(
            f"cost identity violated: Tr(P sigma_w)={primal!r}, "
            f"Tr(Q_K sigma_K)={dual!r}"
        )
    return primal


def evaluate_policy(sys: LinearSystem, weights: CostWeights, gain) -> ValueSolution:
    p = solve_policy_lyapunov(sys, weights, gain)
    sigma = stationary_covariance(sys, gain)
    return ValueSolution(P=p, cost=float(np.trace(p @ sys.sigma_w)), sigma=sigma)


def cost_gradient(sys: LinearSystem, weights: CostWeights, gain) -> np.ndarray:
    """Exact policy gradient 2 [(R + B^T P B) K + B^T P A] sigma_K."""
    gain = np.asarray(gain, dtype=float)
    p = solve_policy_lyapunov(sys, weights, gain)
    sigma = stationary_covariance(sys, gain)
    e_k = (weights.R + sys.B.T @ p @ sys.B) @ gain + sys.B.T @ p @ sys.A
    return 2.0 * e_k @ sigma


def solve_dare(sys: LinearSystem, weights: CostWeights,
               tol: float = _LYAP_INTERNAL_TOL,
               max_iter: int = _MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
    """Optimal gain and value matrix via a structured doubling iteration.

    Returns (K*, P*) with K* = -(R + B^T P* B)^{-1} B^T P* A. Divergence or
    a failed residual check raises StabilizabilityError.
    """
    n = sys.n_x
    a_k = sys.A.copy()
    g = symmetrize(sys.B @ np.linalg.solve(weights.R, sys.B.T))
    h = weights.Q.copy()
    eye = np.eye(n)
    converged = False
    for _ in range(max_iter):
        try:
            w_inv_a = np.linalg.solve(eye + g @ h, a_k)
            w_inv_g = np.linalg.solve(eye + g @ h, g)
        except np.linalg.LinAlgError as exc:
            raise StabilizabilityError(f"doubling iteration broke down: {exc}")
        h_inc = a_k.T @ h @ w_inv_a
        g = symmetrize(g + a_k @ w_inv_g @ a_k.T)
        h = symmetrize(h + h_inc)
        a_k = a_k @ w_inv_a
        # catch divergence well before float overflow contaminates the checks
        if (not np.all(np.isfinite(h)) or not np.all(np.isfinite(a_k))
                or np.linalg.norm(h) > 1e75 or np.linalg.norm(a_k) > 1e75):
            raise StabilizabilityError("Riccati iteration diverged")
        if np.linalg.norm(h_inc) <= tol * max(1.0, np.linalg.norm(h)):
            converged = True
            break
    if not converged:
        raise StabilizabilityError("Riccati iteration did not converge")
    p = h
    inner = weights.R + sys.B.T @ p @ sys.B
    gain = -np.linalg.solve(inner, sys.B.T @ p @ sys.A)
    residual = np.linalg.norm(
        p - weights.Q - sys.A.T @ p @ sys.A
        - sys.A.T @ p @ sys.B @ np.linalg.solve(inner, -sys.B.T @ p @ sys.A)
    )
    if residual > _LYAP_ACCEPT_TOL * max(1.0, np.linalg.norm(p)):
        raise StabilizabilityError(f"Riccati residual {residual:.3e} too large")
    if not is_stabilizing(sys, gain):
        raise StabilizabilityError("Riccati solution is not stabilizing")
    return gain, p


def noise_lift(sigma_w) -> np.ndarray:
    """Vector W pairing vecs(P) with Tr(P sigma_w): dot(vecs(P), W) = Tr(P sigma_w).

    Slot (i, j) of W in the shared upper-triangular ordering holds
    sigma_w[i, j]; this equals the sum over eigenpairs of
    vecv(sqrt(lambda_k) v_k), computed here in closed form.
    """
    sigma_w = as_symmetric(sigma_w)
    if smallest_eigenvalue(sigma_w) < -1e-10:
        raise DomainError("noise covariance must be positive semidefinite")
    i, j = np.triu_indices(sigma_w.shape[0])
    return sigma_w[i, j].copy()


def bellman_parameters(sys: LinearSystem, weights: CostWeights, gain) -> np.ndarray:
    """Exact stacked parameters [vec(B^T P A); vecs(B^T P B); vecs(P)]."""
    p = solve_policy_lyapunov(sys, weights, gain)
    btpa = sys.B.T @ p @ sys.A
    btpb = symmetrize(sys.B.T @ p @ sys.B)
    return np.concatenate([vec(btpa), vecs(btpb), vecs(p)])


def expected_regressor(sys: LinearSystem, gain, x, u) -> np.ndarray:
    """Conditional expectation of the Bellman regressor for one (x, u) pair.

    The noise-lift terms cancel against the expectation of vecv(x+), so the
    last block reduces to vecv(x) - vecv(A x + B u).
    """
    gain = np.asarray(gain, dtype=float)
    x = np.asarray(x, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    if x.size != sys.n_x or u.size != sys.n_u:
        raise DimensionError(
            f"expected state of length {sys.n_x} and input of length {sys.n_u}"
        )
    kx = gain @ x
    return np.concatenate([
        2.0 * kron(x, u - kx),
        vecv(u) - vecv(kx),
        vecv(x) - vecv(sys.A @ x + sys.B @ u),
    ])


def stage_cost(weights: CostWeights, gain, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    return float(x @ stage_cost_matrix(weights, gain) @ x)


def lipschitz_constants(sys: LinearSystem, weights: CostWeights,
                        cost_at_gain: float, cost_at_opt: float) -> tuple[float, float]:
    """Gain bound b and cost Lipschitz constant h at a given cost level.

    Both are closed-form, nondecreasing functions of ``cost_at_gain``; they
    feed the per-iteration estimation-error budgets of the model-free
    updates.
    """
    lam_r = smallest_eigenvalue(weights.R)
    lam_w = smallest_eigenvalue(sys.sigma_w)
    lam_q = smallest_eigenvalue(weights.Q)
    if lam_r <= 0 or lam_w <= 0:
        raise DomainError("R and sigma_w must be positive definite")
    if not cost_at_gain >= cost_at_opt > 0:
        raise DomainError("costs must satisfy cost_at_gain >= cost_at_opt > 0")
    norm_a = float(np.linalg.norm(sys.A, 2))
    norm_b = float(np.linalg.norm(sys.B, 2))
    norm_r = float(np.linalg.norm(weights.R, 2))
    gain_bound = (
        norm_b * norm_a * cost_at_gain / lam_w
        + np.sqrt(
            (cost_at_gain - cost_at_opt)
            * (norm_r + norm_b**2 * cost_at_gain / lam_w)
            / lam_w
        )
    ) / lam_r
    cost_lipschitz = (
        6.0
        * (cost_at_gain / (lam_w * lam_q)) ** 2
        * (2.0 * gain_bound**2 * norm_r * norm_b + gain_bound * norm_r)
        * float(np.trace(sys.sigma_w))
    )
    return float(gain_bound), float(cost_lipschitz)


def rollout_average_cost(sys: LinearSystem, weights: CostWeights, gain,
                         steps: int, seed: int, sigma_0=None) -> float:
    """Long-horizon Cesaro average of the stage cost along one noisy rollout.

    Independent of the Tr(P sigma_w) formula on purpose: this is the
    simulation oracle used to cross-check the closed-form cost.
    """
    if steps < 1:
        raise DomainError("steps must be >= 1")
    a_cl = _require_stabilizing(sys, gain)
    q_k = stage_cost_matrix(weights, gain)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    noise_factor = _psd_sqrt(sys.sigma_w)
    init_factor = noise_factor if sigma_0 is None else _psd_sqrt(as_symmetric(sigma_0))
    x = init_factor @ rng.standard_normal(sys.n_x)
    noise = rng.standard_normal((steps, sys.n_x)) @ noise_factor.T
    states = np.empty((steps, sys.n_x))
    for t in range(steps):
        states[t] = x
        x = a_cl @ x + noise[t]
    return float(np.einsum("ti,ij,tj->", states, q_k, states) / steps)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs_ = np.linalg.eigh(m)
    return vecs_ @ np.diag(np.sqrt(np.clip(vals, 0.0, None)))
