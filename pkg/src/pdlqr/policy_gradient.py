"""Policy update rules and the model-free outer loop.

The natural-gradient and Gauss-Newton updates only need the two matrix
blocks B^T P_K B and B^T P_K A. In the model-free loop those blocks come
from a regression estimate that is rebuilt from the same stored triples at
every iteration (the regressors depend on the current gain, the triples do
not), so one dataset serves the whole run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cspd import Ball, cspd_solve, multi_epoch_solve, sqrt_schedule
from .data import Dataset
from .errors import (
    AccuracyError,
    ConvergenceError,
    DimensionError,
    DomainError,
    InformativityError,
    StabilityError,
)
from .lqr import (
    CostWeights,
    LinearSystem,
    STABILITY_MARGIN,
    bellman_parameters,
    closed_loop,
    lipschitz_constants,
    noise_lift,
    smallest_eigenvalue,
    solve_dare,
    solve_policy_lyapunov,
    spectral_radius,
    stationary_covariance,
    symmetrize,
)
from .regression import bellman_regressors, lstsq_estimate, split_parameters
from .vectorize import vec, vecs

ESTIMATORS = ("exact", "cspd", "multi_epoch", "ls", "sysid")
METHODS = ("npg", "gnm")


def npg_step(gain, btpb, btpa, r, eta: float) -> np.ndarray:
    """Natural-gradient update K - 2 eta [(R + B^T P B) K + B^T P A]."""
    gain = np.asarray(gain, dtype=float)
    return gain - 2.0 * eta * ((np.asarray(r) + np.asarray(btpb)) @ gain + np.asarray(btpa))


def gnm_step(gain, btpb, btpa, r, eta: float) -> np.ndarray:
    """Gauss-Newton update K - 2 eta [K + (R + B^T P B)^{-1} B^T P A].

    The inner matrix must be comfortably positive definite; rejecting a
    non-PD estimate (instead of regularizing it) keeps the contraction
    accounting of the estimated update honest.
    """
    gain = np.asarray(gain, dtype=float)
    inner = symmetrize(np.asarray(r, dtype=float) + np.asarray(btpb, dtype=float))
    if smallest_eigenvalue(inner) <= 1e-10:
        raise AccuracyError(
            "R + B^T P B estimate is not positive definite; the estimation "
            "error exceeds the lambda_min(R)/2 safety margin"
        )
    return gain - 2.0 * eta * (gain + np.linalg.solve(inner, np.asarray(btpa, dtype=float)))


@dataclass(frozen=True)
class ContractionInfo:
    """Exact and estimation-robust contraction factors plus iteration bounds."""

    gamma: float
    gamma_hat: float
    rate: float          # per-step gap reduction 2 eta lambda_1(R) lambda_1(sigma_w) / ||sigma*||
    sigma: float

    def iteration_bound(self, initial_gap: float, epsilon: float) -> int:
        """Iterations sufficient to reach gap <= epsilon from ``initial_gap``."""
        if epsilon <= 0 or initial_gap <= 0:
            raise DomainError("initial_gap and epsilon must be positive")
        if initial_gap <= epsilon:
            return 0
        return math.ceil(math.log(initial_gap / epsilon) / ((1.0 - self.sigma) * self.rate))


def contraction_factors(sys: LinearSystem, weights: CostWeights, eta: float,
                        method: str, sigma: float = 0.0,
                        gain0=None) -> ContractionInfo:
    """Per-step contraction factors of the exact and estimated updates.

    ``sigma`` in [0, 1) is the share of the contraction budget surrendered
    to estimation error; sigma = 0 recovers the exact-update factor.
    """
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}")
    if not 0 <= sigma < 1:
        raise DomainError("sigma must lie in [0, 1)")
    if eta <= 0:
        raise DomainError("step size must be positive")
    gain_opt, _ = solve_dare(sys, weights)
    sigma_opt_norm = float(np.linalg.norm(stationary_covariance(sys, gain_opt), 2))
    lam_w = smallest_eigenvalue(sys.sigma_w)
    if method == "gnm":
        if eta > 0.5:
            raise DomainError("Gauss-Newton step size must satisfy eta <= 1/2")
        rate = 2.0 * eta * lam_w / sigma_opt_norm
    else:
        if gain0 is not None:
            p0 = solve_policy_lyapunov(sys, weights, gain0)
            cap = 1.0 / (2.0 * np.linalg.norm(weights.R + sys.B.T @ p0 @ sys.B, 2))
            if eta > cap * (1.0 + 1e-12):
                raise DomainError(
                    f"natural-gradient step size {eta} exceeds the cap {cap:.6e}"
                )
        rate = 2.0 * eta * smallest_eigenvalue(weights.R) * lam_w / sigma_opt_norm
    gamma = 1.0 - rate
    gamma_hat = 1.0 - (1.0 - sigma) * rate
    if not 0 < gamma < 1:
        raise DomainError(f"contraction factor {gamma} outside (0, 1)")
    return ContractionInfo(gamma=gamma, gamma_hat=gamma_hat, rate=rate, sigma=sigma)


def required_accuracy(sys: LinearSystem, weights: CostWeights, gain0_cost: float,
                      epsilon: float, sigma: float, method: str) -> float:
    """Per-iteration estimation-error budget keeping the update contracting.

    For the Gauss-Newton method the budget additionally caps the error at
    lambda_min(R)/2 so the inner matrix inverse stays well conditioned.
    """
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}")
    if epsilon <= 0 or not 0 < sigma < 1:
        raise DomainError("need epsilon > 0 and sigma in (0, 1)")
    gain_opt, p_opt = solve_dare(sys, weights)
    cost_opt = float(np.trace(p_opt @ sys.sigma_w))
    sigma_opt_norm = float(np.linalg.norm(stationary_covariance(sys, gain_opt), 2))
    gain_bound, cost_lipschitz = lipschitz_constants(sys, weights, gain0_cost, cost_opt)
    lam_r = smallest_eigenvalue(weights.R)
    lam_w = smallest_eigenvalue(sys.sigma_w)
    if method == "npg":
        return sigma * epsilon * lam_r * lam_w / (
            cost_lipschitz * (1.0 + gain_bound) * sigma_opt_norm
        )
    inverse_sensitivity = (
        float(np.linalg.norm(np.linalg.inv(weights.R), 2))
        + lam_r / 2.0
        + float(np.linalg.norm(sys.A, 2)) * float(np.linalg.norm(sys.B, 2))
        * gain0_cost / lam_w
    )
    return min(
        lam_r / 2.0,
        sigma * epsilon * lam_w / (cost_lipschitz * sigma_opt_norm * inverse_sensitivity),
    )


def identify_system(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares fit of (A, B) from x+ ~ [A B] [x; u].

    Consistent on this data because the regressors [x; u] are exogenous
    draws, unlike the Bellman regression where the noisy next state enters
    the regressor.
    """
    z = np.hstack([dataset.x, dataset.u])
    n, cols = z.shape
    if n < cols:
        raise InformativityError(
            f"system identification needs at least {cols} samples, got {n}"
        )
    solution, _, rank, singular_values = np.linalg.lstsq(z, dataset.x_plus, rcond=None)
    if rank < cols:
        raise InformativityError(
            f"regressors are rank deficient: smallest singular value "
            f"{singular_values[-1]:.6e}"
        )
    theta = solution.T
    return theta[:, :dataset.n_x], theta[:, dataset.n_x:]


@dataclass(frozen=True)
class PgmConfig:
    """Configuration of one model-free policy-optimization run."""

    method: str = "npg"
    step: float = 0.05
    max_iters: int = 50
    estimator: str = "cspd"
    stability_guard: bool = True
    radius: float = 1.0
    center: np.ndarray | None = None
    step_coeff: float = 0.001
    epoch_sizes: tuple[int, ...] = (8, 16, 24, 52)
    d0: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if self.estimator not in ESTIMATORS:
            raise DomainError(f"unknown estimator {self.estimator!r}")
        if self.step <= 0:
            raise DomainError("step must be positive")
        if self.method == "gnm" and self.step > 0.5:
            raise DomainError("Gauss-Newton step size must satisfy eta <= 1/2")
        if self.max_iters < 0:
            raise DomainError("max_iters must be nonnegative")


@dataclass
class RunTrace:
    """Per-iteration record of one run: gains, gaps, errors, stability margin.

    Row i describes the i-th gain; ``est_errors[i]`` is the error of the
    estimate used to step away from that gain (NaN for the final row, where
    no step was taken).
    """

    gains: list[np.ndarray] = field(default_factory=list)
    gaps: list[float] = field(default_factory=list)
    est_errors: list[float] = field(default_factory=list)
    radii: list[float] = field(default_factory=list)
    cost_opt: float = 0.0
    halted_at: int | None = None
    halt_reason: str | None = None

    def append(self, gain, gap: float, rho: float):
        if gap < -1e-9:
            raise DomainError(f"negative optimality gap {gap!r} beyond tolerance")
        self.gains.append(np.asarray(gain, dtype=float))
        self.gaps.append(float(gap))
        self.radii.append(float(rho))
        self.est_errors.append(float("nan"))

    def __len__(self) -> int:
        return len(self.gains)


class _SysidModel:
    """Gain-independent part of the identification-based estimator."""

    def __init__(self, sys: LinearSystem, dataset: Dataset):
        a_hat, b_hat = identify_system(dataset)
        self.plant = LinearSystem(a_hat, b_hat, sys.sigma_w)

    def estimate(self, weights: CostWeights, gain) -> np.ndarray:
        return bellman_parameters(self.plant, weights, gain)


def run_modelfree(sys: LinearSystem, weights: CostWeights, gain0, dataset: Dataset,
                  config: PgmConfig) -> RunTrace:
    """Model-free policy optimization reusing one dataset across iterations.

    The plant is only consulted for oracle bookkeeping (optimality gap and
    true estimation error); the updates themselves see nothing but the
    dataset. The stability guard halts the run, keeping the last stabilizing
    gain, if an update leaves the stabilizing set.
    """
    gain = np.asarray(gain0, dtype=float)
    if gain.shape != (sys.n_u, sys.n_x):
        raise DimensionError(f"gain0 must be {sys.n_u}x{sys.n_x}")
    if not spectral_radius(closed_loop(sys, gain)) < 1.0 - STABILITY_MARGIN:
        raise StabilityError("gain0 must be stabilizing")
    gain_opt, p_opt = solve_dare(sys, weights)
    cost_opt = float(np.trace(p_opt @ sys.sigma_w))
    w_lift = noise_lift(sys.sigma_w)
    center = (np.zeros(len(bellman_parameters(sys, weights, gain)))
              if config.center is None else np.asarray(config.center, dtype=float))
    ball = Ball(center, config.radius)
    sysid = _SysidModel(sys, dataset) if config.estimator == "sysid" else None

    trace = RunTrace(cost_opt=cost_opt)

    def record(k):
        p = solve_policy_lyapunov(sys, weights, k)
        trace.append(k, float(np.trace(p @ sys.sigma_w)) - cost_opt,
                     spectral_radius(closed_loop(sys, k)))
        return p

    p = record(gain)
    for i in range(config.max_iters):
        xi_exact = np.concatenate([
            vec(sys.B.T @ p @ sys.A),
            vecs(symmetrize(sys.B.T @ p @ sys.B)),
            vecs(p),
        ])
        if config.estimator == "exact":
            xi_hat = xi_exact
        elif config.estimator == "sysid":
            try:
                xi_hat = sysid.estimate(weights, gain)
            except (StabilityError, ConvergenceError):
                trace.halted_at = i
                trace.halt_reason = "identified model destabilized by current gain"
                break
        else:
            regressors, targets = bellman_regressors(
                dataset.x, dataset.u, dataset.x_plus, gain, weights, w_lift
            )
            if config.estimator == "ls":
                xi_hat = lstsq_estimate(regressors, targets)
            elif config.estimator == "cspd":
                xi_hat = cspd_solve(
                    regressors, targets, ball, xi0=ball.center, y0=0.0,
                    schedule=sqrt_schedule(len(regressors), config.step_coeff),
                ).xi
            else:  # multi_epoch
                xi_hat = multi_epoch_solve(
                    regressors, targets, ball, xi0=ball.center,
                    epoch_sizes=config.epoch_sizes, d0=config.d0,
                    schedule_builder=lambda n: sqrt_schedule(n, config.step_coeff),
                )
        trace.est_errors[-1] = float(np.linalg.norm(xi_hat - xi_exact))
        btpa, btpb, _ = split_parameters(xi_hat, sys.n_x, sys.n_u)
        try:
            if config.method == "npg":
                new_gain = npg_step(gain, btpb, btpa, weights.R, config.step)
            else:
                new_gain = gnm_step(gain, btpb, btpa, weights.R, config.step)
        except AccuracyError as exc:
            if not config.stability_guard:
                raise
            trace.halted_at = i
            trace.halt_reason = str(exc)
            break
        rho = spectral_radius(closed_loop(sys, new_gain))
        if config.stability_guard and rho >= 1.0 - STABILITY_MARGIN:
            trace.halted_at = i
            trace.halt_reason = f"update left the stabilizing set (rho={rho:.6f})"
            break
        gain = new_gain
        p = record(gain)
    return trace
