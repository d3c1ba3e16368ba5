"""Model-free policy gradient methods for the stochastic LQR.

Data-driven natural policy gradient and Gauss-Newton updates whose gradient
ingredients are estimated from noisy off-policy triples by a conditional
stochastic primal-dual regression solver, with exact model-based solvers
kept alongside as oracles.
"""

from .bounds import BoundConstants, EpochPlan, accelerated_schedule, bound_constants, epoch_plan
from .cspd import Ball, Schedule, SaddleResult, cspd_solve, multi_epoch_solve, sqrt_schedule
from .data import Dataset, GaussianStream, collect_dataset, load_dataset, sample_gaussian, save_dataset
from .errors import (
    AccuracyError,
    ConfigError,
    ConvergenceError,
    DatasetFormatError,
    DimensionError,
    DomainError,
    InformativityError,
    PdlqrError,
    StabilityError,
    StabilizabilityError,
    SymmetryError,
)
from .estimators import BellmanLstsqRegressor, CspdRegressor, MultiEpochCspdRegressor
from .lqr import (
    CostWeights,
    LinearSystem,
    ValueSolution,
    average_cost,
    bellman_parameters,
    closed_loop,
    cost_gradient,
    evaluate_policy,
    expected_regressor,
    is_stabilizing,
    lipschitz_constants,
    noise_lift,
    rollout_average_cost,
    solve_dare,
    solve_policy_lyapunov,
    spectral_radius,
    stage_cost,
    stationary_covariance,
)
from .policy_gradient import (
    ContractionInfo,
    PgmConfig,
    RunTrace,
    contraction_factors,
    gnm_step,
    identify_system,
    npg_step,
    required_accuracy,
    run_modelfree,
)
from .regression import (
    bellman_regressors,
    build_sample,
    informativity_floor,
    lstsq_estimate,
    mean_abs_residual,
    split_parameters,
)
from .vectorize import kron, param_dim, unvec, unvecs, vec, vecs, vecv

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
