import numpy as np
import pytest

from pdlqr.data import collect_dataset
from pdlqr.errors import AccuracyError, DomainError, InformativityError, StabilityError
from pdlqr.lqr import (
    CostWeights,
    LinearSystem,
    average_cost,
    bellman_parameters,
    solve_dare,
    solve_policy_lyapunov,
    spectral_radius,
    stationary_covariance,
)
from pdlqr.policy_gradient import (
    PgmConfig,
    contraction_factors,
    gnm_step,
    identify_system,
    npg_step,
    required_accuracy,
    run_modelfree,
)
from pdlqr.regression import split_parameters

K0_SCALAR = np.array([[0.0]])


def scalar_blocks():
    # A=0.5, B=1, Q=R=1, K=0: P = 4/3, so B'PB = 4/3 and B'PA = 2/3
    return np.array([[4.0 / 3.0]]), np.array([[2.0 / 3.0]]), np.array([[1.0]])


def test_npg_step_scalar_closed_form():
    btpb, btpa, r = scalar_blocks()
    new = npg_step(K0_SCALAR, btpb, btpa, r, eta=0.25)
    assert new[0, 0] == pytest.approx(-1.0 / 3.0, rel=1e-12)


def test_npg_step_zero_estimates():
    gain = np.array([[0.4, -0.2]])
    r = np.eye(1)
    new = npg_step(gain, np.zeros((1, 1)), np.zeros((1, 2)), r, eta=0.1)
    assert np.allclose(new, gain - 0.2 * gain)


def test_npg_fixed_point_at_optimum(bench_system, bench_weights):
    gain_opt, p_opt = solve_dare(bench_system, bench_weights)
    btpa = bench_system.B.T @ p_opt @ bench_system.A
    btpb = bench_system.B.T @ p_opt @ bench_system.B
    new = npg_step(gain_opt, btpb, btpa, bench_weights.R, eta=0.3)
    assert np.linalg.norm(new - gain_opt) <= 1e-8


def test_gnm_step_scalar_closed_form():
    btpb, btpa, r = scalar_blocks()
    new = gnm_step(K0_SCALAR, btpb, btpa, r, eta=0.5)
    assert new[0, 0] == pytest.approx(-2.0 / 7.0, rel=1e-12)


def test_gnm_full_step_is_policy_improvement(bench_system, bench_weights, bench_gain0):
    # eta = 1/2 with exact blocks performs one exact policy-improvement sweep
    p = solve_policy_lyapunov(bench_system, bench_weights, bench_gain0)
    btpa = bench_system.B.T @ p @ bench_system.A
    btpb = bench_system.B.T @ p @ bench_system.B
    stepped = gnm_step(bench_gain0, btpb, btpa, bench_weights.R, eta=0.5)
    improved = -np.linalg.solve(np.asarray(bench_weights.R) + btpb, btpa)
    assert np.allclose(stepped, improved, atol=1e-12)
    cost_stepped = average_cost(bench_system, bench_weights, stepped)
    cost_improved = average_cost(bench_system, bench_weights, improved)
    assert cost_stepped == pytest.approx(cost_improved, rel=1e-2)


def test_gnm_rejects_indefinite_inner_matrix():
    btpb = np.array([[-1.1]])  # R + btpb has eigenvalue -0.1
    with pytest.raises(AccuracyError):
        gnm_step(K0_SCALAR, btpb, np.array([[0.5]]), np.eye(1), eta=0.5)


def test_contraction_factors_limits(bench_system, bench_weights, bench_gain0):
    info_exact = contraction_factors(bench_system, bench_weights, 0.1, "gnm", sigma=0.0)
    assert info_exact.gamma == pytest.approx(info_exact.gamma_hat)
    small = contraction_factors(bench_system, bench_weights, 0.1, "gnm", sigma=1e-9)
    assert small.gamma_hat == pytest.approx(small.gamma, abs=1e-8)

    half = contraction_factors(bench_system, bench_weights, 0.5, "gnm", sigma=0.25)
    gain_opt, _ = solve_dare(bench_system, bench_weights)
    sigma_norm = np.linalg.norm(stationary_covariance(bench_system, gain_opt), 2)
    assert half.gamma == pytest.approx(1.0 - 0.1 / sigma_norm, rel=1e-10)


def test_gnm_contracts_at_least_as_fast_as_npg(bench_system, bench_weights, bench_gain0):
    p0 = solve_policy_lyapunov(bench_system, bench_weights, bench_gain0)
    eta_npg = 1.0 / (2.0 * np.linalg.norm(
        np.asarray(bench_weights.R) + bench_system.B.T @ p0 @ bench_system.B, 2))
    npg = contraction_factors(bench_system, bench_weights, eta_npg, "npg",
                              sigma=0.0, gain0=bench_gain0)
    gnm = contraction_factors(bench_system, bench_weights, 0.5, "gnm", sigma=0.0)
    assert gnm.gamma < npg.gamma


def test_contraction_factor_domain_errors(bench_system, bench_weights, bench_gain0):
    with pytest.raises(DomainError):
        contraction_factors(bench_system, bench_weights, 0.6, "gnm")
    with pytest.raises(DomainError):
        contraction_factors(bench_system, bench_weights, 0.1, "gnm", sigma=1.0)
    with pytest.raises(DomainError):
        contraction_factors(bench_system, bench_weights, 10.0, "npg",
                            gain0=bench_gain0)


def test_iteration_bound(bench_system, bench_weights):
    info = contraction_factors(bench_system, bench_weights, 0.5, "gnm", sigma=0.5)
    n = info.iteration_bound(1.0, 1e-4)
    assert n >= 1
    assert info.gamma_hat ** n <= 1e-4 * 1.05
    assert info.iteration_bound(1e-6, 1e-4) == 0


def test_required_accuracy_scalings(bench_system, bench_weights, bench_gain0):
    cost0 = average_cost(bench_system, bench_weights, bench_gain0)
    budget = lambda eps, cost=cost0: required_accuracy(
        bench_system, bench_weights, cost, eps, 0.5, "npg")
    assert budget(0.02) == pytest.approx(2.0 * budget(0.01), rel=1e-9)
    assert budget(0.01, cost=2 * cost0) < budget(0.01)
    # frozen regression value at the stock configuration
    assert budget(0.01) == pytest.approx(6.481831726718473e-11, rel=1e-6)
    gnm_budget = required_accuracy(bench_system, bench_weights, cost0, 0.01, 0.5, "gnm")
    assert 0 < gnm_budget <= 0.5  # capped by lambda_min(R) / 2
    with pytest.raises(DomainError):
        required_accuracy(bench_system, bench_weights, cost0, -1.0, 0.5, "npg")
    with pytest.raises(DomainError):
        required_accuracy(bench_system, bench_weights, cost0, 0.01, 1.5, "npg")


def test_identify_system(bench_system):
    noiseless = LinearSystem(bench_system.A, bench_system.B, np.zeros((3, 3)))
    ds = collect_dataset(noiseless, 20, np.eye(3), np.eye(3), seed=0)
    a_hat, b_hat = identify_system(ds)
    assert np.linalg.norm(a_hat - bench_system.A) <= 1e-9
    assert np.linalg.norm(b_hat - bench_system.B) <= 1e-9


def test_identify_system_noisy_accuracy(bench_system):
    errors = []
    for seed in range(30):
        ds = collect_dataset(bench_system, 100, np.eye(3), np.eye(3), seed=seed)
        a_hat, b_hat = identify_system(ds)
        errors.append(np.linalg.norm(
            np.hstack([a_hat - bench_system.A, b_hat - bench_system.B])))
    assert np.median(errors) <= 0.2


def test_identify_system_needs_enough_samples(bench_system):
    ds = collect_dataset(bench_system, 1, np.eye(3), np.eye(3), seed=0)
    with pytest.raises(InformativityError):
        identify_system(ds)


def test_pgm_config_validation():
    with pytest.raises(DomainError):
        PgmConfig(method="gnm", step=0.6)
    with pytest.raises(DomainError):
        PgmConfig(method="sgd")
    with pytest.raises(DomainError):
        PgmConfig(estimator="oracle")
    with pytest.raises(DomainError):
        PgmConfig(step=-0.1)


@pytest.fixture()
def bench_dataset(bench_system):
    return collect_dataset(bench_system, 100, np.eye(3), np.eye(3), seed=0)


def test_run_modelfree_exact_matches_reference_loop(
        bench_system, bench_weights, bench_gain0, bench_dataset):
    config = PgmConfig(method="npg", step=0.05, max_iters=10, estimator="exact")
    trace = run_modelfree(bench_system, bench_weights, bench_gain0,
                          bench_dataset, config)
    gain = np.asarray(bench_gain0)
    for i in range(11):
        assert np.allclose(trace.gains[i], gain, atol=1e-12)
        if i == 10:
            break
        p = solve_policy_lyapunov(bench_system, bench_weights, gain)
        gain = gain - 2 * 0.05 * (
            (np.asarray(bench_weights.R) + bench_system.B.T @ p @ bench_system.B) @ gain
            + bench_system.B.T @ p @ bench_system.A)
    assert trace.est_errors[0] == 0.0
    assert np.isnan(trace.est_errors[-1])


def test_run_modelfree_zero_iterations(bench_system, bench_weights, bench_gain0,
                                       bench_dataset):
    config = PgmConfig(method="npg", step=0.05, max_iters=0, estimator="exact")
    trace = run_modelfree(bench_system, bench_weights, bench_gain0,
                          bench_dataset, config)
    assert len(trace) == 1
    assert np.allclose(trace.gains[0], bench_gain0)


def test_run_modelfree_is_deterministic(bench_system, bench_weights, bench_gain0,
                                        bench_dataset):
    config = PgmConfig(method="gnm", step=0.05, max_iters=5, estimator="cspd")
    a = run_modelfree(bench_system, bench_weights, bench_gain0, bench_dataset, config)
    b = run_modelfree(bench_system, bench_weights, bench_gain0, bench_dataset, config)
    assert len(a) == len(b)
    for ka, kb in zip(a.gains, b.gains):
        assert np.array_equal(ka, kb)
    assert a.gaps == b.gaps and a.est_errors[:-1] == b.est_errors[:-1]


def test_run_modelfree_guard_halts_on_destabilizing_step(
        bench_system, bench_weights, bench_gain0, bench_dataset):
    # a huge step with exact blocks overshoots into instability; the guard
    # must stop the run and keep the last stabilizing gain
    config = PgmConfig(method="npg", step=1.5, max_iters=40, estimator="exact")
    trace = run_modelfree(bench_system, bench_weights, bench_gain0,
                          bench_dataset, config)
    assert trace.halted_at is not None
    assert all(rho < 1.0 for rho in trace.radii)


def test_run_modelfree_guard_halts_on_accuracy_margin():
    # tiny R with heavy process noise makes the estimated inner matrix of the
    # Gauss-Newton step indefinite; the guard records the halt instead of
    # crashing the run
    sys = LinearSystem([[0.5]], [[1.0]], [[4.0]])
    weights = CostWeights([[1.0]], [[0.01]])
    ds = collect_dataset(sys, 3, [[1.0]], [[1.0]], seed=0)
    config = PgmConfig(method="gnm", step=0.5, max_iters=5, estimator="ls")
    trace = run_modelfree(sys, weights, np.array([[0.0]]), ds, config)
    assert trace.halted_at == 0
    assert "margin" in trace.halt_reason
    unguarded = PgmConfig(method="gnm", step=0.5, max_iters=5, estimator="ls",
                          stability_guard=False)
    with pytest.raises(AccuracyError):
        run_modelfree(sys, weights, np.array([[0.0]]), ds, unguarded)


def test_run_modelfree_requires_stabilizing_start(bench_system, bench_weights,
                                                  bench_dataset):
    config = PgmConfig(method="npg", step=0.05, max_iters=3, estimator="exact")
    with pytest.raises(StabilityError):
        run_modelfree(bench_system, bench_weights, np.zeros((3, 3)),
                      bench_dataset, config)


def test_run_modelfree_gap_positive_and_estimators_recorded(
        bench_system, bench_weights, bench_gain0, bench_dataset):
    for estimator in ("ls", "sysid", "multi_epoch"):
        config = PgmConfig(method="gnm", step=0.05, max_iters=3,
                           estimator=estimator)
        trace = run_modelfree(bench_system, bench_weights, bench_gain0,
                              bench_dataset, config)
        assert all(g >= -1e-9 for g in trace.gaps)
        assert all(np.isfinite(e) for e in trace.est_errors[:len(trace) - 1])


def test_exact_gnm_full_step_converges_fast(bench_system, bench_weights,
                                            bench_gain0, bench_dataset):
    config = PgmConfig(method="gnm", step=0.5, max_iters=30, estimator="exact")
    trace = run_modelfree(bench_system, bench_weights, bench_gain0,
                          bench_dataset, config)
    assert trace.gaps[-1] <= 1e-8


def test_exact_contraction_on_random_systems():
    # per-step gap decay at the guaranteed factor, for both update rules,
    # across random stable plants started from K = 0
    from conftest import random_stable_system, random_weights
    from pdlqr.lqr import average_cost, solve_policy_lyapunov

    rng = np.random.default_rng(99)
    systems = 0
    while systems < 5:
        sys = random_stable_system(rng, n_x=int(rng.integers(1, 5)),
                                   n_u=int(rng.integers(1, 5)))
        weights = random_weights(rng, sys.n_x, sys.n_u)
        try:
            gain_opt, p_opt = solve_dare(sys, weights)
        except Exception:
            continue
        systems += 1
        cost_opt = float(np.trace(p_opt @ sys.sigma_w))
        gain0 = np.zeros((sys.n_u, sys.n_x))
        p0 = solve_policy_lyapunov(sys, weights, gain0)
        eta_npg = 1.0 / (2.0 * np.linalg.norm(
            np.asarray(weights.R) + sys.B.T @ p0 @ sys.B, 2))
        for method, eta in (("npg", eta_npg), ("gnm", 0.5)):
            info = contraction_factors(sys, weights, eta, method, sigma=0.0,
                                       gain0=gain0 if method == "npg" else None)
            gain = gain0
            gap = average_cost(sys, weights, gain) - cost_opt
            for _ in range(50):
                if gap <= 1e-10:
                    break
                p = solve_policy_lyapunov(sys, weights, gain)
                btpb = sys.B.T @ p @ sys.B
                btpa = sys.B.T @ p @ sys.A
                if method == "npg":
                    gain = npg_step(gain, btpb, btpa, weights.R, eta)
                else:
                    gain = gnm_step(gain, btpb, btpa, weights.R, eta)
                new_gap = average_cost(sys, weights, gain) - cost_opt
                assert new_gap <= info.gamma * gap + 1e-12
                gap = new_gap
