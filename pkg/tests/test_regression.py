import numpy as np
import pytest

from pdlqr.data import collect_dataset
from pdlqr.errors import DimensionError, InformativityError
from pdlqr.lqr import (
    CostWeights,
    LinearSystem,
    bellman_parameters,
    expected_regressor,
    noise_lift,
    solve_policy_lyapunov,
)
from pdlqr.regression import (
    bellman_regressors,
    build_sample,
    informativity_floor,
    lstsq_estimate,
    mean_abs_residual,
    split_parameters,
)

K0 = np.array([[0.0]])


def test_build_sample_scalar(scalar_system, scalar_weights):
    w_lift = noise_lift(scalar_system.sigma_w)
    gamma, c = build_sample([1.0], [0.0], [0.5], K0, scalar_weights, w_lift)
    assert np.allclose(gamma, [0.0, 0.0, 1.0 + 0.1 - 0.25])
    assert c == pytest.approx(1.0)

    gamma0, c0 = build_sample([0.0], [0.0], [0.3], K0, scalar_weights, w_lift)
    assert np.allclose(gamma0, [0.0, 0.0, 0.1 - 0.09])
    assert c0 == 0.0


def test_noiseless_samples_equal_expected_regressor(scalar_weights):
    sys = LinearSystem([[0.5]], [[1.0]], [[0.0]])
    ds = collect_dataset(sys, 30, [[1.0]], [[1.0]], seed=1)
    w_lift = noise_lift(sys.sigma_w)
    for k in range(len(ds)):
        gamma, c = build_sample(ds.x[k], ds.u[k], ds.x_plus[k], K0, scalar_weights, w_lift)
        exact = expected_regressor(sys, K0, ds.x[k], ds.u[k])
        assert np.allclose(gamma, exact, atol=1e-12)


def test_batch_matches_single(bench_system, bench_weights, bench_gain0):
    ds = collect_dataset(bench_system, 25, np.eye(3), np.eye(3), seed=3)
    w_lift = noise_lift(bench_system.sigma_w)
    regressors, targets = bellman_regressors(
        ds.x, ds.u, ds.x_plus, bench_gain0, bench_weights, w_lift)
    assert regressors.shape == (25, 21)
    for k in range(len(ds)):
        gamma, c = build_sample(ds.x[k], ds.u[k], ds.x_plus[k],
                                bench_gain0, bench_weights, w_lift)
        # BLAS kernels differ per batch shape, so agreement is to rounding only
        assert np.allclose(regressors[k], gamma, atol=1e-12, rtol=0)
        assert targets[k] == pytest.approx(c, rel=1e-12)


def test_lstsq_noiseless_recovery(scalar_weights):
    sys = LinearSystem([[0.5]], [[1.0]], [[0.0]])
    ds = collect_dataset(sys, 3, [[1.0]], [[1.0]], seed=4)
    regressors, targets = bellman_regressors(
        ds.x, ds.u, ds.x_plus, K0, scalar_weights, noise_lift(sys.sigma_w))
    xi = lstsq_estimate(regressors, targets)
    assert np.linalg.norm(xi - bellman_parameters(sys, scalar_weights, K0)) <= 1e-9


def test_lstsq_underdetermined():
    with pytest.raises(InformativityError):
        lstsq_estimate(np.ones((2, 3)), np.ones(2))


def test_lstsq_rank_deficient_reports_singular_value():
    regressors = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    with pytest.raises(InformativityError, match="singular value"):
        lstsq_estimate(regressors, np.ones(3))


def test_lstsq_bias_does_not_vanish(bench_system, bench_weights, bench_gain0):
    # errors in the regressors keep least squares biased as N grows
    xi_true = bellman_parameters(bench_system, bench_weights, bench_gain0)
    w_lift = noise_lift(bench_system.sigma_w)
    medians = {}
    for n in (500, 5000):
        errors = []
        for seed in range(20):
            ds = collect_dataset(bench_system, n, np.eye(3), np.eye(3), seed=seed)
            regressors, targets = bellman_regressors(
                ds.x, ds.u, ds.x_plus, bench_gain0, bench_weights, w_lift)
            errors.append(np.linalg.norm(lstsq_estimate(regressors, targets) - xi_true))
        medians[n] = np.median(errors)
    assert medians[5000] > 0.5 * medians[500]


def test_split_parameters_scalar():
    btpa, btpb, p = split_parameters([2.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0], 1, 1)
    assert btpa[0, 0] == pytest.approx(2.0 / 3.0)
    assert btpb[0, 0] == pytest.approx(4.0 / 3.0)
    assert p[0, 0] == pytest.approx(4.0 / 3.0)


def test_split_parameters_zero_and_errors():
    btpa, btpb, p = split_parameters(np.zeros(21), 3, 3)
    assert not btpa.any() and not btpb.any() and not p.any()
    with pytest.raises(DimensionError):
        split_parameters(np.zeros(20), 3, 3)


def test_split_round_trip(bench_system, bench_weights, bench_gain0):
    xi = bellman_parameters(bench_system, bench_weights, bench_gain0)
    btpa, btpb, p = split_parameters(xi, 3, 3)
    p_direct = solve_policy_lyapunov(bench_system, bench_weights, bench_gain0)
    assert np.allclose(btpa, bench_system.B.T @ p_direct @ bench_system.A, atol=1e-12)
    assert np.allclose(btpb, bench_system.B.T @ p_direct @ bench_system.B, atol=1e-12)
    assert np.allclose(p, p_direct, atol=1e-12)


def test_informativity_floor():
    assert informativity_floor([[0.0, 0.0], [1.0, 2.0]]) == 0.0
    assert informativity_floor([[0.0, 0.0, 0.75]]) == pytest.approx(0.5625)
    with pytest.raises(ValueError):
        informativity_floor(np.zeros((0, 3)))


def test_informativity_floor_bench_regression(bench_system, bench_weights, bench_gain0):
    ds = collect_dataset(bench_system, 100, np.eye(3), np.eye(3), seed=0)
    regressors, _ = bellman_regressors(
        ds.x, ds.u, ds.x_plus, bench_gain0, bench_weights,
        noise_lift(bench_system.sigma_w))
    floor = informativity_floor(regressors)
    assert floor > 0
    assert floor == pytest.approx(1.0604617389222565, rel=1e-9)  # frozen


def test_mean_abs_residual(scalar_system, scalar_weights):
    xi_true = bellman_parameters(scalar_system, scalar_weights, K0)
    gamma = np.array([[0.0, 0.0, 0.75]])
    target = np.array([float(gamma[0] @ xi_true)])
    assert mean_abs_residual(xi_true, gamma, target) == 0.0
    assert mean_abs_residual(xi_true + np.array([0, 0, 1.0]), gamma, target) \
        == pytest.approx(0.75)


def test_residual_bounds_estimation_error(bench_system, bench_weights, bench_gain0):
    # mean |<gamma_k, xi>. - c_k| over exact regressors dominates
    # sqrt(informativity floor) * parameter error for perturbed candidates
    rng = np.random.default_rng(14)
    xi_true = bellman_parameters(bench_system, bench_weights, bench_gain0)
    ds = collect_dataset(bench_system, 50, np.eye(3), np.eye(3), seed=6)
    exact = np.array([
        expected_regressor(bench_system, bench_gain0, ds.x[k], ds.u[k])
        for k in range(len(ds))
    ])
    targets = exact @ xi_true
    alpha = informativity_floor(exact)
    for _ in range(100):
        candidate = xi_true + rng.standard_normal(21) * rng.choice([0.01, 0.3, 2.0])
        gap = mean_abs_residual(candidate, exact, targets)
        assert gap >= np.sqrt(alpha) * np.linalg.norm(candidate - xi_true) - 1e-12
