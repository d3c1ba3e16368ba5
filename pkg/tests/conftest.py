import numpy as np
import pytest

from pdlqr.lqr import CostWeights, LinearSystem, solve_dare


@pytest.fixture(scope="session")
def bench_system():
    a = np.array([[1.01, 0.01, 0.0], [0.01, 1.01, 0.01], [0.0, 0.01, 1.01]])
    return LinearSystem(a, np.eye(3), 0.1 * np.eye(3))


@pytest.fixture(scope="session")
def bench_weights():
    return CostWeights(0.001 * np.eye(3), np.eye(3))


@pytest.fixture(scope="session")
def bench_gain0(bench_system, bench_weights):
    # conservative initial gain: optimal for the same plant under 100x state weight
    gain, _ = solve_dare(bench_system,
                         CostWeights(100 * bench_weights.Q, bench_weights.R))
    return gain


@pytest.fixture(scope="session")
def scalar_system():
    return LinearSystem([[0.5]], [[1.0]], [[0.1]])


@pytest.fixture(scope="session")
def scalar_weights():
    return CostWeights([[1.0]], [[1.0]])


def random_stable_system(rng, n_x=None, n_u=None):
    """A random system whose open loop is Schur stable (so K=0 works)."""
    n_x = n_x or int(rng.integers(1, 5))
    n_u = n_u or int(rng.integers(1, 5))
    a = rng.standard_normal((n_x, n_x))
    a *= 0.9 / max(np.max(np.abs(np.linalg.eigvals(a))), 1e-6)
    b = rng.standard_normal((n_x, n_u))
    w = rng.standard_normal((n_x, n_x))
    sigma_w = w @ w.T / n_x + 0.05 * np.eye(n_x)
    return LinearSystem(a, b, sigma_w)


def random_weights(rng, n_x, n_u):
    q = rng.standard_normal((n_x, n_x))
    r = rng.standard_normal((n_u, n_u))
    return CostWeights(q @ q.T / n_x + 0.1 * np.eye(n_x),
                       r @ r.T / n_u + 0.1 * np.eye(n_u))
