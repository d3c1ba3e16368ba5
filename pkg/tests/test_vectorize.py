import numpy as np
import pytest

from pdlqr.errors import DimensionError, SymmetryError
from pdlqr.vectorize import (
    kron,
    param_dim,
    tri_len,
    unvec,
    unvecs,
    vec,
    vecs,
    vecv,
    vecv_rows,
)


def test_vec_column_stacking():
    assert np.array_equal(vec([[1, 3], [2, 4]]), [1, 2, 3, 4])
    assert np.array_equal(vec(np.eye(2)), [1, 0, 0, 1])
    assert np.array_equal(vec(np.zeros((2, 3))), np.zeros(6))


def test_unvec():
    assert np.array_equal(unvec([1, 2, 3, 4], 2, 2), [[1, 3], [2, 4]])
    assert np.array_equal(unvec(np.zeros(6), 2, 3), np.zeros((2, 3)))
    assert np.array_equal(unvec([5], 1, 1), [[5]])
    with pytest.raises(DimensionError):
        unvec([1, 2, 3], 2, 2)


def test_vecv():
    assert np.array_equal(vecv([1, 2]), [1, 2, 4])
    assert np.array_equal(vecv([1, 1, 1]), np.ones(6))
    assert np.array_equal(vecv([0, 3]), [0, 0, 9])


def test_vecs():
    assert np.array_equal(vecs(np.eye(2)), [1, 0, 1])
    assert np.array_equal(vecs([[2, 1], [1, 3]]), [2, 2, 3])
    assert np.allclose(vecs(np.diag([0.1, 0.1, 0.1])), [0.1, 0, 0, 0.1, 0, 0.1])
    with pytest.raises(SymmetryError):
        vecs([[1, 2], [0, 1]])


def test_unvecs():
    assert np.array_equal(unvecs([2, 2, 3]), [[2, 1], [1, 3]])
    assert np.array_equal(unvecs([1, 0, 1]), np.eye(2))
    assert np.array_equal(unvecs([4]), [[4]])
    with pytest.raises(DimensionError):
        unvecs([1, 2, 3, 4])  # 4 is not triangular


def test_kron():
    assert np.array_equal(kron([1, 2], [3, 4]), [3, 4, 6, 8])
    y = np.array([2.0, 5.0, 7.0])
    assert np.array_equal(kron([1, 0], y), np.concatenate([y, np.zeros(3)]))
    assert np.array_equal(kron([1.0, 2.0], np.zeros(3)), np.zeros(6))


def test_round_trips_exact():
    rng = np.random.default_rng(3)
    for _ in range(50):
        rows, cols = rng.integers(1, 7, size=2)
        m = rng.standard_normal((rows, cols))
        assert np.array_equal(unvec(vec(m), rows, cols), m)
        s = rng.standard_normal((rows, rows))
        s = s + s.T
        assert np.array_equal(unvecs(vecs(s)), s)


def test_quadratic_form_pairing():
    # dot(vecs(P), vecv(v)) reproduces v' P v
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        p = rng.standard_normal((n, n))
        p = p + p.T
        v = rng.standard_normal(n)
        expected = v @ p @ v
        got = vecs(p) @ vecv(v)
        assert abs(got - expected) <= 1e-12 * max(1.0, abs(expected))


def test_bilinear_pairing():
    # dot(kron(x, eta), vec(M)) reproduces eta' M x
    rng = np.random.default_rng(12)
    for _ in range(1000):
        m_rows = int(rng.integers(1, 7))
        n_cols = int(rng.integers(1, 7))
        mat = rng.standard_normal((m_rows, n_cols))
        x = rng.standard_normal(n_cols)
        eta = rng.standard_normal(m_rows)
        expected = eta @ mat @ x
        got = kron(x, eta) @ vec(mat)
        assert abs(got - expected) <= 1e-12 * max(1.0, abs(expected))


def test_vecv_rows_matches_vecv():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((40, 4))
    batch = vecv_rows(x)
    for i in range(len(x)):
        assert np.array_equal(batch[i], vecv(x[i]))


def test_parameter_dimension_law():
    assert tri_len(3) == 6
    assert param_dim(3, 3) == 21
    assert param_dim(1, 1) == 3
    for n_x in range(1, 5):
        for n_u in range(1, 5):
            assert param_dim(n_x, n_u) == n_u * n_x + n_u * (n_u + 1) // 2 + n_x * (n_x + 1) // 2
