import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import nnls as scipy_nnls

from cdrum.errors import SolverStalled
from cdrum.qp import kkt_residual, nnls, solve_weighted, weight_factor


@given(st.integers(0, 2**31 - 1), st.integers(2, 12), st.integers(1, 10))
def test_matches_scipy_objective(seed, m, k):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, k))
    b = rng.normal(size=m)
    ours = nnls(A, b)
    ref, rnorm = scipy_nnls(A, b)
    assert ours.objective == pytest.approx(rnorm**2, abs=1e-9, rel=1e-8)
    assert np.all(ours.x >= 0)
    assert ours.kkt_residual < 1e-8


def test_exact_feasible_point_found():
    rng = np.random.default_rng(1)
    A = rng.random((20, 8))
    z = np.abs(rng.normal(size=8))
    res = nnls(A, A @ z)
    assert res.objective < 1e-20
    assert np.allclose(res.x, z, atol=1e-8)


def test_zero_rhs_gives_zero():
    A = np.eye(3)
    res = nnls(A, np.zeros(3))
    assert res.objective == 0 and not res.x.any()


def test_negative_target_clamped():
    res = nnls(np.eye(2), np.array([-1.0, 2.0]))
    assert np.allclose(res.x, [0.0, 2.0])
    assert res.objective == pytest.approx(1.0)
    assert kkt_residual(np.eye(2), np.array([-1.0, 2.0]), res.x) < 1e-12


class TestWeights:
    def test_diagonal_factor(self):
        assert np.allclose(weight_factor([4.0, 9.0], 2), [2.0, 3.0])

    def test_identity(self):
        assert weight_factor(None, 3) is None

    def test_bad_weights(self):
        with pytest.raises(ValueError):
            weight_factor([1.0, -1.0], 2)
        with pytest.raises(ValueError):
            weight_factor(np.eye(3), 2)

    def test_weighted_objective(self):
        M = np.array([[1.0], [1.0]])
        b = np.array([0.0, 2.0])
        res = solve_weighted(M, b, omega=[1.0, 3.0])
        assert res.x[0] == pytest.approx(1.5)
        assert res.objective == pytest.approx(1.0 * 1.5**2 + 3.0 * 0.5**2)

    def test_full_matrix_matches_diagonal(self):
        rng = np.random.default_rng(2)
        M, b = rng.random((6, 4)), rng.random(6)
        w = rng.random(6) + 0.5
        a = solve_weighted(M, b, omega=w)
        c = solve_weighted(M, b, omega=np.diag(w))
        assert a.objective == pytest.approx(c.objective, rel=1e-10)


def test_stall_raises(monkeypatch):
    import cdrum.qp as qp

    real = qp.nnls
    monkeypatch.setattr(qp, "nnls", lambda A, b, **kw: real(A, b, max_iter=0))
    with pytest.raises(SolverStalled):
        qp.solve_weighted(np.eye(2), np.ones(2))
