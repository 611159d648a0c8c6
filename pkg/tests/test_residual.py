"""Tests for the factored and explicit residual norms."""

import numpy as np
import pytest

from tadi.errors import InputError
from tadi.problem import synth_problem
from tadi.residual import NormKind, ResidualFactor, dense_residual_norm, explicit_residual_norm, residual_norm


def test_orthonormal_w_spectral():
    assert residual_norm(np.eye(2), np.diag([3.0, -2.0])) == pytest.approx(3.0)


def test_orthonormal_w_frobenius():
    assert residual_norm(np.eye(2), np.diag([3.0, -2.0]), NormKind.FROBENIUS) == pytest.approx(np.sqrt(13.0))


@pytest.mark.parametrize("kind", list(NormKind))
def test_zero_factor(kind):
    assert residual_norm(np.zeros((3, 2)), np.diag([1.0, -1.0]), kind) == 0.0


def test_rank_one_matches_dense_norm():
    W = np.array([[1.0], [1.0]])
    R = np.array([[2.0]])
    assert residual_norm(W, R) == pytest.approx(4.0)
    assert residual_norm(W, R) == pytest.approx(np.linalg.norm(W @ R @ W.T, 2))


def test_indefinite_factor_matches_dense_norm():
    rng = np.random.default_rng(5)
    W = rng.standard_normal((30, 4)) + 1j * rng.standard_normal((30, 4))
    R = np.diag([2.0, -1.0, 0.5, -3.0])
    dense = W @ R @ W.conj().T
    assert residual_norm(W, R) == pytest.approx(np.linalg.norm(dense, 2), rel=1e-10)
    assert residual_norm(W, R, NormKind.FROBENIUS) == pytest.approx(np.linalg.norm(dense, "fro"), rel=1e-10)


def test_shape_mismatch():
    with pytest.raises(InputError):
        residual_norm(np.ones((3, 2)), np.eye(3))


def test_residual_factor_caches_norms():
    factor = ResidualFactor(np.eye(2), np.diag([3.0, -2.0]))
    assert factor.norm() == pytest.approx(3.0)
    factor.W = np.zeros((2, 2))
    assert factor.norm() == pytest.approx(3.0)
    assert factor.norm("frobenius") == 0.0


class TestExplicitResidual:
    def test_empty_factor_is_constant_term(self, scalar):
        assert explicit_residual_norm(scalar, np.zeros((1, 0)), np.zeros((0, 0))) == pytest.approx(2.0)

    def test_exact_scalar_solution(self, scalar):
        assert explicit_residual_norm(scalar, np.array([[-0.5]]), np.array([[4.0]])) == pytest.approx(0.0, abs=1e-14)

    def test_one_inexact_step(self, scalar):
        residual = explicit_residual_norm(scalar, np.array([[-1 / 3]]), np.array([[8.0]]))
        assert residual == pytest.approx(2 / 9)

    def test_matches_dense_residual(self):
        problem = synth_problem(25, 3, r_negative=1)
        rng = np.random.default_rng(2)
        L = rng.standard_normal((25, 5))
        D = np.diag([1.0, -2.0, 0.5, 3.0, -1.0])
        for kind in NormKind:
            expected = dense_residual_norm(problem, L @ D @ L.T, kind)
            assert explicit_residual_norm(problem, L, D, kind) == pytest.approx(expected, rel=1e-9)

    def test_center_shape_mismatch(self, scalar):
        with pytest.raises(InputError):
            explicit_residual_norm(scalar, np.ones((1, 2)), np.eye(3))


@pytest.mark.parametrize("seed", range(100))
def test_factored_norms_match_dense_evaluation(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 201))
    m = int(rng.integers(1, 13))
    W = rng.standard_normal((n, m))
    G = rng.standard_normal((m, m))
    if seed % 2:
        W = W + 1j * rng.standard_normal((n, m))
        G = G + 1j * rng.standard_normal((m, m))
    R = (G + G.conj().T) / 2
    dense = W @ R @ W.conj().T
    assert residual_norm(W, R) == pytest.approx(np.linalg.norm(dense, 2), rel=1e-12)
    assert residual_norm(W, R, NormKind.FROBENIUS) == pytest.approx(np.linalg.norm(dense, "fro"), rel=1e-12)
