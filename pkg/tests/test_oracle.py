"""Tests for the dense reference solver."""

import numpy as np
import pytest

from tadi.adi_block import LDLFactors
from tadi.errors import InputError, UnstablePencilError
from tadi.oracle import compare, dense_lyap_solve
from tadi.problem import LyapunovProblem, SpectrumSpec, synth_problem


def test_scalar(scalar):
    solution = dense_lyap_solve(scalar)
    assert solution.method == "kronecker"
    np.testing.assert_allclose(solution.X, [[1.0]])
    assert solution.residual < 1e-14


def test_diagonal(diag_problem, diag_solution):
    np.testing.assert_allclose(dense_lyap_solve(diag_problem).X, diag_solution)


def test_zero_constant_term():
    problem = LyapunovProblem.create(np.diag([-1.0, -2.0]), np.zeros((2, 1)))
    solution = dense_lyap_solve(problem)
    assert solution.method == "trivial"
    np.testing.assert_array_equal(solution.X, np.zeros((2, 2)))


def test_bartels_stewart_agrees_with_kronecker():
    problem = synth_problem(20, 2, SpectrumSpec(seed=4), r_negative=1)
    kronecker = dense_lyap_solve(problem)
    reduced = dense_lyap_solve(problem, kronecker_cap=0)
    assert reduced.method == "bartels-stewart"
    assert np.linalg.norm(reduced.X - kronecker.X) <= 1e-9 * np.linalg.norm(kronecker.X)
    assert reduced.residual < 1e-10


def test_solution_is_hermitian():
    problem = synth_problem(15, 3, SpectrumSpec(seed=8), r_negative=1)
    X = dense_lyap_solve(problem).X
    np.testing.assert_allclose(X, X.T, atol=1e-14 * np.abs(X).max())
    assert not np.iscomplexobj(X)


def test_unstable_pencil():
    problem = LyapunovProblem.create(np.diag([1.0, -1.0]), np.ones((2, 1)))
    with pytest.raises(UnstablePencilError, match="Hurwitz"):
        dense_lyap_solve(problem)


def test_singular_mass_matrix():
    problem = LyapunovProblem.create(np.diag([-1.0, -2.0]), np.ones((2, 1)), E=np.diag([1.0, 0.0]))
    with pytest.raises(UnstablePencilError, match="infinite"):
        dense_lyap_solve(problem)


def test_size_cap():
    problem = synth_problem(10, 1)
    with pytest.raises(InputError, match="n <= 5"):
        dense_lyap_solve(problem, cap=5)


class TestCompare:
    def test_exact_factors(self, diag_problem):
        factors = LDLFactors.empty(2).extended(
            [np.array([[-0.5], [-1 / 3]]), np.array([[0.0], [-1 / 12]])], [np.array([[2.0]]), np.array([[4.0]])]
        )
        assert compare(factors, dense_lyap_solve(diag_problem)) == pytest.approx(0.0, abs=1e-14)

    def test_empty_factors_against_zero(self):
        problem = LyapunovProblem.create(np.diag([-1.0, -2.0]), np.zeros((2, 1)))
        assert compare(LDLFactors.empty(2), dense_lyap_solve(problem)) == 0.0

    def test_empty_factors_relative_error(self, scalar):
        assert compare(LDLFactors.empty(1), dense_lyap_solve(scalar)) == pytest.approx(1.0)

    def test_dimension_mismatch(self, scalar):
        with pytest.raises(InputError, match="n=2"):
            compare(LDLFactors.empty(2), dense_lyap_solve(scalar))
