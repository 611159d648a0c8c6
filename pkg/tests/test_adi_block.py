"""Tests for the block ADI steps and driver."""

import numpy as np
import pytest

from tadi.adi_block import ADIState, LDLFactors, block_step_complex, block_step_real, run_block_adi
from tadi.errors import InputError, NoValidShiftsError, SolverAbortedError
from tadi.problem import LyapunovProblem, SpectrumSpec, synth_problem
from tadi.shift_selector import FixedShiftSource, ProjectionShiftSource, ShiftPool


def _state(problem):
    return ADIState.start(problem, k_max=4)


class OneShotSource:
    """A single pool, then no more shifts."""

    def __init__(self, shifts):
        self.shifts = shifts
        self.calls = 0

    def next_pool(self, problem, space):
        self.calls += 1
        if self.calls > 1:
            raise NoValidShiftsError("No valid shifts")
        return ShiftPool.from_shifts(self.shifts, real_mode=problem.is_real)


class TestBlockStepComplex:
    def test_exact_shift(self, scalar):
        outcome = block_step_complex(_state(scalar), -1.0)
        np.testing.assert_allclose(outcome.factors.L, [[-0.5]])
        np.testing.assert_allclose(outcome.residual.W, [[0.0]])
        np.testing.assert_allclose(outcome.factors.to_dense(), [[1.0]])
        assert outcome.solves == 1

    def test_inexact_shift(self, scalar):
        outcome = block_step_complex(_state(scalar), -2.0)
        np.testing.assert_allclose(outcome.factors.L, [[-1 / 3]])
        np.testing.assert_allclose(outcome.residual.W, [[-1 / 3]])
        np.testing.assert_allclose(outcome.factors.to_dense(), [[8 / 9]])
        assert outcome.residual.norm() == pytest.approx(2 / 9)

    def test_imaginary_shift_rejected(self, scalar):
        with pytest.raises(InputError):
            block_step_complex(_state(scalar), complex(0, 1))


class TestBlockStepReal:
    def test_conjugate_pair(self, scalar_unit_center):
        outcome = block_step_real(_state(scalar_unit_center), complex(-1, 1))
        np.testing.assert_allclose(outcome.factors.L, [[-np.sqrt(2) / 5, -2 / 5]])
        np.testing.assert_allclose(outcome.factors.D, np.diag([2.0, 2.0]))
        np.testing.assert_allclose(outcome.factors.to_dense(), [[12 / 25]])
        np.testing.assert_allclose(outcome.residual.W, [[1 / 5]])
        assert outcome.residual.norm() == pytest.approx(1 / 25)
        assert outcome.solves == 1
        assert outcome.factors.is_real
        assert outcome.shifts == (complex(-1, 1), complex(-1, -1))

    def test_pair_equals_two_complex_steps(self):
        real = synth_problem(12, 2, SpectrumSpec(seed=3), r_negative=1)
        complex_twin = LyapunovProblem.create(
            real.A.matrix, real.B, E=real.E.matrix, R=real.R, arithmetic="complex"
        )
        alpha = complex(-1.5, 2.0)
        paired = block_step_real(_state(real), alpha)

        state = _state(complex_twin)
        state.commit(block_step_complex(state, alpha))
        state.commit(block_step_complex(state, alpha.conjugate()))

        X_pair = paired.factors.to_dense()
        X_two = state.factors.to_dense()
        assert np.linalg.norm(X_pair - X_two) <= 1e-12 * np.linalg.norm(X_two)
        np.testing.assert_allclose(paired.residual.W, state.W.real, atol=1e-12)
        assert not np.iscomplexobj(X_pair)

    def test_real_shift_delegates(self, scalar):
        outcome = block_step_real(_state(scalar), -1.0)
        np.testing.assert_allclose(outcome.factors.to_dense(), [[1.0]])
        assert not np.iscomplexobj(outcome.factors.L)

    def test_complex_typed_real_shift(self, scalar):
        with pytest.raises(InputError, match="real shift"):
            block_step_real(_state(scalar), complex(-1, 0))

    def test_complex_problem(self):
        problem = LyapunovProblem.create(np.array([[-1.0 + 1j]]), np.array([[1.0]]))
        with pytest.raises(InputError, match="real problem"):
            block_step_real(_state(problem), complex(-1, 1))


class TestRunBlockAdi:
    def test_scalar_converges_in_one_step(self, scalar):
        factors, trace = run_block_adi(scalar, FixedShiftSource([-1.0]))
        assert len(trace) == 1
        assert trace.final_residual == pytest.approx(0.0, abs=1e-15)
        assert trace.converged
        assert trace.stop_reason == "tolerance reached"
        np.testing.assert_allclose(factors.to_dense(), [[1.0]])

    def test_tolerance_one_never_iterates(self, scalar):
        factors, trace = run_block_adi(scalar, FixedShiftSource([-2.0]), tol=1.0)
        assert factors.ncols == 0
        assert len(trace) == 0
        assert trace.converged

    def test_diagonal_problem(self, diag_problem, diag_solution):
        factors, trace = run_block_adi(diag_problem, FixedShiftSource([-1.0, -2.0]))
        assert trace.converged
        np.testing.assert_allclose(factors.to_dense(), diag_solution, atol=1e-10)
        assert trace.pools[0] == (-1.0, -2.0)

    def test_zero_constant_term(self):
        problem = LyapunovProblem.create(np.diag([-1.0, -2.0]), np.zeros((2, 1)))
        factors, trace = run_block_adi(problem, FixedShiftSource([-1.0]))
        assert factors.ncols == 0
        assert trace.converged
        assert trace.stop_reason == "zero constant term"

    def test_column_limit(self):
        problem = synth_problem(40, 2, SpectrumSpec(seed=1), r_negative=1)
        factors, trace = run_block_adi(problem, FixedShiftSource([-5.0]), max_cols=6)
        assert not trace.converged
        assert trace.stop_reason == "column limit reached"
        assert factors.ncols == 6

    def test_trace_is_monotone(self):
        problem = synth_problem(40, 3, SpectrumSpec(seed=2), r_negative=1)
        _, trace = run_block_adi(problem, ProjectionShiftSource(), tol=1e-8, max_cols=300)
        assert np.all(np.diff(trace.columns) > 0)
        assert [r.solves for r in trace.records] == list(range(1, len(trace) + 1))
        assert trace.converged

    def test_abort_keeps_partial_result(self, diag_problem):
        with pytest.raises(SolverAbortedError) as excinfo:
            run_block_adi(diag_problem, OneShotSource([-3.0]))
        assert excinfo.value.factors.ncols == 1
        assert len(excinfo.value.trace) == 1

    def test_rejects_non_positive_tolerance(self, scalar):
        with pytest.raises(InputError, match="tol"):
            run_block_adi(scalar, FixedShiftSource([-1.0]), tol=0.0)

    def test_rejects_non_hermitian_center(self):
        problem = LyapunovProblem.create(np.diag([-1.0, -2.0]), np.eye(2), R=np.array([[1.0, 1.0], [0.0, 1.0]]))
        with pytest.raises(InputError, match="Hermitian"):
            run_block_adi(problem, FixedShiftSource([-1.0]))


class TestLDLFactors:
    def test_empty(self):
        factors = LDLFactors.empty(3)
        assert factors.ncols == 0
        np.testing.assert_array_equal(factors.to_dense(), np.zeros((3, 3)))

    def test_extended_checks_shapes(self):
        with pytest.raises(InputError):
            LDLFactors.empty(2).extended([np.ones((2, 2))], [np.eye(1)])

    def test_widths(self):
        factors = LDLFactors.empty(2).extended([np.ones((2, 2)), np.ones((2, 1))], [np.eye(2), np.eye(1)])
        assert factors.widths == [2, 1]
        assert factors.D.shape == (3, 3)
