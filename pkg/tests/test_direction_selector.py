"""Tests for the tangential direction heuristics."""

import numpy as np
import pytest

from tadi.direction_selector import (
    STRATEGY_REGISTRY,
    CyclicStrategy,
    Direction,
    EigenDirections,
    SelectionContext,
    get_strategy,
    select_cyclic,
    select_full,
    select_projected,
    select_random,
    select_residual,
)
from tadi.errors import ConfigError, InputError
from tadi.linalg_core import CoefficientOperator, ShiftedSystemCache
from tadi.shift_selector import ProjectionSpace

A = CoefficientOperator.wrap(np.diag([-1.0, -2.0]))
E = CoefficientOperator.identity(2)


@pytest.fixture
def dirs():
    return EigenDirections.from_center(np.diag([1.0, -1.0]))


def _context(W, alpha, dirs, space=None, step=0):
    return SelectionContext(
        A=A,
        E=E,
        W=W,
        alpha=alpha,
        dirs=dirs,
        space=space or ProjectionSpace(2, 2),
        systems=ShiftedSystemCache(A, E),
        step=step,
        real=True,
    )


class TestEigenDirections:
    def test_ordering(self, dirs):
        np.testing.assert_array_equal(dirs.S, [1.0, -1.0])
        assert dirs.direction(2).eigenvalue == -1.0

    def test_index_out_of_range(self, dirs):
        with pytest.raises(InputError):
            dirs.direction(0)
        with pytest.raises(InputError):
            dirs.direction(3)

    def test_singular_center(self):
        with pytest.raises(InputError, match="singular"):
            EigenDirections.from_center(np.diag([1.0, 0.0]))


class TestSelectFull:
    def test_largest_solve(self, dirs):
        assert select_full(A, E, np.eye(2), -3.0, dirs).index == 1

    def test_weighted_residual(self, dirs):
        # solves give 1/1.5 and 1.2/2.5, the residual alone would favour the second column
        W = np.diag([1.0, 1.2])
        assert select_full(A, E, W, -0.5, dirs).index == 1
        assert select_residual(W, dirs).index == 2

    def test_zero_residual_takes_first(self, dirs):
        assert select_full(A, E, np.zeros((2, 2)), -1.0, dirs).index == 1

    def test_single_column(self):
        single = EigenDirections.from_center(np.array([[-3.0]]))
        direction = select_full(A, E, np.ones((2, 1)), -1.0, single)
        assert direction.index == 1
        assert direction.eigenvalue == -3.0


class TestSelectResidual:
    def test_largest_column(self, dirs):
        assert select_residual(np.diag([1.0, 3.0]), dirs).index == 2

    def test_tie_goes_to_lowest_index(self, dirs):
        assert select_residual(np.eye(2), dirs).index == 1


class TestSelectProjected:
    def test_full_space_matches_full(self, dirs):
        space = ProjectionSpace(2, 2)
        space.push(np.eye(2))
        W = np.diag([1.0, 1.2])
        assert select_projected(space, A, E, W, -0.5, dirs).index == select_full(A, E, W, -0.5, dirs).index

    def test_empty_space_uses_residual(self, dirs):
        W = np.diag([1.0, 3.0])
        assert select_projected(ProjectionSpace(2, 2), A, E, W, -3.0, dirs).index == 2

    def test_singular_projection_uses_residual(self, dirs):
        space = ProjectionSpace(2, 2)
        space.push(np.eye(2))
        assert select_projected(space, A, E, np.diag([1.0, 3.0]), 1.0, dirs).index == 2


class TestSelectCyclic:
    @pytest.mark.parametrize("step, expected", [(0, 1), (1, 2), (3, 1), (4, 2)])
    def test_wraps_around(self, step, expected):
        assert select_cyclic(step, EigenDirections.from_center(np.eye(3))).index == expected


class TestSelectRandom:
    def test_unit_general_direction(self, dirs):
        direction = select_random(np.random.default_rng(0), dirs)
        assert np.linalg.norm(direction.t) == pytest.approx(1.0)
        assert direction.index == -1
        assert not direction.is_eigenvector

    def test_deterministic_for_seed(self, dirs):
        first = select_random(np.random.default_rng(7), dirs)
        second = select_random(np.random.default_rng(7), dirs)
        np.testing.assert_array_equal(first.t, second.t)

    def test_complex_sphere(self, dirs):
        direction = select_random(np.random.default_rng(1), dirs, real=False)
        assert np.iscomplexobj(direction.t)
        assert np.linalg.norm(direction.t) == pytest.approx(1.0)


class TestStrategies:
    def test_registry(self):
        assert set(STRATEGY_REGISTRY) == {"full", "projected", "residual", "cyclic", "random"}

    def test_unknown_strategy(self):
        with pytest.raises(ConfigError) as excinfo:
            get_strategy("lookahead")
        assert "cyclic" in excinfo.value.suggestion

    def test_instance_passes_through(self):
        strategy = CyclicStrategy()
        assert get_strategy(strategy) is strategy

    def test_shift_repeats(self):
        assert get_strategy("cyclic").shift_repeats(3) == 3
        assert get_strategy("projected").shift_repeats(3) == 1

    def test_full_strategy_uses_cached_factorization(self, dirs):
        context = _context(np.eye(2), -3.0, dirs)
        assert get_strategy("full").select(context).index == 1
        assert context.systems.factorizations == 1

    def test_cyclic_strategy_follows_step(self, dirs):
        assert get_strategy("cyclic").select(_context(np.eye(2), -1.0, dirs, step=3)).index == 2

    def test_random_strategy_seeded(self, dirs):
        context = _context(np.eye(2), -1.0, dirs)
        first = get_strategy("random", seed=3).select(context)
        second = get_strategy("random", seed=3).select(context)
        assert isinstance(first, Direction)
        np.testing.assert_array_equal(first.t, second.t)
