"""Tangential direction strategies.

Directions are restricted to the unitary eigenvectors of R (the center of
the constant term), chosen by one of the heuristics below, except for the
random strategy which draws general unit vectors.
"""

from __future__ import annotations

import logging
import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from tadi.constants import Tolerances
from tadi.errors import ConfigError, InputError, SingularShiftError
from tadi.linalg_core import CoefficientOperator, ShiftedSystem, ShiftedSystemCache, hermitian_eig, orthonormal_basis
from tadi.shift_selector import ProjectionSpace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EigenDirections:
    """R = T diag(S) T^H with the ordering of :func:`hermitian_eig`."""

    T: np.ndarray
    S: np.ndarray

    @classmethod
    def from_center(cls, R: np.ndarray) -> EigenDirections:
        T, S = hermitian_eig(R)
        if np.any(S == 0):
            raise InputError("R is singular; truncate the constant term before selecting directions")
        return cls(T, S)

    @property
    def m(self) -> int:
        return int(self.S.shape[0])

    def direction(self, index: int) -> Direction:
        """Eigenvector number ``index`` (1-based)."""
        if not 1 <= index <= self.m:
            raise InputError(f"Direction index {index} outside [1, {self.m}]")
        return Direction(self.T[:, index - 1], index, float(self.S[index - 1]))


@dataclass(frozen=True)
class Direction:
    """Tangential direction; ``eigenvalue`` is set for eigenvector directions (index >= 1)."""

    t: np.ndarray
    index: int = -1
    eigenvalue: float | None = None

    @property
    def is_eigenvector(self) -> bool:
        return self.eigenvalue is not None


def _argmax_direction(scores: np.ndarray, dirs: EigenDirections) -> Direction:
    # np.argmax returns the first maximum, so ties go to the lowest index
    return dirs.direction(int(np.argmax(scores)) + 1)


def select_full(
    A: CoefficientOperator,
    E: CoefficientOperator,
    W: np.ndarray,
    alpha: complex | float,
    dirs: EigenDirections,
    system: ShiftedSystem | None = None,
) -> Direction:
    """Eigenvector maximizing ||(A + alpha E)^-1 W t_k||, all m solves sharing one factorization."""
    system = system or ShiftedSystem(A, E, alpha)
    scores = np.linalg.norm(system.solve(W @ dirs.T), axis=0)
    return _argmax_direction(scores, dirs)


def select_residual(W: np.ndarray, dirs: EigenDirections) -> Direction:
    """Eigenvector maximizing ||W t_k||; no solves."""
    return _argmax_direction(np.linalg.norm(W @ dirs.T, axis=0), dirs)


def select_projected(
    space: ProjectionSpace,
    A: CoefficientOperator,
    E: CoefficientOperator,
    W: np.ndarray,
    alpha: complex | float,
    dirs: EigenDirections,
) -> Direction:
    """The full heuristic evaluated on the Galerkin projection onto the shared space.

    Falls back to :func:`select_residual` when the space is empty or the
    projected shifted matrix is singular.
    """
    U = orthonormal_basis(space.columns()) if not space.is_empty else np.zeros((W.shape[0], 0))
    if U.shape[1] == 0:
        logger.debug("Projection space empty; selecting the direction by the residual heuristic")
        return select_residual(W, dirs)

    shifted = A.project(U) + alpha * E.project(U)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spla.LinAlgWarning)
        lu = spla.lu_factor(shifted)
    pivots = np.abs(np.diag(lu[0]))
    scale = np.abs(shifted).max()
    if scale == 0 or pivots.min() <= Tolerances.SINGULAR_PIVOT * shifted.shape[0] * scale:
        logger.info(f"Projected system singular at alpha={complex(alpha):.4g}; using the residual heuristic")
        return select_residual(W, dirs)

    W_hat = U.conj().T @ W
    scores = np.linalg.norm(spla.lu_solve(lu, W_hat @ dirs.T), axis=0)
    return _argmax_direction(scores, dirs)


def select_cyclic(step_counter: int, dirs: EigenDirections) -> Direction:
    """Eigenvector number (step_counter mod m) + 1."""
    return dirs.direction(step_counter % dirs.m + 1)


def select_random(rng: np.random.Generator, dirs: EigenDirections, real: bool = True) -> Direction:
    """Unit vector drawn uniformly from the real or complex sphere; a general direction."""
    t = rng.standard_normal(dirs.m)
    if not real:
        t = t + 1j * rng.standard_normal(dirs.m)
    return Direction(t / np.linalg.norm(t))


@dataclass
class SelectionContext:
    """What a strategy may look at when choosing the next direction."""

    A: CoefficientOperator
    E: CoefficientOperator
    W: np.ndarray
    alpha: complex | float
    dirs: EigenDirections
    space: ProjectionSpace
    systems: ShiftedSystemCache
    step: int
    real: bool


class DirectionStrategy:
    """Base class of the direction strategies."""

    name = ""

    def __init__(self, seed: int | None = None):
        self.seed = seed

    def shift_repeats(self, m: int) -> int:
        """Consecutive steps that reuse each shift unit."""
        return 1

    def select(self, context: SelectionContext) -> Direction:
        raise NotImplementedError


STRATEGY_REGISTRY: dict[str, type[DirectionStrategy]] = {}


def register_strategy(name: str) -> Callable[[type[DirectionStrategy]], type[DirectionStrategy]]:
    """Decorator to register a direction strategy.

    Args:
        name: Strategy name used in configuration files and on the command line

    Returns:
        Decorator function
    """

    def decorator(cls: type[DirectionStrategy]) -> type[DirectionStrategy]:
        cls.name = name
        STRATEGY_REGISTRY[name] = cls
        return cls

    return decorator


@register_strategy("full")
class FullStrategy(DirectionStrategy):
    def select(self, context: SelectionContext) -> Direction:
        system = context.systems.get(context.alpha)
        return select_full(context.A, context.E, context.W, context.alpha, context.dirs, system)


@register_strategy("projected")
class ProjectedStrategy(DirectionStrategy):
    def select(self, context: SelectionContext) -> Direction:
        try:
            return select_projected(context.space, context.A, context.E, context.W, context.alpha, context.dirs)
        except SingularShiftError:
            logger.info("Projected heuristic failed; using the residual heuristic")
            return select_residual(context.W, context.dirs)


@register_strategy("residual")
class ResidualStrategy(DirectionStrategy):
    def select(self, context: SelectionContext) -> Direction:
        return select_residual(context.W, context.dirs)


@register_strategy("cyclic")
class CyclicStrategy(DirectionStrategy):
    """Cycles through all m eigenvectors per shift, reproducing block ADI."""

    def shift_repeats(self, m: int) -> int:
        return m

    def select(self, context: SelectionContext) -> Direction:
        return select_cyclic(context.step, context.dirs)


@register_strategy("random")
class RandomStrategy(DirectionStrategy):
    """Random general directions. Not expected to converge for indefinite R."""

    def __init__(self, seed: int | None = None):
        super().__init__(seed)
        self.rng = np.random.default_rng(seed)

    def select(self, context: SelectionContext) -> Direction:
        return select_random(self.rng, context.dirs, context.real)


def get_strategy(name: str | DirectionStrategy, seed: int | None = None) -> DirectionStrategy:
    """Instantiate a registered strategy by name.

    Raises:
        ConfigError: If no strategy of that name exists
    """
    if isinstance(name, DirectionStrategy):
        return name
    if name not in STRATEGY_REGISTRY:
        raise ConfigError(
            f"Unknown direction strategy '{name}'",
            suggestion=f"Available strategies: {', '.join(sorted(STRATEGY_REGISTRY))}",
        )
    return STRATEGY_REGISTRY[name](seed=seed)
