"""ADI shift generation.

Shifts are Ritz values of the pencil projected onto the span of recent ADI
update columns, filtered to the open left half-plane and pruned to ``ell``
values by the discrete minimax criterion

    min over subsets S  max over candidates lambda  prod_{a in S} |(lambda - conj(a)) / (lambda + a)|.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol

import numpy as np
import scipy.linalg as spla

from tadi.constants import ShiftDefaults, Tolerances
from tadi.errors import InputError, NoValidShiftsError
from tadi.linalg_core import CoefficientOperator, orthonormal_basis, pencil_eigenvalues

if TYPE_CHECKING:
    from tadi.problem import LyapunovProblem

logger = logging.getLogger(__name__)


def _representative(value: complex) -> complex:
    """Snap nearly real values onto the real axis and map Im < 0 to the conjugate."""
    value = complex(value)
    if abs(value.imag) <= Tolerances.REAL_SHIFT * abs(value):
        return complex(value.real, 0.0)
    return value.conjugate() if value.imag < 0 else value


def _dedupe(values: Sequence[complex]) -> list[complex]:
    unique: list[complex] = []
    for value in values:
        if not any(abs(value - kept) <= Tolerances.REAL_SHIFT * abs(kept) for kept in unique):
            unique.append(value)
    return unique


@dataclass
class ShiftPool:
    """Ordered shifts and a read cursor.

    In real mode the pool is closed under conjugation and every non-real
    shift sits directly before its conjugate, the Im > 0 member first.
    """

    values: tuple[complex, ...]
    real_mode: bool = False
    cursor: int = 0

    def __post_init__(self) -> None:
        if not self.values:
            raise NoValidShiftsError("Shift pool is empty")
        for value in self.values:
            if complex(value).real >= 0:
                raise InputError(f"Shift {value} violates Re(alpha) < 0")
        if self.real_mode:
            i = 0
            while i < len(self.values):
                value = complex(self.values[i])
                if value.imag == 0:
                    i += 1
                    continue
                if value.imag < 0 or i + 1 == len(self.values) or complex(self.values[i + 1]) != value.conjugate():
                    raise InputError(f"Real-mode pool is not ordered in conjugate pairs at position {i}: {value}")
                i += 2

    @classmethod
    def from_shifts(cls, values: Sequence[complex | float], real_mode: bool = False) -> ShiftPool:
        """Build a pool from arbitrary shifts.

        In real mode every shift is reduced to its representative (real or
        Im > 0), duplicates are dropped and each complex value is followed by
        its conjugate.
        """
        if not real_mode:
            return cls(tuple(complex(v) for v in values), real_mode=False)
        expanded: list[complex] = []
        for value in _dedupe([_representative(v) for v in values]):
            expanded.append(value)
            if value.imag != 0:
                expanded.append(value.conjugate())
        return cls(tuple(expanded), real_mode=True)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def exhausted(self) -> bool:
        return self.cursor >= len(self.values)

    def pop_unit(self) -> complex:
        """Next shift; in real mode a conjugate pair is consumed as one unit."""
        if self.exhausted:
            raise NoValidShiftsError("Shift pool exhausted")
        value = complex(self.values[self.cursor])
        self.cursor += 2 if self.real_mode and value.imag != 0 else 1
        return value

    def fresh(self) -> ShiftPool:
        return ShiftPool(self.values, self.real_mode)


class ProjectionSpace:
    """Ring buffer of the most recent ADI update columns."""

    def __init__(self, n: int, k_max: int):
        if k_max < 1:
            raise InputError(f"k_max must be positive, got {k_max}")
        self.n = n
        self.k_max = k_max
        self._columns: deque[np.ndarray] = deque(maxlen=k_max)

    def push(self, columns: np.ndarray) -> None:
        columns = np.asarray(columns)
        if columns.ndim == 1:
            columns = columns[:, np.newaxis]
        if columns.shape[0] != self.n:
            raise InputError(f"Update columns have {columns.shape[0]} rows, expected {self.n}")
        for j in range(columns.shape[1]):
            self._columns.append(columns[:, j].copy())

    def columns(self) -> np.ndarray:
        if not self._columns:
            return np.zeros((self.n, 0))
        return np.column_stack(list(self._columns))

    @property
    def is_empty(self) -> bool:
        return not self._columns

    def __len__(self) -> int:
        return len(self._columns)


def _ratio_matrix(candidates: np.ndarray) -> np.ndarray:
    # F[i, j] = |(lambda_i - conj(a_j)) / (lambda_i + a_j)|
    lam = candidates[:, np.newaxis]
    alpha = candidates[np.newaxis, :]
    return np.abs((lam - alpha.conj()) / (lam + alpha))


def minimax_objective(candidates: Sequence[complex], subset: Sequence[complex]) -> float:
    """Worst case over ``candidates`` of the ADI rational function built from ``subset``."""
    lam = np.asarray(candidates, dtype=np.complex128)[:, np.newaxis]
    alpha = np.asarray(subset, dtype=np.complex128)[np.newaxis, :]
    return float(np.prod(np.abs((lam - alpha.conj()) / (lam + alpha)), axis=1).max())


def minimax_select(
    candidates: Sequence[complex],
    ell: int,
    exhaustive_limit: int = ShiftDefaults.EXHAUSTIVE_LIMIT,
) -> tuple[complex, ...]:
    """Pick the ``ell`` candidates minimizing the minimax objective.

    Candidates are ranked by larger |Re|, then larger |Im|, then input order;
    ties in the objective go to the subset that comes first in this ranking.
    The search is exhaustive for up to ``exhaustive_limit`` candidates and
    greedy above.

    Raises:
        NoValidShiftsError: If there are no candidates
        InputError: If ell < 1 or a candidate has Re >= 0
    """
    if ell < 1:
        raise InputError(f"ell must be positive, got {ell}")
    values = np.asarray(candidates, dtype=np.complex128).ravel()
    if values.size == 0:
        raise NoValidShiftsError("No valid shifts: the candidate set is empty")
    if np.any(values.real >= 0):
        raise InputError("Shift candidates must lie in the open left half-plane")

    ranked = sorted(range(values.size), key=lambda i: (-abs(values[i].real), -abs(values[i].imag), i))
    if values.size <= ell:
        return tuple(complex(values[i]) for i in ranked)

    ratios = _ratio_matrix(values)

    def objective(subset: Sequence[int]) -> float:
        return float(ratios[:, list(subset)].prod(axis=1).max())

    best: list[int] = []
    best_value = np.inf
    if values.size <= exhaustive_limit:
        for subset in itertools.combinations(ranked, ell):
            value = objective(subset)
            if value < best_value * (1 - Tolerances.MINIMAX_TIE):
                best, best_value = list(subset), value
    else:
        for _ in range(ell):
            round_best, round_value = -1, np.inf
            for i in ranked:
                if i in best:
                    continue
                value = objective([*best, i])
                if value < round_value * (1 - Tolerances.MINIMAX_TIE):
                    round_best, round_value = i, value
            best.append(round_best)
            best_value = round_value

    logger.debug(f"Selected {ell} of {values.size} shifts, objective {best_value:.3e}")
    return tuple(complex(values[i]) for i in best)


def projection_shifts(
    columns: np.ndarray | ProjectionSpace,
    A: CoefficientOperator,
    E: CoefficientOperator,
    ell: int,
    real_mode: bool = False,
    exhaustive_limit: int = ShiftDefaults.EXHAUSTIVE_LIMIT,
) -> ShiftPool:
    """Ritz values of (A, E) on span(columns), filtered and pruned to ``ell`` shifts.

    Raises:
        NoValidShiftsError: If the space is empty or no projected eigenvalue is finite
            with negative real part
    """
    if isinstance(columns, ProjectionSpace):
        columns = columns.columns()
    U = orthonormal_basis(columns)
    if U.shape[1] == 0:
        raise NoValidShiftsError("No valid shifts: the projection space is empty")

    spectrum = pencil_eigenvalues(A.project(U), E.project(U))
    finite = spectrum.finite()
    stable = finite[np.isfinite(finite) & (finite.real < 0)]
    dropped = len(spectrum) - stable.size
    if dropped:
        logger.debug(f"Discarded {dropped} of {len(spectrum)} projected eigenvalues outside the left half-plane")
    if stable.size == 0:
        raise NoValidShiftsError(
            "No valid shifts: every projected eigenvalue is infinite or has nonnegative real part",
            suggestion="Check that the pencil is Hurwitz, or supply fixed shifts.",
        )

    candidates = _dedupe([_representative(v) for v in stable]) if real_mode else list(stable)
    selected = minimax_select(candidates, ell, exhaustive_limit)
    return ShiftPool.from_shifts(selected, real_mode=real_mode)


def initial_shifts(
    problem: LyapunovProblem,
    ell: int = ShiftDefaults.ELL,
    sketch_rank: int = ShiftDefaults.SKETCH_RANK,
    exhaustive_limit: int = ShiftDefaults.EXHAUSTIVE_LIMIT,
) -> ShiftPool:
    """First pool, projected on B or on its leading ``sketch_rank`` left singular vectors."""
    if ell < 1 or sketch_rank < 1:
        raise InputError(f"ell and sketch_rank must be positive, got {ell} and {sketch_rank}")
    if problem.m <= sketch_rank:
        basis = problem.B
    else:
        U, _, _ = spla.svd(problem.B, full_matrices=False)
        basis = U[:, :sketch_rank]
    return projection_shifts(basis, problem.A, problem.E, ell, problem.is_real, exhaustive_limit)


class ShiftSource(Protocol):
    """Supplies a fresh pool whenever the current one runs out."""

    def next_pool(self, problem: LyapunovProblem, space: ProjectionSpace) -> ShiftPool: ...


@dataclass
class FixedShiftSource:
    """Cycles through a user-supplied shift list."""

    shifts: Sequence[complex | float]

    def next_pool(self, problem: LyapunovProblem, space: ProjectionSpace) -> ShiftPool:
        return ShiftPool.from_shifts(self.shifts, real_mode=problem.is_real)


@dataclass
class ProjectionShiftSource:
    """Adaptive shifts from the shared projection space.

    The first request uses :func:`initial_shifts`; later requests project onto
    the last update columns. When projection yields nothing the previous pool
    is reused.
    """

    ell: int = ShiftDefaults.ELL
    sketch_rank: int = ShiftDefaults.SKETCH_RANK
    exhaustive_limit: int = ShiftDefaults.EXHAUSTIVE_LIMIT
    last_pool: ShiftPool | None = field(default=None, repr=False)

    def next_pool(self, problem: LyapunovProblem, space: ProjectionSpace) -> ShiftPool:
        try:
            if space.is_empty:
                pool = initial_shifts(problem, self.ell, self.sketch_rank, self.exhaustive_limit)
            else:
                pool = projection_shifts(
                    space, problem.A, problem.E, self.ell, problem.is_real, self.exhaustive_limit
                )
        except NoValidShiftsError:
            if self.last_pool is None:
                raise
            logger.warning("Projection produced no valid shifts; reusing the previous shift pool")
            return self.last_pool.fresh()
        self.last_pool = pool
        logger.debug(f"New shift pool: {', '.join(f'{v:.4g}' for v in pool.values)}")
        return pool
