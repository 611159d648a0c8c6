"""Indefinite factorized block ADI iteration.

Each step solves (A + alpha E) V = W with the current residual factor W,
appends V to L and the block -2 Re(alpha) R to D, and updates
W <- W - 2 Re(alpha) E V. For real problems a conjugate shift pair is
handled with one complex solve and two real update blocks.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from tadi.constants import SolverDefaults, ShiftDefaults
from tadi.errors import InputError, SolverAbortedError
from tadi.linalg_core import ShiftedSystemCache, is_real_shift
from tadi.problem import LyapunovProblem, validate
from tadi.residual import NormKind, ResidualFactor, residual_norm
from tadi.shift_selector import ProjectionSpace, ShiftPool, ShiftSource
from tadi.trace import ConvergenceTrace, TraceRecord

logger = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class LDLFactors:
    """Low-rank factors of X ~ L D L^H, stored as the per-step column blocks."""

    n: int
    blocks: tuple[np.ndarray, ...] = ()
    centers: tuple[np.ndarray, ...] = ()

    @classmethod
    def empty(cls, n: int) -> LDLFactors:
        return cls(n)

    def extended(self, blocks: Sequence[np.ndarray], centers: Sequence[np.ndarray]) -> LDLFactors:
        """New factors with the given column blocks and matching centers appended."""
        for block, center in zip(blocks, centers, strict=True):
            if block.shape[0] != self.n or center.shape != (block.shape[1], block.shape[1]):
                raise InputError(f"Block {block.shape} and center {center.shape} do not fit n={self.n}")
        return LDLFactors(self.n, self.blocks + tuple(blocks), self.centers + tuple(centers))

    @property
    def ncols(self) -> int:
        return sum(block.shape[1] for block in self.blocks)

    @property
    def widths(self) -> list[int]:
        return [block.shape[1] for block in self.blocks]

    @property
    def is_real(self) -> bool:
        return not any(np.iscomplexobj(b) for b in self.blocks + self.centers)

    @property
    def L(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros((self.n, 0))
        return np.hstack(self.blocks)

    @property
    def D(self) -> np.ndarray:
        if not self.centers:
            return np.zeros((0, 0))
        return np.asarray(spla.block_diag(*self.centers))

    def to_dense(self) -> np.ndarray:
        """X = L D L^H as a dense n x n matrix."""
        if not self.blocks:
            return np.zeros((self.n, self.n))
        L = self.L
        return np.asarray(L @ self.D @ L.conj().T)


@dataclass(frozen=True)
class StepOutcome:
    factors: LDLFactors
    residual: ResidualFactor
    solves: int
    shifts: tuple[complex, ...]
    columns: np.ndarray
    direction: int = -1


@dataclass
class ADIState:
    """Mutable state of one run: factors, residual factor, projection space and counters."""

    problem: LyapunovProblem
    systems: ShiftedSystemCache
    factors: LDLFactors
    W: np.ndarray
    space: ProjectionSpace
    solves: int = 0

    @classmethod
    def start(
        cls,
        problem: LyapunovProblem,
        k_max: int,
        dense_threshold: int = SolverDefaults.DENSE_THRESHOLD,
    ) -> ADIState:
        return cls(
            problem=problem,
            systems=ShiftedSystemCache(problem.A, problem.E, dense_threshold),
            factors=LDLFactors.empty(problem.n),
            W=problem.B.copy(),
            space=ProjectionSpace(problem.n, k_max),
        )

    def commit(self, outcome: StepOutcome) -> None:
        self.factors = outcome.factors
        self.W = outcome.residual.W
        self.solves += outcome.solves
        self.space.push(outcome.columns)


def block_step_complex(state: ADIState, alpha: complex | float, W_prev: np.ndarray | None = None) -> StepOutcome:
    """One block ADI step with a single shift.

    Raises:
        InputError: If Re(alpha) >= 0
        SingularShiftError: If A + alpha E is singular
    """
    W = state.W if W_prev is None else W_prev
    if complex(alpha).real >= 0:
        raise InputError(f"Shift {alpha} violates Re(alpha) < 0")
    problem = state.problem
    scale = -2.0 * complex(alpha).real

    V = state.systems.get(alpha).solve(W)
    W_new = W + scale * (problem.E @ V)
    factors = state.factors.extended([V], [scale * problem.R])
    return StepOutcome(factors, ResidualFactor(W_new, problem.R), 1, (complex(alpha),), V)


def block_step_real(state: ADIState, alpha: complex | float, W_prev: np.ndarray | None = None) -> StepOutcome:
    """Real-arithmetic block step; a complex ``alpha`` consumes the pair (alpha, conj(alpha)).

    The pair needs one complex solve. With delta = Re(alpha)/Im(alpha) and
    Vr = Re V + delta Im V, L gains sqrt(2) Vr and sqrt(2) sqrt(delta^2 + 1) Im V
    with two center blocks -2 Re(alpha) R, and W <- W - 4 Re(alpha) E Vr.

    Raises:
        InputError: For a complex problem, Re(alpha) >= 0, or a complex-typed
            shift with zero imaginary part
    """
    problem = state.problem
    if not problem.is_real:
        raise InputError("Real-arithmetic steps need a real problem")
    if isinstance(alpha, complex) and alpha.imag == 0:
        raise InputError(f"Shift {alpha} has zero imaginary part and must be passed as a real shift")
    if not isinstance(alpha, complex):
        return block_step_complex(state, float(alpha), W_prev)

    W = state.W if W_prev is None else W_prev
    if alpha.real >= 0:
        raise InputError(f"Shift {alpha} violates Re(alpha) < 0")

    V = state.systems.get(alpha).solve(W)
    delta = alpha.real / alpha.imag
    V_re = V.real + delta * V.imag
    W_new = W - 4.0 * alpha.real * (problem.E @ V_re)

    first = SQRT2 * V_re
    second = SQRT2 * np.sqrt(delta**2 + 1.0) * V.imag
    center = -2.0 * alpha.real * problem.R
    factors = state.factors.extended([first, second], [center, center])
    return StepOutcome(
        factors,
        ResidualFactor(W_new, problem.R),
        1,
        (alpha, alpha.conjugate()),
        np.hstack([first, second]),
    )


Advance = Callable[[ADIState, complex | float], StepOutcome]


def drive(
    state: ADIState,
    shift_source: ShiftSource,
    advance: Advance,
    tol: float,
    max_cols: int,
    norm: NormKind = NormKind.SPECTRAL,
    variant: str = "block",
    repeats: int = 1,
) -> tuple[LDLFactors, ConvergenceTrace]:
    """Run ``advance`` until the normalized residual is at most ``tol`` or L reaches ``max_cols``.

    Each shift unit (a shift, or a conjugate pair in real mode) is used for
    ``repeats`` consecutive steps. A fresh pool is requested from
    ``shift_source`` whenever the current one is exhausted.

    Raises:
        SolverAbortedError: With the partial factors and trace attached
    """
    problem = state.problem
    initial = residual_norm(state.W, problem.R, norm)
    trace = ConvergenceTrace(variant=variant, initial_norm=initial)
    if initial == 0.0:
        trace.converged = True
        trace.stop_reason = "zero constant term"
        logger.info("Constant term is zero; returning X = 0")
        return state.factors, trace

    residual = 1.0
    started = time.perf_counter()
    pool: ShiftPool | None = None

    def running() -> bool:
        return residual > tol and state.factors.ncols < max_cols

    try:
        while running():
            if pool is None or pool.exhausted:
                pool = shift_source.next_pool(problem, state.space)
                trace.pools.append(pool.values)
            unit = pool.pop_unit()
            alpha: complex | float = unit.real if is_real_shift(unit) else unit
            for _ in range(repeats):
                if not running():
                    break
                outcome = advance(state, alpha)
                state.commit(outcome)
                residual = outcome.residual.norm(norm) / initial
                trace.append(
                    TraceRecord(
                        iteration=len(trace) + 1,
                        columns=state.factors.ncols,
                        shift_re=unit.real,
                        shift_im=unit.imag,
                        direction=outcome.direction,
                        residual=residual,
                        solves=state.solves,
                        wall_time=time.perf_counter() - started,
                    )
                )
                logger.debug(
                    f"{variant} step {len(trace)}: alpha={unit:.4g}, columns={state.factors.ncols}, "
                    f"residual={residual:.3e}"
                )
    except SolverAbortedError as e:
        e.factors = state.factors
        e.trace = trace
        trace.stop_reason = e.message
        raise

    trace.converged = residual <= tol
    trace.stop_reason = "tolerance reached" if trace.converged else "column limit reached"
    logger.info(
        f"{variant} ADI finished after {len(trace)} steps: {trace.stop_reason}, "
        f"{state.factors.ncols} columns, residual {residual:.3e}"
    )
    return state.factors, trace


def check_solvable(problem: LyapunovProblem, tol: float) -> None:
    """Reject inputs no ADI variant can run on.

    Raises:
        InputError: For a non-Hermitian R, complex data in real mode or tol <= 0
    """
    if not tol > 0:
        raise InputError(f"tol must be positive, got {tol}")
    report = validate(problem, check_stability=False)
    if not report.is_hermitian or report.realness_violations:
        raise InputError(f"Invalid problem {problem.name}: {'; '.join(report.issues())}")


def run_block_adi(
    problem: LyapunovProblem,
    shift_source: ShiftSource,
    tol: float = SolverDefaults.TOL,
    max_cols: int | None = None,
    norm: NormKind = NormKind.SPECTRAL,
    k_max: int | None = None,
    dense_threshold: int = SolverDefaults.DENSE_THRESHOLD,
) -> tuple[LDLFactors, ConvergenceTrace]:
    """Solve the Lyapunov equation with block ADI.

    Args:
        problem: Validated problem
        shift_source: Supplies shift pools; consumed in conjugate pairs for real problems
        tol: Stop once the normalized residual is at most this
        max_cols: Column cap for L, default 20 m
        norm: Residual norm
        k_max: Projection space size in columns, default 4 m
        dense_threshold: Dense LU below this dimension

    Returns:
        (factors, trace)
    """
    check_solvable(problem, tol)
    max_cols = max_cols if max_cols is not None else SolverDefaults.MAX_COLS_PER_RHS * problem.m
    k_max = k_max if k_max is not None else ShiftDefaults.K_MAX_PER_RHS * problem.m
    state = ADIState.start(problem, k_max, dense_threshold)
    advance = block_step_real if problem.is_real else block_step_complex
    return drive(state, shift_source, advance, tol, max_cols, norm, variant="block")


__all__ = [
    "ADIState",
    "LDLFactors",
    "StepOutcome",
    "block_step_complex",
    "block_step_real",
    "drive",
    "run_block_adi",
]
