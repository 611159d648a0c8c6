"""Tangential ADI: rank-1 updates V t along a direction t per step.

A step with shift alpha and direction t solves (A + alpha E) v = W t and
appends v to L with the scalar d = -2 Re(alpha) / (t^H R^-1 t) to D. The
residual factor changes by a rank-1 term, W <- W - 2 Re(alpha) E v (R^-1 t)^H / (t^H R^-1 t).
For an eigenvector t_p of R this simplifies to d = -2 Re(alpha) s_p and
W <- W - 2 Re(alpha) E v t_p^H.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as spla

from tadi.adi_block import SQRT2, ADIState, LDLFactors, StepOutcome, check_solvable, drive
from tadi.constants import DirectionDefaults, ShiftDefaults, SolverDefaults, Tolerances
from tadi.direction_selector import Direction, DirectionStrategy, EigenDirections, SelectionContext, get_strategy
from tadi.errors import InputError, IsotropicDirectionError, ZeroConstantTermError
from tadi.linalg_core import ShiftedSystemCache
from tadi.problem import LyapunovProblem, truncate_constant_term
from tadi.residual import NormKind, ResidualFactor
from tadi.shift_selector import ProjectionSpace, ShiftSource
from tadi.trace import ConvergenceTrace

logger = logging.getLogger(__name__)


@dataclass(kw_only=True)
class TangentialState(ADIState):
    """Block state plus the eigendecomposition and LU factorization of R."""

    dirs: EigenDirections
    center_lu: tuple[np.ndarray, np.ndarray]
    rinv_norm: float
    steps: int = field(default=0)

    @classmethod
    def start(
        cls,
        problem: LyapunovProblem,
        k_max: int,
        dense_threshold: int = SolverDefaults.DENSE_THRESHOLD,
    ) -> TangentialState:
        dirs = EigenDirections.from_center(problem.R)
        return cls(
            problem=problem,
            systems=ShiftedSystemCache(problem.A, problem.E, dense_threshold),
            factors=LDLFactors.empty(problem.n),
            W=problem.B.copy(),
            space=ProjectionSpace(problem.n, k_max),
            dirs=dirs,
            center_lu=spla.lu_factor(problem.R),
            rinv_norm=float(1.0 / np.abs(dirs.S).min()),
        )

    def commit(self, outcome: StepOutcome) -> None:
        super().commit(outcome)
        self.steps += 1


def _update_weights(state: TangentialState, direction: Direction, alpha_re: float) -> tuple[float, np.ndarray]:
    """Scalar d and the row vector w with W_new = W - 2 Re(alpha) E v w."""
    t = np.asarray(direction.t)
    if t.shape != (state.problem.m,):
        raise InputError(f"Direction has shape {t.shape}, expected ({state.problem.m},)")
    t_norm = float(np.linalg.norm(t))
    if t_norm == 0:
        raise InputError("Tangential direction must be nonzero")

    if direction.is_eigenvector:
        return -2.0 * alpha_re * float(direction.eigenvalue), t.conj()  # type: ignore[arg-type]

    rinv_t = spla.lu_solve(state.center_lu, t)
    q = complex(t.conj() @ rinv_t)
    if abs(q) < Tolerances.ISOTROPY * t_norm**2 * state.rinv_norm:
        raise IsotropicDirectionError(
            f"Isotropic direction: |t^H R^-1 t| = {abs(q):.3e} is numerically zero",
            details="The update scalar d = -2 Re(alpha) / (t^H R^-1 t) is undefined.",
        )
    return -2.0 * alpha_re / q.real, rinv_t.conj() / q.real


def tangential_step_complex(
    state: TangentialState,
    alpha: complex | float,
    direction: Direction,
    W_prev: np.ndarray | None = None,
) -> StepOutcome:
    """One rank-1 step along ``direction``.

    Raises:
        InputError: If Re(alpha) >= 0 or t = 0
        IsotropicDirectionError: If t^H R^-1 t vanishes for a general direction
        SingularShiftError: If A + alpha E is singular
    """
    W = state.W if W_prev is None else W_prev
    alpha_re = complex(alpha).real
    if alpha_re >= 0:
        raise InputError(f"Shift {alpha} violates Re(alpha) < 0")
    d, weight = _update_weights(state, direction, alpha_re)

    v = state.systems.get(alpha).solve(W @ direction.t)
    W_new = W - 2.0 * alpha_re * np.outer(state.problem.E @ v, weight)
    column = v[:, np.newaxis]
    factors = state.factors.extended([column], [np.array([[d]])])
    return StepOutcome(
        factors, ResidualFactor(W_new, state.problem.R), 1, (complex(alpha),), column, direction.index
    )


def tangential_step_real(
    state: TangentialState,
    alpha: complex | float,
    direction: Direction,
    W_prev: np.ndarray | None = None,
) -> StepOutcome:
    """Real-arithmetic rank-1 step; a complex ``alpha`` consumes its conjugate pair with the same t.

    With delta = Re(alpha)/Im(alpha) and vr = Re v + delta Im v, L gains
    sqrt(2) vr and sqrt(2) sqrt(delta^2 + 1) Im v, D gains diag(d, d) and
    W <- W - 4 Re(alpha) E vr w.

    Raises:
        InputError: For a complex problem or direction, or a complex-typed shift with Im = 0
    """
    problem = state.problem
    if not problem.is_real:
        raise InputError("Real-arithmetic steps need a real problem")
    if np.iscomplexobj(direction.t) and np.any(np.imag(direction.t) != 0):
        raise InputError("Real-arithmetic steps need a real tangential direction")
    direction = Direction(np.real(direction.t), direction.index, direction.eigenvalue)
    if isinstance(alpha, complex) and alpha.imag == 0:
        raise InputError(f"Shift {alpha} has zero imaginary part and must be passed as a real shift")
    if not isinstance(alpha, complex):
        return tangential_step_complex(state, float(alpha), direction, W_prev)

    W = state.W if W_prev is None else W_prev
    if alpha.real >= 0:
        raise InputError(f"Shift {alpha} violates Re(alpha) < 0")
    d, weight = _update_weights(state, direction, alpha.real)
    weight = weight.real

    v = state.systems.get(alpha).solve(W @ direction.t)
    delta = alpha.real / alpha.imag
    v_re = v.real + delta * v.imag
    W_new = W - 4.0 * alpha.real * np.outer(problem.E @ v_re, weight)

    columns = np.column_stack([SQRT2 * v_re, SQRT2 * np.sqrt(delta**2 + 1.0) * v.imag])
    center = np.array([[d]])
    factors = state.factors.extended([columns[:, :1], columns[:, 1:]], [center, center])
    return StepOutcome(
        factors,
        ResidualFactor(W_new, problem.R),
        1,
        (alpha, alpha.conjugate()),
        columns,
        direction.index,
    )


def run_tangential_adi(
    problem: LyapunovProblem,
    shift_source: ShiftSource,
    strategy: str | DirectionStrategy = DirectionDefaults.STRATEGY,
    tol: float = SolverDefaults.TOL,
    max_cols: int | None = None,
    norm: NormKind = NormKind.SPECTRAL,
    k_max: int | None = None,
    dense_threshold: int = SolverDefaults.DENSE_THRESHOLD,
    seed: int | None = None,
) -> tuple[LDLFactors, ConvergenceTrace]:
    """Solve the Lyapunov equation with tangential ADI.

    R is first truncated to an invertible center. Each step asks ``strategy``
    for a direction; in real mode a conjugate pair shares one direction.

    Returns:
        (factors, trace); trace rows carry the direction index (-1 for general directions)
    """
    check_solvable(problem, tol)
    max_cols = max_cols if max_cols is not None else SolverDefaults.MAX_COLS_PER_RHS * problem.m
    k_max = k_max if k_max is not None else ShiftDefaults.K_MAX_PER_RHS * problem.m
    selector = get_strategy(strategy, seed)

    try:
        truncated = truncate_constant_term(problem)
    except ZeroConstantTermError:
        logger.info("Center R is zero; returning X = 0")
        trace = ConvergenceTrace(variant="tangential", converged=True, stop_reason="zero constant term")
        return LDLFactors.empty(problem.n), trace

    state = TangentialState.start(truncated, k_max, dense_threshold)
    step = tangential_step_real if truncated.is_real else tangential_step_complex

    def advance(_: ADIState, alpha: complex | float) -> StepOutcome:
        context = SelectionContext(
            A=truncated.A,
            E=truncated.E,
            W=state.W,
            alpha=alpha,
            dirs=state.dirs,
            space=state.space,
            systems=state.systems,
            step=state.steps,
            real=truncated.is_real,
        )
        return step(state, alpha, selector.select(context))

    logger.info(f"Tangential ADI with {selector.name} directions, m={truncated.m}")
    return drive(
        state,
        shift_source,
        advance,
        tol,
        max_cols,
        norm,
        variant="tangential",
        repeats=selector.shift_repeats(truncated.m),
    )
