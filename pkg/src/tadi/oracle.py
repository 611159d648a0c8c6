"""Dense reference solutions for small problems."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as spla

from tadi.constants import SolverDefaults
from tadi.errors import InputError, UnstablePencilError
from tadi.linalg_core import pencil_eigenvalues
from tadi.problem import LyapunovProblem
from tadi.residual import NormKind, dense_residual_norm

if TYPE_CHECKING:
    from tadi.adi_block import LDLFactors

logger = logging.getLogger(__name__)

ORACLE_RESIDUAL_LIMIT = 1e-10


@dataclass(frozen=True)
class DenseSolution:
    """Hermitian solution X with the method used and its relative Frobenius residual."""

    X: np.ndarray
    method: str
    residual: float

    @property
    def n(self) -> int:
        return int(self.X.shape[0])


def _kronecker_solve(A: np.ndarray, E: np.ndarray, Q: np.ndarray) -> np.ndarray:
    # vec(A X E^H) = (conj(E) kron A) vec(X) with column-major vec
    n = A.shape[0]
    K = np.kron(E.conj(), A) + np.kron(A.conj(), E)
    x = spla.solve(K, -Q.reshape(-1, order="F"))
    return x.reshape((n, n), order="F")


def _reduced_solve(A: np.ndarray, E: np.ndarray, Q: np.ndarray) -> np.ndarray:
    # E^-1 A X + X (E^-1 A)^H = -E^-1 Q E^-H
    lu = spla.lu_factor(E)
    F = spla.lu_solve(lu, A)
    G = spla.lu_solve(lu, spla.lu_solve(lu, Q).conj().T).conj().T
    return np.asarray(spla.solve_continuous_lyapunov(F, -G))


def dense_lyap_solve(
    problem: LyapunovProblem,
    cap: int = SolverDefaults.ORACLE_CAP,
    kronecker_cap: int = SolverDefaults.KRONECKER_CAP,
) -> DenseSolution:
    """Solve A X E^H + E X A^H + B R B^H = 0 densely.

    Up to ``kronecker_cap`` the vectorized n^2 x n^2 system is solved directly,
    above it the equation is reduced to a standard Lyapunov equation for E^-1 A
    and handed to Bartels-Stewart.

    Raises:
        InputError: If n exceeds ``cap``
        UnstablePencilError: If E is singular or the pencil is not Hurwitz
    """
    n = problem.n
    if n > cap:
        raise InputError(f"Dense oracle is limited to n <= {cap}, got n={n}")

    A = problem.A.to_dense()
    E = problem.E.to_dense()
    spectrum = pencil_eigenvalues(A, E, cap=cap)
    if spectrum.infinite.any():
        raise UnstablePencilError("E is singular: the pencil has infinite eigenvalues")
    largest = float(spectrum.finite().real.max())
    if largest >= 0:
        raise UnstablePencilError(
            f"Pencil is not Hurwitz (max Re lambda = {largest:.6g}); no unique stabilizing solution",
            suggestion="Check the sign conventions of A and E.",
        )

    Q = problem.constant_term()
    scale = float(np.linalg.norm(Q, "fro"))
    if scale == 0.0:
        return DenseSolution(np.zeros((n, n), dtype=Q.dtype), "trivial", 0.0)

    if n <= kronecker_cap:
        X, method = _kronecker_solve(A, E, Q), "kronecker"
    else:
        X, method = _reduced_solve(A, E, Q), "bartels-stewart"
    X = (X + X.conj().T) / 2
    if problem.is_real:
        X = X.real

    residual = dense_residual_norm(problem, X, NormKind.FROBENIUS) / scale
    if residual > ORACLE_RESIDUAL_LIMIT:
        logger.warning(f"Oracle residual {residual:.3e} exceeds {ORACLE_RESIDUAL_LIMIT:.0e} ({method}, n={n})")
    logger.debug(f"Oracle solved n={n} by {method}, relative residual {residual:.3e}")
    return DenseSolution(X, method, residual)


def compare(factors: LDLFactors, reference: DenseSolution) -> float:
    """Relative Frobenius error of L D L^H against the reference (absolute if X_ref = 0).

    Raises:
        InputError: On a dimension mismatch
    """
    if factors.n != reference.n:
        raise InputError(f"Factors have n={factors.n}, reference has n={reference.n}")
    if factors.n > SolverDefaults.ORACLE_CAP:
        raise InputError(f"Dense comparison is limited to n <= {SolverDefaults.ORACLE_CAP}")
    difference = float(np.linalg.norm(factors.to_dense() - reference.X, "fro"))
    scale = float(np.linalg.norm(reference.X, "fro"))
    return difference / scale if scale > 0 else difference
