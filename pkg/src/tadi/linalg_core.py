"""Numerical kernels shared by every solver module.

Shifted solves with one factorization per shift, small dense generalized and
Hermitian eigenproblems, and rank-revealing orthonormal bases.
"""

from __future__ import annotations

import logging
import warnings
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg as spla
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from tadi.constants import SolverDefaults, Tolerances
from tadi.errors import InputError, SingularShiftError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoefficientOperator:
    """Square coefficient matrix of the pencil, held as a dense array or a CSC matrix."""

    matrix: Any

    @classmethod
    def wrap(cls, matrix: Any, name: str = "matrix") -> CoefficientOperator:
        """Validate and wrap a dense array or any scipy sparse matrix.

        Raises:
            InputError: If the matrix is not square and two-dimensional
        """
        if isinstance(matrix, CoefficientOperator):
            return matrix
        if sp.issparse(matrix):
            stored = sp.csc_matrix(matrix)
        else:
            stored = np.asarray(matrix)
            if stored.ndim == 0:
                stored = stored.reshape(1, 1)
            if not np.issubdtype(stored.dtype, np.number):
                raise InputError(f"{name} must be numeric, got dtype {stored.dtype}")
            if not np.iscomplexobj(stored):
                stored = stored.astype(np.float64)
        if stored.ndim != 2 or stored.shape[0] != stored.shape[1] or stored.shape[0] == 0:
            raise InputError(f"{name} must be a non-empty square matrix, got shape {stored.shape}")
        return cls(stored)

    @classmethod
    def identity(cls, n: int, sparse: bool = False) -> CoefficientOperator:
        return cls(sp.identity(n, format="csc") if sparse else np.eye(n))

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix)

    @property
    def dtype(self) -> np.dtype[Any]:
        return np.dtype(self.matrix.dtype)

    def __matmul__(self, other: np.ndarray) -> np.ndarray:
        if other.shape[0] != self.n:
            raise InputError(f"Cannot multiply {self.n}x{self.n} operator with {other.shape[0]} rows")
        return np.asarray(self.matrix @ other)

    def to_dense(self) -> np.ndarray:
        return np.asarray(self.matrix.toarray()) if self.is_sparse else np.asarray(self.matrix)

    def project(self, U: np.ndarray) -> np.ndarray:
        """Galerkin projection U^H M U."""
        return np.asarray(U.conj().T @ (self @ U))

    def shifted(self, E: CoefficientOperator, shift: complex | float) -> Any:
        """Form A + shift*E, densely or sparsely following the storage of the operands."""
        if self.is_sparse or E.is_sparse:
            return (sp.csc_matrix(self.matrix) + shift * sp.csc_matrix(E.matrix)).tocsc()
        return self.matrix + shift * E.matrix


def check_small_dense(matrix: Any, name: str, cap: int = SolverDefaults.SMALL_DENSE_CAP) -> np.ndarray:
    """Coerce to a dense 2-D array and enforce the small-dense size cap."""
    dense = np.asarray(matrix.toarray() if sp.issparse(matrix) else matrix)
    if dense.ndim == 0:
        dense = dense.reshape(1, 1)
    if dense.ndim != 2:
        raise InputError(f"{name} must be two-dimensional, got {dense.ndim} dimensions")
    if max(dense.shape) > cap:
        raise InputError(f"{name} has shape {dense.shape}, above the small dense cap {cap}")
    return dense


def is_real_shift(alpha: complex | float) -> bool:
    """True when the shift carries no imaginary part."""
    return complex(alpha).imag == 0.0


class ShiftedSystem:
    """Factorization of A + alpha*E, reusable for any number of right-hand sides.

    Real data with a real shift is factored in real arithmetic, so solutions
    with real right-hand sides are exactly real.
    """

    def __init__(
        self,
        A: CoefficientOperator,
        E: CoefficientOperator,
        alpha: complex | float,
        dense_threshold: int = SolverDefaults.DENSE_THRESHOLD,
    ) -> None:
        if A.n != E.n:
            raise InputError(f"A is {A.n}x{A.n} but E is {E.n}x{E.n}")
        if complex(alpha).real >= 0:
            raise InputError(f"Shift {alpha} violates Re(alpha) < 0")

        self.A = A
        self.E = E
        self.alpha = complex(alpha)
        self.n = A.n
        self.real = A.is_real and E.is_real and is_real_shift(alpha)
        shift: complex | float = self.alpha.real if self.real else self.alpha
        self.dense = self.n < dense_threshold

        matrix = A.shifted(E, shift)
        if self.dense:
            self._factor_dense(np.asarray(matrix.toarray() if sp.issparse(matrix) else matrix))
        else:
            self._factor_sparse(sp.csc_matrix(matrix))
        logger.debug(f"Factored A + ({self.alpha:.6g})E, n={self.n}, {'dense' if self.dense else 'sparse'} LU")

    def _factor_dense(self, matrix: np.ndarray) -> None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", spla.LinAlgWarning)
            self._lu = spla.lu_factor(matrix, check_finite=True)
        pivots = np.abs(np.diag(self._lu[0]))
        scale = np.abs(matrix).max()
        if scale == 0 or pivots.min() <= Tolerances.SINGULAR_PIVOT * self.n * scale:
            raise SingularShiftError(self.alpha, details=f"smallest pivot {pivots.min():.3e}, scale {scale:.3e}")

    def _factor_sparse(self, matrix: sp.csc_matrix) -> None:
        try:
            self._splu = splu(matrix)
        except RuntimeError as e:
            raise SingularShiftError(self.alpha, details=str(e)) from e
        pivots = np.abs(self._splu.U.diagonal())
        scale = abs(matrix).max()
        if scale == 0 or pivots.min() <= Tolerances.SINGULAR_PIVOT * self.n * scale:
            raise SingularShiftError(self.alpha, details=f"smallest pivot {pivots.min():.3e}, scale {scale:.3e}")

    def _solve_same_field(self, rhs: np.ndarray) -> np.ndarray:
        if self.dense:
            return np.asarray(spla.lu_solve(self._lu, rhs))
        return np.asarray(self._splu.solve(rhs))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve (A + alpha E) V = rhs for a vector or a block of columns."""
        rhs = np.asarray(rhs)
        if rhs.shape[0] != self.n:
            raise InputError(f"Right-hand side has {rhs.shape[0]} rows, expected {self.n}")
        if rhs.size == 0:
            return np.zeros(rhs.shape, dtype=np.result_type(rhs.dtype, np.float64))

        if self.real and np.iscomplexobj(rhs):
            return self._solve_same_field(np.ascontiguousarray(rhs.real)) + 1j * self._solve_same_field(
                np.ascontiguousarray(rhs.imag)
            )
        if not self.real and not np.iscomplexobj(rhs):
            rhs = rhs.astype(np.complex128)
        elif self.real:
            rhs = rhs.astype(np.float64, copy=False)
        return self._solve_same_field(rhs)


class ShiftedSystemCache:
    """Bounded memo of factorizations keyed by shift, owned by a single run."""

    def __init__(
        self,
        A: CoefficientOperator,
        E: CoefficientOperator,
        dense_threshold: int = SolverDefaults.DENSE_THRESHOLD,
        size: int = SolverDefaults.FACTORIZATION_CACHE,
    ) -> None:
        self.A = A
        self.E = E
        self.dense_threshold = dense_threshold
        self.size = size
        self._systems: OrderedDict[complex, ShiftedSystem] = OrderedDict()
        self.factorizations = 0

    def get(self, alpha: complex | float) -> ShiftedSystem:
        key = complex(alpha)
        system = self._systems.get(key)
        if system is not None:
            self._systems.move_to_end(key)
            return system
        system = ShiftedSystem(self.A, self.E, alpha, self.dense_threshold)
        self.factorizations += 1
        self._systems[key] = system
        if len(self._systems) > self.size:
            self._systems.popitem(last=False)
        return system


def solve_shifted(
    A: CoefficientOperator,
    E: CoefficientOperator,
    alpha: complex | float,
    rhs: np.ndarray,
    dense_threshold: int = SolverDefaults.DENSE_THRESHOLD,
) -> np.ndarray:
    """Solve (A + alpha E) V = rhs.

    Args:
        A: Coefficient operator
        E: Coefficient operator
        alpha: Shift with negative real part
        rhs: n x p right-hand side (or a length-n vector)
        dense_threshold: Use dense LU below this dimension

    Returns:
        V with the shape of ``rhs``

    Raises:
        InputError: If Re(alpha) >= 0 or the dimensions disagree
        SingularShiftError: If alpha is a generalized eigenvalue of (A, E)
    """
    return ShiftedSystem(A, E, alpha, dense_threshold).solve(rhs)


def orthonormal_basis(columns: np.ndarray, drop_tol: float = Tolerances.DROP) -> np.ndarray:
    """Orthonormal basis of the column span, dropping numerically dependent directions.

    Uses QR with column pivoting; columns whose pivot falls below
    ``drop_tol`` times the largest column norm are discarded. An all-zero
    input yields an ``n x 0`` basis.
    """
    X = np.asarray(columns)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    if X.ndim != 2:
        raise InputError(f"Expected a matrix of columns, got {X.ndim} dimensions")
    if drop_tol < 0:
        raise InputError(f"drop_tol must be nonnegative, got {drop_tol}")
    n, k = X.shape
    dtype = np.result_type(X.dtype, np.float64)
    if k == 0:
        return np.zeros((n, 0), dtype=dtype)

    largest = float(np.linalg.norm(X, axis=0).max())
    if largest == 0.0:
        return np.zeros((n, 0), dtype=dtype)

    Q, R, _ = spla.qr(X.astype(dtype, copy=False), mode="economic", pivoting=True)
    pivots = np.abs(np.diag(R))
    rank = int(np.count_nonzero(pivots > drop_tol * largest))
    return np.asarray(Q[:, :rank])


@dataclass(frozen=True)
class PencilSpectrum:
    """Generalized eigenvalues with an explicit flag for infinite ones."""

    values: np.ndarray
    infinite: np.ndarray

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def finite(self) -> np.ndarray:
        return self.values[~self.infinite]


def pencil_eigenvalues(
    A_small: np.ndarray,
    E_small: np.ndarray,
    cap: int = SolverDefaults.SMALL_DENSE_CAP,
) -> PencilSpectrum:
    """All eigenvalues lambda of the pencil lambda*E_small - A_small.

    Eigenvalues are computed in homogeneous form (a, b) with lambda = a/b;
    ``|b| <= tol*|a|`` (including 0/0 for singular pencils) is flagged infinite
    and stored as ``inf``.

    Raises:
        InputError: If the matrices are not square of equal size
    """
    A_dense = check_small_dense(A_small, "projected A", cap)
    E_dense = check_small_dense(E_small, "projected E", cap)
    if A_dense.shape[0] != A_dense.shape[1] or A_dense.shape != E_dense.shape:
        raise InputError(f"Pencil needs equal square matrices, got {A_dense.shape} and {E_dense.shape}")

    k = A_dense.shape[0]
    if k == 0:
        return PencilSpectrum(np.zeros(0, dtype=np.complex128), np.zeros(0, dtype=bool))

    homogeneous = spla.eig(A_dense, E_dense, right=False, homogeneous_eigvals=True)
    a, b = homogeneous[0], homogeneous[1]
    infinite = np.abs(b) <= Tolerances.INFINITE_EIGENVALUE * np.abs(a)
    infinite |= (np.abs(a) == 0) & (np.abs(b) == 0)
    values = np.full(k, np.inf, dtype=np.complex128)
    values[~infinite] = a[~infinite] / b[~infinite]
    return PencilSpectrum(values=values, infinite=infinite)


def hermitian_deviation(R: np.ndarray) -> float:
    """Relative distance of R from its conjugate transpose."""
    scale = float(np.linalg.norm(R))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(R - R.conj().T)) / scale


def hermitian_eig(R: np.ndarray, tol: float = Tolerances.HERMITIAN) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition R = T diag(S) T^H with a deterministic ordering.

    Eigenvalues are sorted by descending magnitude; equal magnitudes put the
    positive one first, remaining ties keep the solver's index order.

    Returns:
        (T, S): unitary (real orthogonal for real R) eigenvectors and real eigenvalues

    Raises:
        InputError: If R is not square or not Hermitian within ``tol``
    """
    R = check_small_dense(R, "R")
    if R.shape[0] != R.shape[1]:
        raise InputError(f"R must be square, got shape {R.shape}")
    deviation = hermitian_deviation(R)
    if deviation > tol:
        raise InputError(f"R is not Hermitian (relative deviation {deviation:.3e})")

    S, T = spla.eigh((R + R.conj().T) / 2)
    order = np.lexsort((np.arange(S.shape[0]), S < 0, -np.abs(S)))
    return np.asarray(T[:, order]), np.asarray(S[order])
