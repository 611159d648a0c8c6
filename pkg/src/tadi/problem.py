"""Lyapunov problem model, validation, constant-term truncation and problem sources.

A problem is the generalized Lyapunov equation

    A X E^H + E X A^H + B R B^H = 0

with Hermitian, possibly indefinite center R.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import scipy.io
import scipy.linalg as spla
import scipy.sparse as sp

from tadi.constants import SolverDefaults, Tolerances, Utility
from tadi.errors import InputError, ZeroConstantTermError
from tadi.linalg_core import CoefficientOperator, hermitian_deviation, hermitian_eig, pencil_eigenvalues

logger = logging.getLogger(__name__)


class Arithmetic(Enum):
    """Field the solver works in."""

    REAL = "real"
    COMPLEX = "complex"

    @classmethod
    def resolve(cls, requested: str | Arithmetic, *arrays: Any) -> Arithmetic:
        """Turn 'auto' into real or complex by inspecting the data."""
        if isinstance(requested, Arithmetic):
            return requested
        if requested == "auto":
            return cls.COMPLEX if any(np.iscomplexobj(a) for a in arrays) else cls.REAL
        try:
            return cls(requested)
        except ValueError as e:
            raise InputError(f"Unknown arithmetic '{requested}', expected auto, real or complex") from e


@dataclass(frozen=True)
class LyapunovProblem:
    """Coefficients of A X E^H + E X A^H + B R B^H = 0."""

    A: CoefficientOperator
    E: CoefficientOperator
    B: np.ndarray
    R: np.ndarray
    arithmetic: Arithmetic
    name: str = "problem"
    provenance: str = ""

    @classmethod
    def create(
        cls,
        A: Any,
        B: Any,
        E: Any | None = None,
        R: Any | None = None,
        arithmetic: str | Arithmetic = "auto",
        name: str = "problem",
        provenance: str = "",
    ) -> LyapunovProblem:
        """Build a problem, filling E = I and R = I when omitted.

        Shapes are checked here; Hermitian and realness properties are left to
        :func:`validate` so that defective inputs can still be reported on.

        Raises:
            InputError: On shape mismatches or m > n
        """
        A_op = CoefficientOperator.wrap(A, "A")
        n = A_op.n
        E_op = CoefficientOperator.identity(n, sparse=A_op.is_sparse) if E is None else CoefficientOperator.wrap(E, "E")
        if E_op.n != n:
            raise InputError(f"E is {E_op.n}x{E_op.n} but A is {n}x{n}")

        B_arr = np.asarray(B.toarray() if sp.issparse(B) else B)
        if B_arr.ndim == 1:
            B_arr = B_arr[:, np.newaxis]
        if B_arr.ndim != 2 or B_arr.shape[0] != n:
            raise InputError(f"B must have {n} rows, got shape {B_arr.shape}")
        m = B_arr.shape[1]
        if m < 1 or m > n:
            raise InputError(f"B must have between 1 and n={n} columns, got {m}")

        R_arr = np.eye(m) if R is None else np.asarray(R.toarray() if sp.issparse(R) else R)
        if R_arr.ndim == 0:
            R_arr = R_arr.reshape(1, 1)
        if R_arr.shape != (m, m):
            raise InputError(f"R must be {m}x{m} to match B, got shape {R_arr.shape}")

        resolved = Arithmetic.resolve(arithmetic, A_op.matrix, E_op.matrix, B_arr, R_arr)
        if resolved is Arithmetic.REAL:
            B_arr, R_arr = (X.real if np.iscomplexobj(X) and not np.any(X.imag) else X for X in (B_arr, R_arr))
        if not np.iscomplexobj(B_arr):
            B_arr = B_arr.astype(np.float64)
        if not np.iscomplexobj(R_arr):
            R_arr = R_arr.astype(np.float64)
        return cls(A_op, E_op, B_arr, R_arr, resolved, name=name, provenance=provenance)

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def m(self) -> int:
        return int(self.B.shape[1])

    @property
    def is_real(self) -> bool:
        return self.arithmetic is Arithmetic.REAL

    def with_constant_term(self, B: np.ndarray, R: np.ndarray, name: str | None = None) -> LyapunovProblem:
        """Same pencil, different constant term B R B^H."""
        return replace(self, B=B, R=R, name=name or self.name)

    def constant_term(self) -> np.ndarray:
        """Dense B R B^H (small problems and tests only)."""
        return np.asarray(self.B @ self.R @ self.B.conj().T)


def scalar_problem(a: float = -1.0, e: float = 1.0, b: float = 1.0, r: float = 2.0) -> LyapunovProblem:
    """The 1x1 problem 2aex + b^2 r = 0, handy as a smoke test."""
    return LyapunovProblem.create(
        np.array([[a]]), np.array([[b]]), E=np.array([[e]]), R=np.array([[r]]), name="scalar", provenance="scalar"
    )


@dataclass
class ValidationReport:
    """Findings of :func:`validate`; never raises."""

    n: int
    m: int
    hermitian_deviation: float
    realness_violations: list[str] = field(default_factory=list)
    inertia: tuple[int, int, int] = (0, 0, 0)
    max_real_eigenvalue: float | None = None
    infinite_eigenvalues: int = 0
    stability_checked: bool = False

    @property
    def is_hermitian(self) -> bool:
        return self.hermitian_deviation <= Tolerances.HERMITIAN

    @property
    def hurwitz(self) -> bool | None:
        if not self.stability_checked or self.max_real_eigenvalue is None:
            return None
        return self.max_real_eigenvalue < 0

    @property
    def ok(self) -> bool:
        return self.is_hermitian and not self.realness_violations and self.hurwitz is not False

    def issues(self) -> list[str]:
        found = []
        if not self.is_hermitian:
            found.append(f"R is not Hermitian (relative deviation {self.hermitian_deviation:.3e})")
        found.extend(f"{name} has complex entries in real arithmetic" for name in self.realness_violations)
        if self.hurwitz is False:
            found.append(f"pencil is not Hurwitz (max Re lambda = {self.max_real_eigenvalue:.6g})")
        return found


def validate(
    problem: LyapunovProblem,
    check_stability: bool = True,
    dense_cap: int = SolverDefaults.STABILITY_CAP,
) -> ValidationReport:
    """Report Hermitian deviation, realness violations, inertia of R and stability.

    The pencil eigenvalues are only computed when ``check_stability`` is set and
    ``n <= dense_cap``; infinite eigenvalues are ignored for the Hurwitz test.
    """
    report = ValidationReport(n=problem.n, m=problem.m, hermitian_deviation=hermitian_deviation(problem.R))

    if problem.is_real:
        for name, data in (("A", problem.A.matrix), ("E", problem.E.matrix), ("B", problem.B), ("R", problem.R)):
            if np.iscomplexobj(data) and np.any(np.imag(data.toarray() if sp.issparse(data) else data) != 0):
                report.realness_violations.append(name)

    if report.is_hermitian:
        _, S = hermitian_eig(problem.R, tol=np.inf)
        cutoff = Tolerances.RANK_TRUNCATE * (np.abs(S).max() if S.size else 0.0)
        report.inertia = (
            int(np.count_nonzero(S > cutoff)),
            int(np.count_nonzero(S < -cutoff)),
            int(np.count_nonzero(np.abs(S) <= cutoff)),
        )

    if check_stability and problem.n <= dense_cap:
        spectrum = pencil_eigenvalues(problem.A.to_dense(), problem.E.to_dense(), cap=dense_cap)
        finite = spectrum.finite()
        report.infinite_eigenvalues = int(np.count_nonzero(spectrum.infinite))
        report.max_real_eigenvalue = float(finite.real.max()) if finite.size else None
        report.stability_checked = True

    return report


def rank_truncate(
    B: np.ndarray, R: np.ndarray, tol: float = Tolerances.RANK_TRUNCATE
) -> tuple[np.ndarray, np.ndarray]:
    """Drop the numerically singular part of R, keeping B R B^H.

    Diagonalizes R = T S T^H and keeps the eigenpairs with |s| > tol*max|s|,
    so the result is B_hat = B T_k with invertible diagonal R_hat = S_k.

    Raises:
        InputError: If R is not Hermitian or tol is negative
        ZeroConstantTermError: If R vanishes, in which case X = 0
    """
    if tol < 0:
        raise InputError(f"tol must be nonnegative, got {tol}")
    T, S = hermitian_eig(R)
    largest = float(np.abs(S).max()) if S.size else 0.0
    if largest == 0.0:
        raise ZeroConstantTermError("Zero constant term: R vanishes, so the solution is X = 0")

    keep = np.abs(S) > tol * largest
    B_hat = np.asarray(B @ T[:, keep])
    R_hat = np.diag(S[keep])
    return B_hat, R_hat


def truncate_constant_term(problem: LyapunovProblem, tol: float = Tolerances.RANK_TRUNCATE) -> LyapunovProblem:
    """Problem with an invertible center, as the tangential iteration requires."""
    B_hat, R_hat = rank_truncate(problem.B, problem.R, tol)
    if B_hat.shape[1] < problem.m:
        logger.info(f"Rank truncation reduced the constant term from m={problem.m} to m={B_hat.shape[1]}")
    if problem.is_real:
        B_hat, R_hat = B_hat.real, R_hat.real
    return problem.with_constant_term(B_hat, R_hat)


@dataclass(frozen=True)
class SpectrumSpec:
    """Eigenvalue region of a synthetic pencil.

    Real parts are drawn from [re_min, re_max]; a fraction ``complex_fraction``
    of the eigenvalues is non-real with imaginary part magnitude up to ``imag_max``.
    """

    re_min: float = -5.0
    re_max: float = -0.5
    imag_max: float = 0.5
    complex_fraction: float = 0.2
    seed: int = 0
    condition: float = 2.0

    def check(self) -> None:
        """Raise InputError when the region is empty or the parameters are out of range."""
        if not self.re_min <= self.re_max < 0:
            raise InputError(
                f"Real-part interval [{self.re_min}, {self.re_max}] must be non-empty and strictly negative"
            )
        if not 0.0 <= self.complex_fraction <= 1.0:
            raise InputError(f"complex_fraction must lie in [0, 1], got {self.complex_fraction}")
        if self.imag_max < 0:
            raise InputError(f"imag_max must be nonnegative, got {self.imag_max}")
        if self.complex_fraction > 0 and self.imag_max == 0:
            raise InputError("Complex eigenvalues requested but imag_max is 0")
        if self.condition < 1:
            raise InputError(f"condition must be at least 1, got {self.condition}")


def _random_unitary(rng: np.random.Generator, size: int, complex_valued: bool) -> np.ndarray:
    G = rng.standard_normal((size, size))
    if complex_valued:
        G = G + 1j * rng.standard_normal((size, size))
    Q, Rq = np.linalg.qr(G)
    return Q * (np.diag(Rq) / np.abs(np.diag(Rq)))


def _stable_core(n: int, spec: SpectrumSpec, rng: np.random.Generator, complex_valued: bool) -> np.ndarray:
    """Block diagonal matrix carrying the requested eigenvalues."""
    if complex_valued:
        real_parts = rng.uniform(spec.re_min, spec.re_max, n)
        imag_parts = np.zeros(n)
        n_complex = int(round(spec.complex_fraction * n))
        imag_parts[:n_complex] = rng.uniform(-spec.imag_max, spec.imag_max, n_complex)
        return np.diag(real_parts + 1j * imag_parts)

    core = np.zeros((n, n))
    n_pairs = min(int(round(spec.complex_fraction * n / 2)), n // 2)
    for k in range(n_pairs):
        a = rng.uniform(spec.re_min, spec.re_max)
        b = rng.uniform(0.1 * spec.imag_max, spec.imag_max)
        i = 2 * k
        core[i : i + 2, i : i + 2] = [[a, b], [-b, a]]
    for i in range(2 * n_pairs, n):
        core[i, i] = rng.uniform(spec.re_min, spec.re_max)
    return core


def synth_problem(
    n: int,
    m: int,
    spec: SpectrumSpec | None = None,
    r_negative: int = 0,
    arithmetic: str | Arithmetic = Arithmetic.REAL,
) -> LyapunovProblem:
    """Random problem with a Hurwitz pencil and an R of prescribed inertia.

    The pencil is A = E T C T^-1 with a block diagonal stable core C, a random
    transform T of condition ``spec.condition`` and a random SPD E, so the
    eigenvalues of (A, E) are exactly those of C. R has ``r_negative`` negative
    and ``m - r_negative`` positive eigenvalues.

    Raises:
        InputError: On an infeasible spectrum or out-of-range sizes
    """
    spec = spec or SpectrumSpec()
    spec.check()
    resolved = Arithmetic.REAL if arithmetic == "auto" else Arithmetic.resolve(arithmetic)
    if n < 1 or not 1 <= m <= n:
        raise InputError(f"Need n >= 1 and 1 <= m <= n, got n={n}, m={m}")
    if not 0 <= r_negative <= m:
        raise InputError(f"r_negative must lie in [0, m={m}], got {r_negative}")

    complex_valued = resolved is Arithmetic.COMPLEX
    rng = np.random.default_rng(spec.seed)

    core = _stable_core(n, spec, rng, complex_valued)
    singular_values = rng.permutation(np.logspace(0.0, np.log10(spec.condition), n))
    Q1 = _random_unitary(rng, n, complex_valued)
    Q2 = _random_unitary(rng, n, complex_valued)
    T = (Q1 * singular_values) @ Q2
    T_inv = (Q2.conj().T / singular_values) @ Q1.conj().T

    Qe = _random_unitary(rng, n, False)
    E = (Qe * rng.uniform(1.0, 2.0, n)) @ Qe.T
    E = (E + E.T) / 2
    A = E @ (T @ core @ T_inv)

    B = rng.standard_normal((n, m))
    if complex_valued:
        B = B + 1j * rng.standard_normal((n, m))

    signs = np.ones(m)
    signs[:r_negative] = -1.0
    Qr = _random_unitary(rng, m, complex_valued)
    R = (Qr * (signs * rng.uniform(0.5, 2.0, m))) @ Qr.conj().T
    R = (R + R.conj().T) / 2

    return LyapunovProblem.create(
        A,
        B,
        E=E,
        R=R,
        arithmetic=resolved,
        name=f"synthetic-n{n}-m{m}-seed{spec.seed}",
        provenance=f"synthetic {resolved.value} r_negative={r_negative} {spec}",
    )


def random_couplings(n: int, count: int, seed: int, scale: float = 1.0, real: bool = True) -> list[np.ndarray]:
    """Dense coupling matrices N_k with spectral norm ``scale``."""
    rng = np.random.default_rng(seed)
    couplings = []
    for _ in range(count):
        N = rng.standard_normal((n, n))
        if not real:
            N = N + 1j * rng.standard_normal((n, n))
        couplings.append(scale * N / np.linalg.norm(N, 2))
    return couplings


def bilinear_constant_term(
    problem: LyapunovProblem,
    couplings: Sequence[Any],
    L: np.ndarray,
    D: np.ndarray,
) -> LyapunovProblem:
    """Fold sum_k N_k (L D L^H) N_k^H into the constant term.

    Returns the problem with B = [B, N_1 L, ..., N_q L] and
    R = blkdiag(R, D, ..., D), a high-rank indefinite constant term.
    """
    if L.shape[0] != problem.n or D.shape != (L.shape[1], L.shape[1]):
        raise InputError(f"Factor shapes {L.shape} and {D.shape} do not fit n={problem.n}")
    blocks = [problem.B]
    for k, N in enumerate(couplings):
        N_op = CoefficientOperator.wrap(N, f"N{k + 1}")
        if N_op.n != problem.n:
            raise InputError(f"Coupling N{k + 1} is {N_op.n}x{N_op.n}, expected n={problem.n}")
        blocks.append(N_op @ L)
    B_tilde = np.hstack(blocks)
    R_tilde = spla.block_diag(problem.R, *([D] * len(couplings)))
    if problem.is_real:
        B_tilde, R_tilde = B_tilde.real, R_tilde.real
    if B_tilde.shape[1] > problem.n:
        raise InputError(f"Concatenated constant term has {B_tilde.shape[1]} columns, more than n={problem.n}")
    return LyapunovProblem.create(
        problem.A.matrix,
        B_tilde,
        E=problem.E.matrix,
        R=R_tilde,
        arithmetic=problem.arithmetic,
        name=f"{problem.name}-bilinear{len(couplings)}",
        provenance=f"{problem.provenance}; concatenated {len(couplings)} coupling term(s)",
    )


def compress_ldl(
    L: np.ndarray, D: np.ndarray, rank: int | None = None, tol: float = 1e-10
) -> tuple[np.ndarray, np.ndarray]:
    """Shorter factors of L D L^H: thin QR of L, then the dominant eigenpairs of T D T^H.

    Keeps eigenvalues above ``tol`` times the largest in magnitude, at most ``rank`` of them.
    """
    if L.shape[1] == 0:
        return L, D
    Q, T = spla.qr(L, mode="economic")
    core = T @ D @ T.conj().T
    S, U = spla.eigh((core + core.conj().T) / 2)
    order = np.argsort(-np.abs(S), kind="stable")
    keep = [i for i in order if abs(S[i]) > tol * abs(S[order[0]])][:rank]
    return Q @ U[:, keep], np.diag(S[keep])


def synth_bilinear_problem(
    n: int,
    m: int,
    spec: SpectrumSpec | None = None,
    r_negative: int = 0,
    n_terms: int = 1,
    rank: int = 28,
    scale: float = 0.5,
    arithmetic: str | Arithmetic = Arithmetic.REAL,
    tol: float = 1e-10,
) -> LyapunovProblem:
    """Synthetic problem whose constant term carries coupling terms N_k X0 N_k^H.

    X0 solves the base problem to ``tol`` by block ADI and is compressed to
    ``rank`` columns before the couplings are applied, so the new constant term
    has m + n_terms * rank columns at most. The compressed factors are
    rescaled to L |S|^(1/4) and sign(S) |S|^(1/2), which leaves X0 unchanged
    and makes the norm of every coupling column grow with its weight in X0.
    """
    from tadi.adi_block import run_block_adi
    from tadi.shift_selector import ProjectionShiftSource

    if n_terms < 1 or rank < 1:
        raise InputError(f"n_terms and rank must be positive, got {n_terms} and {rank}")
    base = synth_problem(n, m, spec, r_negative, arithmetic)
    factors, trace = run_block_adi(base, ProjectionShiftSource(), tol=tol, max_cols=n)
    if not trace.converged:
        logger.warning(f"Base solve for the coupling terms stopped at residual {trace.final_residual:.3e}")
    L, D = compress_ldl(factors.L, factors.D, rank)
    weights = np.diag(D).real
    L = L * np.abs(weights) ** 0.25
    D = np.diag(np.sign(weights) * np.sqrt(np.abs(weights)))
    seed = (spec or SpectrumSpec()).seed
    couplings = random_couplings(n, n_terms, seed + 1, scale=scale, real=base.is_real)
    return bilinear_constant_term(base, couplings, L, D)


def first_order_from_second_order(
    M: Any, D: Any, K: Any, C: Any, R: Any | None = None, name: str = "second-order"
) -> LyapunovProblem:
    """First-order pencil of a damped second-order system with output matrix C.

    A = [[0, -K], [I, -D]], E = blkdiag(I, M), B = [C^T; 0].
    """
    M, D, K = (sp.csc_matrix(X) for X in (M, D, K))
    q = M.shape[0]
    if any(X.shape != (q, q) for X in (D, K)):
        raise InputError(f"M, D and K must share the shape {(q, q)}")
    C_arr = np.asarray(C.toarray() if sp.issparse(C) else C)
    if C_arr.ndim == 1:
        C_arr = C_arr[np.newaxis, :]
    if C_arr.shape[1] != q:
        raise InputError(f"C must have {q} columns, got shape {C_arr.shape}")

    identity = sp.identity(q, format="csc")
    A = sp.bmat([[None, -K], [identity, -D]], format="csc")
    E = sp.block_diag((identity, M), format="csc")
    B = np.vstack([C_arr.T, np.zeros((q, C_arr.shape[0]), dtype=C_arr.dtype)])
    return LyapunovProblem.create(A, B, E=E, R=R, name=name, provenance="first-order form of a second-order system")


def _read_market(path: str | Path, label: str) -> Any:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{label} file not found: {path}")
    try:
        data = scipy.io.mmread(str(path))
    except Exception as e:
        raise InputError(f"Cannot parse {label} file {path}: {e}") from e
    if sp.issparse(data):
        return sp.csc_matrix(data)
    return np.asarray(data)


def _dense(data: Any) -> np.ndarray:
    return np.asarray(data.toarray() if sp.issparse(data) else data)


def load_matrix_market(
    paths: Mapping[str, str | Path | None],
    observability: bool = False,
    arithmetic: str | Arithmetic = "auto",
) -> LyapunovProblem:
    """Read a problem from Matrix Market files.

    Args:
        paths: Mapping with keys 'A' and 'B' (required) and 'E', 'R' (optional)
        observability: Use A^T, E^T and read the B file as an output matrix C (p x n),
            giving the observability Gramian equation
        arithmetic: 'auto', 'real' or 'complex'

    Returns:
        The problem; a missing E is the identity and a missing R is I_m

    Raises:
        InputError: If a file is missing, unparsable or has mismatching dimensions
    """
    if not paths.get("A") or not paths.get("B"):
        raise InputError("Matrix Market input needs at least the A and B files")

    A = _read_market(paths["A"], "A")  # type: ignore[arg-type]
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"A file {paths['A']} holds a {A.shape} matrix, expected square")
    n = A.shape[0]

    E = None
    if paths.get("E"):
        E = _read_market(paths["E"], "E")  # type: ignore[arg-type]
        if E.shape != (n, n):
            raise InputError(f"Dimension mismatch: E file {paths['E']} is {E.shape}, A is {(n, n)}")

    B = _dense(_read_market(paths["B"], "B"))  # type: ignore[arg-type]
    if observability:
        if B.shape[-1] != n:
            raise InputError(f"Dimension mismatch: C file {paths['B']} is {B.shape}, expected {n} columns")
        B = B.T
        A = A.T.tocsc() if sp.issparse(A) else A.T
        if E is not None:
            E = E.T.tocsc() if sp.issparse(E) else E.T
    elif B.shape[0] != n:
        raise InputError(f"Dimension mismatch: B file {paths['B']} has {B.shape[0]} rows, A is {n}x{n}")

    R = None
    if paths.get("R"):
        R = _dense(_read_market(paths["R"], "R"))  # type: ignore[arg-type]
        m = B.shape[1] if B.ndim == 2 else 1
        if R.shape != (m, m):
            raise InputError(f"Dimension mismatch: R file {paths['R']} is {R.shape}, B has {m} columns")

    name = Path(str(paths["A"])).stem
    return LyapunovProblem.create(
        A,
        B,
        E=E,
        R=R,
        arithmetic=arithmetic,
        name=name,
        provenance="matrix market" + (" (observability)" if observability else ""),
    )


def load_second_order(paths: Mapping[str, str | Path | None]) -> LyapunovProblem:
    """Read M, D, K, C (and optionally R) and build the first-order problem."""
    missing = [key for key in ("M", "D", "K", "C") if not paths.get(key)]
    if missing:
        raise InputError(f"Second-order input is missing the {', '.join(missing)} file(s)")
    M, D, K, C = (_read_market(paths[key], key) for key in ("M", "D", "K", "C"))  # type: ignore[arg-type]
    R = _dense(_read_market(paths["R"], "R")) if paths.get("R") else None  # type: ignore[arg-type]
    return first_order_from_second_order(M, D, K, _dense(C), R=R, name=Path(str(paths["M"])).stem)


def save_matrix_market(problem: LyapunovProblem, directory: str | Path) -> dict[str, Path]:
    """Write A, E, B, R to ``directory`` with 17 significant digits."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = {}
    for label, data in (("A", problem.A.matrix), ("E", problem.E.matrix), ("B", problem.B), ("R", problem.R)):
        target = directory / f"{label}.mtx"
        scipy.io.mmwrite(
            str(target),
            data,
            comment=f"{problem.name} {label}",
            precision=Utility.TEXT_PRECISION,
            symmetry="general",
        )
        written[label] = target
    logger.info(f"Wrote problem {problem.name} to {directory}")
    return written
