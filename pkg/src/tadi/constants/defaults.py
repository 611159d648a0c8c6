"""Default values for solver parameters, file formats and environment variables."""

import os


class SolverDefaults:
    """Defaults of the ADI drivers and numerical kernels."""

    TOL: float = 1e-12
    MAX_COLS_PER_RHS: int = 20  # max_cols = 20 * m
    DENSE_THRESHOLD: int = 600  # dense LU below this n, sparse LU otherwise
    SMALL_DENSE_CAP: int = 4096
    ORACLE_CAP: int = 256
    KRONECKER_CAP: int = 48  # n^2 x n^2 system stays below ~40 MB
    STABILITY_CAP: int = 1024  # validate() computes pencil eigenvalues densely up to this n
    FACTORIZATION_CACHE: int = 4


class ShiftDefaults:
    """Defaults of the projection shift generator."""

    ELL: int = 6
    K_MAX_PER_RHS: int = 4  # k_max = 4 * m
    SKETCH_RANK: int = 10
    EXHAUSTIVE_LIMIT: int = 12  # minimax subset search is exhaustive up to this many candidates


class DirectionDefaults:
    """Defaults of the tangential direction selection."""

    STRATEGY: str = "projected"
    STRATEGIES: list[str] = ["projected", "full", "residual", "cyclic", "random"]


class Tolerances:
    """Relative tolerances of the numerical kernels."""

    DROP: float = 1e-10  # orthonormal_basis, relative to the largest column norm
    RANK_TRUNCATE: float = 1e-12  # relative to max |s| of R
    HERMITIAN: float = 1e-13
    ISOTROPY: float = 1e-12  # |t^H R^-1 t| >= ISOTROPY * ||t||^2 * ||R^-1||
    INFINITE_EIGENVALUE: float = 1e-14  # |beta| <= this * |alpha| marks an infinite eigenvalue
    SINGULAR_PIVOT: float = 1e-14
    REAL_SHIFT: float = 1e-12  # |Im| below this * |alpha| counts as a real shift
    MINIMAX_TIE: float = 1e-12


class ExitCodes:
    """Process exit codes of the command-line interface."""

    CONVERGED: int = 0
    NOT_CONVERGED: int = 2
    INPUT_ERROR: int = 3
    NUMERICAL_FAILURE: int = 4


class TraceFormat:
    """Versioned convergence-trace CSV layout."""

    HEADER: str = "# tadi-trace v1"
    COLUMNS: list[str] = [
        "iteration",
        "columns",
        "shift_re",
        "shift_im",
        "direction",
        "residual",
        "solves",
        "wall_time",
    ]
    FLOAT_FORMAT: str = "%.17g"


class EnvDefaults:
    """Default values for environment variables."""

    OUTPUT_DIR: str = "tadi-runs"
    WRITE_FACTORS: bool = True


class Logging:
    """Logging configuration constants."""

    DEFAULT_LEVEL: str = "WARNING"
    LEVELS: list[str] = ["DEBUG", "INFO", "WARNING", "ERROR"]


class Utility:
    """General utility constants."""

    MAX_WORKERS: int = os.cpu_count() or 4  # parallel runs of a --repeat sweep
    TEXT_PRECISION: int = 17  # significant digits in Matrix Market and D files
