"""Error handling module for tadi."""

from __future__ import annotations

import logging
import sys
from collections.abc import Callable
from typing import TYPE_CHECKING, Any, TypeVar

from rich.console import Console

from tadi.constants import ExitCodes

if TYPE_CHECKING:
    from tadi.adi_block import LDLFactors
    from tadi.trace import ConvergenceTrace

logger = logging.getLogger(__name__)
console = Console()
T = TypeVar("T")


class TadiError(Exception):
    """Base exception class for all tadi errors."""

    exit_code = 1

    def __init__(
        self,
        message: str,
        details: str | None = None,
        suggestion: str | None = None,
        exit_code: int | None = None,
    ):
        """
        Initialize a new TadiError.

        Args:
            message: The error message
            details: Optional details about the error
            suggestion: Optional suggestion for the user
            exit_code: Optional exit code to override the class default
        """
        super().__init__(message)
        self.message = message
        self.details = details
        self.suggestion = suggestion
        if exit_code is not None:
            self.exit_code = exit_code


class InputError(TadiError):
    """Invalid input data: shapes, precondition violations, unparsable files."""

    exit_code = ExitCodes.INPUT_ERROR


class ConfigError(InputError):
    """Error related to configuration keys or values."""


class ZeroConstantTermError(InputError):
    """The constant term B R B^H vanishes, so the solution is X = 0."""


class NumericalError(TadiError):
    """A numerical kernel failed on otherwise valid input."""

    exit_code = ExitCodes.NUMERICAL_FAILURE


class SingularShiftError(NumericalError):
    """The shifted matrix A + alpha E is singular to working precision."""

    def __init__(self, shift: complex, details: str | None = None):
        super().__init__(
            f"Singular shift: A + ({shift:.6g})E is numerically singular",
            details=details,
            suggestion="The shift coincides with a generalized eigenvalue; use a different shift pool.",
        )
        self.shift = shift


class UnstablePencilError(NumericalError):
    """The pencil is not Hurwitz or E is singular, so no unique solution exists."""


class SolverAbortedError(NumericalError):
    """An ADI run was aborted; the partial result is attached."""

    def __init__(
        self,
        message: str,
        factors: LDLFactors | None = None,
        trace: ConvergenceTrace | None = None,
        details: str | None = None,
        suggestion: str | None = None,
    ):
        super().__init__(message, details=details, suggestion=suggestion)
        self.factors = factors
        self.trace = trace


class NoValidShiftsError(SolverAbortedError):
    """Shift generation produced no shift in the open left half-plane."""


class IsotropicDirectionError(SolverAbortedError):
    """The tangential direction satisfies t^H R^{-1} t = 0, so the update is undefined."""


def handle_error(error: Exception, exit_program: bool = False, quiet: bool = False) -> None:
    """Handle an error with proper logging and user feedback.

    Args:
        error: The error to handle
        exit_program: If True, exit the program after handling the error
        quiet: If True, suppress console output
    """
    logger.error(f"Error: {error}")

    if isinstance(error, SolverAbortedError):
        logger.error("ADI run aborted; the partial result is attached to the error.")
    elif isinstance(error, NumericalError):
        logger.error("Numerical failure. Check the pencil and the shift parameters.")
    elif isinstance(error, InputError):
        logger.error("Invalid input. Check problem files and configuration.")
    else:
        logger.error("An unexpected error occurred.")

    if not quiet:
        console.print(format_error_for_user(error), style="red")

    if exit_program:
        logger.error("Exiting program due to error.")
        sys.exit(error.exit_code if isinstance(error, TadiError) else 1)


def format_error_for_user(error: Exception) -> str:
    """
    Format an error message for display to the user.

    Args:
        error: The exception to format

    Returns:
        A user-friendly error message with remediation steps if applicable
    """
    base_message = str(error)
    if isinstance(error, TadiError) and error.details:
        base_message = f"{base_message}\n{error.details}"
    if isinstance(error, TadiError) and error.suggestion:
        return f"{base_message}\n\n{error.suggestion}"

    remediation_steps: dict[type[TadiError], str] = {
        ConfigError: "Please check the configuration file keys and command-line flags.",
        ZeroConstantTermError: "The constant term is zero; the solution is X = 0.",
        InputError: "Please check the input matrices and their dimensions.",
        NoValidShiftsError: "Try a larger projection space (shifts.k_max) or fixed shifts.",
        IsotropicDirectionError: "Use eigenvector directions instead of general directions.",
        NumericalError: "Please check that the pencil is Hurwitz and E is invertible.",
    }

    for error_class, steps in remediation_steps.items():
        if isinstance(error, error_class):
            return f"{base_message}\n\n{steps}"

    return f"{base_message}\n\nIf this issue persists, please report it as a bug."


def with_error_handling(
    error_type: type[TadiError], stage: str, quiet: bool = False, exit_on_error: bool = True
) -> Callable[[Callable[..., T]], Callable[..., T | None]]:
    """
    A decorator that wraps one stage of a run with standardized error handling.

    tadi errors keep their own class (and exit code) and only get the stage name
    prepended; anything else is converted to ``error_type``.

    Args:
        error_type: The error type to raise for foreign exceptions
        stage: Stage name shown to the user ("problem", "solver", "output")
        quiet: If True, suppress console output
        exit_on_error: If True, exit the program on error

    Returns:
        A decorator function that handles errors for the wrapped function
    """

    def decorator(func: Callable[..., T]) -> Callable[..., T | None]:
        def wrapper(*args: Any, **kwargs: Any) -> T | None:
            try:
                return func(*args, **kwargs)
            except TadiError as e:
                e.message = f"[{stage}] {e.message}"
                e.args = (e.message,)
                handle_error(e, quiet=quiet, exit_program=exit_on_error)
                if not exit_on_error:
                    raise
                return None
            except Exception as e:
                specific_error = error_type(f"[{stage}] {e}")
                handle_error(specific_error, quiet=quiet, exit_program=exit_on_error)
                if not exit_on_error:
                    raise specific_error from e
                return None

        return wrapper

    return decorator
