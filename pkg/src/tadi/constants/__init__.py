"""Constants for the tadi project.

This package provides the default values used throughout tadi:

- defaults: solver, shift and direction defaults, numerical tolerances,
  exit codes, trace file format, environment defaults and logging

All constants are re-exported from this package.
"""

from tadi.constants.defaults import (
    DirectionDefaults,
    EnvDefaults,
    ExitCodes,
    Logging,
    ShiftDefaults,
    SolverDefaults,
    Tolerances,
    TraceFormat,
    Utility,
)

__all__ = [
    "DirectionDefaults",
    "EnvDefaults",
    "ExitCodes",
    "Logging",
    "ShiftDefaults",
    "SolverDefaults",
    "Tolerances",
    "TraceFormat",
    "Utility",
]
