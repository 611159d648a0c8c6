"""tadi - low-rank ADI solvers for Lyapunov equations with indefinite right-hand sides."""

from tadi.__version__ import __version__
from tadi.adi_block import LDLFactors, run_block_adi
from tadi.adi_tangential import run_tangential_adi
from tadi.oracle import dense_lyap_solve
from tadi.problem import LyapunovProblem, synth_problem

__all__ = [
    "LDLFactors",
    "LyapunovProblem",
    "__version__",
    "dense_lyap_solve",
    "run_block_adi",
    "run_tangential_adi",
    "synth_problem",
]
