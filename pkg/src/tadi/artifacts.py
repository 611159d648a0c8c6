"""Run artifacts on disk: factor files and the JSON run summary."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import scipy.io
from pydantic import BaseModel, ConfigDict

from tadi.adi_block import LDLFactors
from tadi.constants import Utility
from tadi.errors import InputError
from tadi.trace import ConvergenceTrace

logger = logging.getLogger(__name__)

CENTER_HEADER = "# tadi-center v1"
FACTOR_FILE = "L.mtx"
CENTER_FILE = "D.txt"
TRACE_FILE = "trace.csv"
SUMMARY_FILE = "summary.json"


def write_factors(factors: LDLFactors, directory: str | Path) -> tuple[Path, Path]:
    """Write L as a Matrix Market array and D as a list of center blocks.

    ``D.txt`` starts with ``# tadi-center v1``; every block is introduced by
    ``# block <index> <width> <real|complex>`` and followed by its rows
    (complex blocks store the real part columns, then the imaginary part columns).
    """
    if factors.ncols == 0:
        raise InputError("Nothing to write: the factors have no columns")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    factor_path = directory / FACTOR_FILE
    scipy.io.mmwrite(
        str(factor_path),
        factors.L,
        comment=f"tadi L factor, {factors.ncols} columns",
        field="complex" if np.iscomplexobj(factors.L) else "real",
        precision=Utility.TEXT_PRECISION,
    )

    center_path = directory / CENTER_FILE
    fmt = f"%.{Utility.TEXT_PRECISION}g"
    with center_path.open("w", encoding="utf-8") as handle:
        handle.write(f"{CENTER_HEADER}\n")
        for index, center in enumerate(factors.centers, start=1):
            kind = "complex" if np.iscomplexobj(center) else "real"
            handle.write(f"# block {index} {center.shape[0]} {kind}\n")
            rows = np.hstack([center.real, center.imag]) if kind == "complex" else center
            np.savetxt(handle, np.atleast_2d(rows), fmt=fmt)
    logger.info(f"Wrote factors with {factors.ncols} columns to {directory}")
    return factor_path, center_path


def read_factors(directory: str | Path) -> LDLFactors:
    """Read factors written by :func:`write_factors`.

    Raises:
        InputError: If a file is missing or the block layout does not match L
    """
    directory = Path(directory)
    factor_path, center_path = directory / FACTOR_FILE, directory / CENTER_FILE
    for path in (factor_path, center_path):
        if not path.is_file():
            raise InputError(f"Factor file not found: {path}")

    L = np.asarray(scipy.io.mmread(str(factor_path)))
    lines = center_path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != CENTER_HEADER:
        raise InputError(f"Schema mismatch in {center_path}: expected header '{CENTER_HEADER}'")

    blocks: list[np.ndarray] = []
    centers: list[np.ndarray] = []
    offset = 0
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) != 5 or parts[:2] != ["#", "block"]:
            raise InputError(f"Malformed block header in {center_path}, line {i + 1}: {lines[i]!r}")
        width = int(parts[3])
        rows = np.loadtxt(lines[i + 1 : i + 1 + width], ndmin=2)
        center = rows[:, :width] + 1j * rows[:, width:] if parts[4] == "complex" else rows
        if center.shape != (width, width) or offset + width > L.shape[1]:
            raise InputError(f"Block {parts[2]} in {center_path} does not match the columns of L")
        blocks.append(L[:, offset : offset + width])
        centers.append(center)
        offset += width
        i += 1 + width
    if offset != L.shape[1]:
        raise InputError(f"Center blocks cover {offset} columns, L has {L.shape[1]}")
    return LDLFactors(L.shape[0], tuple(blocks), tuple(centers))


class RunSummary(BaseModel):
    """Outcome of one solve, written to ``summary.json``."""

    model_config = ConfigDict(frozen=True)

    problem: str
    n: int
    m: int
    variant: str
    strategy: str | None = None
    seed: int | None = None
    converged: bool
    stop_reason: str
    initial_norm: float
    final_residual: float
    iterations: int
    columns: int
    solves: int
    runtime: float
    exit_code: int

    @classmethod
    def from_run(
        cls,
        factors: LDLFactors,
        trace: ConvergenceTrace,
        problem: str,
        m: int,
        strategy: str | None = None,
        seed: int | None = None,
        exit_code: int = 0,
    ) -> RunSummary:
        return cls(
            problem=problem,
            n=factors.n,
            m=m,
            variant=trace.variant,
            strategy=strategy,
            seed=seed,
            converged=trace.converged,
            stop_reason=trace.stop_reason,
            initial_norm=trace.initial_norm,
            final_residual=trace.final_residual,
            iterations=len(trace),
            columns=factors.ncols,
            solves=trace.total_solves,
            runtime=trace.runtime,
            exit_code=exit_code,
        )

    def write(self, directory: str | Path) -> Path:
        path = Path(directory) / SUMMARY_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return path
