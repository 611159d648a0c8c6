"""Convergence traces: per-iteration records, versioned CSV files and comparisons."""

from __future__ import annotations

import io
import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from tadi.constants import TraceFormat
from tadi.errors import InputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TraceRecord:
    """One completed ADI step (or conjugate pair)."""

    iteration: int
    columns: int
    shift_re: float
    shift_im: float
    direction: int
    residual: float
    solves: int
    wall_time: float


@dataclass
class ConvergenceTrace:
    """History of a run plus the shift pools it consumed."""

    variant: str = "block"
    initial_norm: float = 0.0
    records: list[TraceRecord] = field(default_factory=list)
    pools: list[tuple[complex, ...]] = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""

    def append(self, record: TraceRecord) -> None:
        if self.records:
            last = self.records[-1]
            if record.columns < last.columns or record.solves < last.solves:
                raise ValueError("Trace columns and solve counts must be non-decreasing")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.records])

    @property
    def columns(self) -> np.ndarray:
        return np.array([r.columns for r in self.records], dtype=int)

    @property
    def final_residual(self) -> float:
        if self.records:
            return self.records[-1].residual
        return 0.0 if self.initial_norm == 0.0 else 1.0

    @property
    def total_solves(self) -> int:
        return self.records[-1].solves if self.records else 0

    @property
    def runtime(self) -> float:
        return self.records[-1].wall_time if self.records else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.records], columns=TraceFormat.COLUMNS)

    def write_csv(self, path: str | Path) -> Path:
        """Write the versioned CSV: a header comment line, then the fixed columns."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        body = self.to_frame().to_csv(index=False, float_format=TraceFormat.FLOAT_FORMAT, lineterminator="\n")
        path.write_text(f"{TraceFormat.HEADER}\n{body}", encoding="utf-8")
        logger.debug(f"Wrote {len(self)} trace rows to {path}")
        return path


def read_trace(path: str | Path) -> pd.DataFrame:
    """Load a trace CSV, checking the version header and the column set.

    Raises:
        InputError: On a missing file or a schema mismatch
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"Trace file not found: {path}")
    text = path.read_text(encoding="utf-8")
    header, _, body = text.partition("\n")
    if header.strip() != TraceFormat.HEADER:
        raise InputError(f"Schema mismatch in {path}: expected header '{TraceFormat.HEADER}', got '{header.strip()}'")
    try:
        frame = pd.read_csv(io.StringIO(body))
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"Schema mismatch in {path}: {e}") from e
    if list(frame.columns) != TraceFormat.COLUMNS:
        raise InputError(f"Schema mismatch in {path}: columns {list(frame.columns)} != {TraceFormat.COLUMNS}")
    return frame


def default_levels(frames: Sequence[pd.DataFrame], tol: float | None = None) -> list[float]:
    """Decades 1e-1, 1e-2, ... down to the smallest residual reached, plus ``tol``."""
    smallest = min((float(f["residual"].min()) for f in frames if len(f)), default=1.0)
    smallest = max(smallest, np.finfo(float).tiny)
    exponent = int(np.floor(np.log10(smallest))) if smallest < 1 else -1
    levels = [10.0**-k for k in range(1, max(1, -exponent) + 1)]
    if tol is not None and tol not in levels:
        levels.append(tol)
    return sorted(set(levels), reverse=True)


def columns_at_level(frame: pd.DataFrame, level: float) -> float:
    """First column count at which the residual is at or below ``level``; NaN if never."""
    reached = frame.loc[frame["residual"] <= level, "columns"]
    return float(reached.iloc[0]) if len(reached) else float("nan")


def compare_traces(
    frames: Sequence[pd.DataFrame],
    labels: Sequence[str],
    levels: Sequence[float] | None = None,
) -> pd.DataFrame:
    """Column counts per residual level and their ratio against the first trace.

    Returns:
        One row per level with ``<label>`` and ``<label>/<first>`` columns;
        unreached levels are NaN
    """
    if len(frames) < 2:
        raise InputError("Comparison needs at least two traces")
    if len(frames) != len(labels):
        raise InputError("One label per trace is required")
    levels = list(levels) if levels is not None else default_levels(frames)

    reference = labels[0]
    rows = []
    for level in levels:
        row: dict[str, float] = {"level": level}
        counts = [columns_at_level(frame, level) for frame in frames]
        for label, count in zip(labels, counts, strict=True):
            row[label] = count
        for label, count in zip(labels[1:], counts[1:], strict=True):
            valid = not np.isnan(counts[0]) and counts[0] > 0
            row[f"{label}/{reference}"] = count / counts[0] if valid else float("nan")
        rows.append(row)
    return pd.DataFrame(rows)
