"""Run orchestration for tadi: solve, compare, oracle and gen workflows.

Every workflow returns a process exit code; errors are reported with the
stage that raised them ("problem", "solver", "output").
"""

import concurrent.futures
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
import scipy.io
from rich.console import Console
from rich.table import Table

from tadi.adi_block import LDLFactors, run_block_adi
from tadi.adi_tangential import run_tangential_adi
from tadi.artifacts import TRACE_FILE, RunSummary, read_factors, write_factors
from tadi.constants import EnvDefaults, ExitCodes, Utility
from tadi.errors import InputError, NumericalError, SolverAbortedError, TadiError, with_error_handling
from tadi.oracle import compare, dense_lyap_solve
from tadi.problem import (
    LyapunovProblem,
    SpectrumSpec,
    load_matrix_market,
    load_second_order,
    save_matrix_market,
    scalar_problem,
    synth_bilinear_problem,
    synth_problem,
)
from tadi.run_config import RunConfig
from tadi.shift_selector import FixedShiftSource, ProjectionShiftSource, ShiftSource
from tadi.trace import ConvergenceTrace, compare_traces, default_levels, read_trace
from tadi.utils import format_residual, print_message

logger = logging.getLogger(__name__)
console = Console()
T = TypeVar("T")


def _stage(name: str, func: Callable[..., T], error_type: type[TadiError], quiet: bool) -> Callable[..., T]:
    wrapped = with_error_handling(error_type, name, quiet=quiet, exit_on_error=False)(func)
    return wrapped  # type: ignore[return-value]


def build_problem(config: RunConfig) -> LyapunovProblem:
    """Instantiate the configured problem source."""
    p = config.problem
    if p.source == "scalar":
        return scalar_problem()
    if p.source == "matrix_market":
        paths = {"A": p.a, "B": p.b, "E": p.e, "R": p.r}
        return load_matrix_market(paths, observability=p.observability, arithmetic=p.arithmetic)
    if p.source == "second_order":
        paths = {"M": p.mass, "D": p.damping, "K": p.stiffness, "C": p.c, "R": p.r}
        return load_second_order(paths)

    spec = SpectrumSpec(
        re_min=p.re_min,
        re_max=p.re_max,
        imag_max=p.imag_max,
        complex_fraction=p.complex_fraction,
        seed=p.seed,
        condition=p.condition,
    )
    arithmetic = "real" if p.arithmetic == "auto" else p.arithmetic
    if p.bilinear_terms:
        return synth_bilinear_problem(
            p.n,
            p.m,
            spec,
            p.r_negative,
            n_terms=p.bilinear_terms,
            rank=p.bilinear_rank,
            scale=p.bilinear_scale,
            arithmetic=arithmetic,
        )
    return synth_problem(p.n, p.m, spec, p.r_negative, arithmetic)


def build_shift_source(config: RunConfig) -> ShiftSource:
    shifts = config.shifts
    if shifts.kind == "fixed":
        return FixedShiftSource(list(shifts.values))
    return ProjectionShiftSource(ell=shifts.ell, sketch_rank=shifts.sketch_rank)


def run_solver(config: RunConfig, problem: LyapunovProblem) -> tuple[LDLFactors, ConvergenceTrace]:
    """Dispatch to the configured ADI variant."""
    solver = config.solver
    source = build_shift_source(config)
    if solver.variant == "block":
        return run_block_adi(
            problem,
            source,
            tol=solver.tol,
            max_cols=solver.max_cols,
            norm=solver.norm,
            k_max=config.shifts.k_max,
            dense_threshold=solver.dense_threshold,
        )
    seed = config.directions.seed if config.directions.seed is not None else config.problem.seed
    return run_tangential_adi(
        problem,
        source,
        strategy=config.directions.strategy,
        tol=solver.tol,
        max_cols=solver.max_cols,
        norm=solver.norm,
        k_max=config.shifts.k_max,
        dense_threshold=solver.dense_threshold,
        seed=seed,
    )


@dataclass(frozen=True)
class RunResult:
    """One finished solve and where its artifacts went."""

    config: RunConfig
    summary: RunSummary
    output_dir: Path
    exit_code: int


def write_outputs(
    config: RunConfig,
    problem: LyapunovProblem,
    factors: LDLFactors,
    trace: ConvergenceTrace,
    output_dir: Path,
    exit_code: int,
) -> RunSummary:
    output_dir.mkdir(parents=True, exist_ok=True)
    trace.write_csv(output_dir / TRACE_FILE)
    strategy = config.directions.strategy if trace.variant == "tangential" else None
    summary = RunSummary.from_run(
        factors, trace, problem.name, problem.m, strategy=strategy, seed=config.problem.seed, exit_code=exit_code
    )
    summary.write(output_dir)
    if config.output.factors and factors.ncols:
        write_factors(factors, output_dir)
    return summary


def solve_once(config: RunConfig, output_dir: Path, quiet: bool = False) -> RunResult:
    """Build the problem, run the solver and write trace, summary and factors.

    Raises:
        TadiError: From any stage; an aborted solve still writes its partial trace
    """
    problem = _stage("problem", build_problem, InputError, quiet)(config)
    try:
        factors, trace = _stage("solver", run_solver, NumericalError, quiet)(config, problem)
    except SolverAbortedError as e:
        if e.trace is not None and e.factors is not None:
            _stage("output", write_outputs, InputError, quiet)(
                config, problem, e.factors, e.trace, output_dir, e.exit_code
            )
        raise

    exit_code = ExitCodes.CONVERGED if trace.converged else ExitCodes.NOT_CONVERGED
    summary = _stage("output", write_outputs, InputError, quiet)(config, problem, factors, trace, output_dir, exit_code)
    return RunResult(config, summary, output_dir, exit_code)


def _summary_table(results: Sequence[RunResult]) -> Table:
    table = Table(title="ADI runs")
    table.add_column("Problem", style="cyan")
    table.add_column("Variant", style="white")
    table.add_column("Converged", style="white")
    table.add_column("Iterations", justify="right")
    table.add_column("Columns", justify="right")
    table.add_column("Solves", justify="right")
    table.add_column("Residual", justify="right")
    table.add_column("Runtime [s]", justify="right")
    table.add_column("Output", style="dim")
    for result in results:
        s = result.summary
        variant = f"{s.variant} ({s.strategy})" if s.strategy else s.variant
        converged = "[green]yes[/green]" if s.converged else "[yellow]no[/yellow]"
        table.add_row(
            s.problem,
            variant,
            converged,
            str(s.iterations),
            str(s.columns),
            str(s.solves),
            format_residual(s.final_residual),
            f"{s.runtime:.2f}",
            str(result.output_dir),
        )
    return table


def solve_workflow(
    config: RunConfig,
    output_dir: str | Path | None = None,
    repeat: int = 1,
    quiet: bool = False,
    max_workers: int | None = None,
) -> int:
    """Execute one solve, or ``repeat`` independent solves with seeds seed..seed+repeat-1.

    Returns:
        The largest exit code over all runs
    """
    if repeat < 1:
        console.print(f"[red]--repeat must be positive, got {repeat}[/red]")
        return ExitCodes.INPUT_ERROR
    base_dir = Path(output_dir or config.output.dir or EnvDefaults.OUTPUT_DIR)
    if repeat == 1:
        jobs = [(config, base_dir)]
    else:
        seeds = [config.problem.seed + k for k in range(repeat)]
        jobs = [(config.with_seed(seed), base_dir / f"seed-{seed}") for seed in seeds]

    results: list[RunResult] = []
    codes: list[int] = []
    workers = min(repeat, max_workers or Utility.MAX_WORKERS)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_job = {executor.submit(solve_once, job_config, path, quiet): path for job_config, path in jobs}
        for future in concurrent.futures.as_completed(future_to_job):
            try:
                result = future.result()
            except TadiError as e:
                logger.debug(f"Run writing to {future_to_job[future]} failed: {e}")
                codes.append(e.exit_code)
                continue
            results.append(result)
            codes.append(result.exit_code)

    results.sort(key=lambda r: str(r.output_dir))
    if results and not quiet:
        console.print(_summary_table(results))
        for result in results:
            if result.exit_code == ExitCodes.NOT_CONVERGED:
                print_message(f"{result.summary.problem}: not converged ({result.summary.stop_reason})", "warning")
    return max(codes)


def _trace_labels(paths: Sequence[Path]) -> list[str]:
    stems = [path.stem for path in paths]
    if len(set(stems)) == len(stems):
        return stems
    return [path.parent.name or path.stem for path in paths]


def compare_workflow(
    paths: Sequence[str | Path],
    labels: Sequence[str] | None = None,
    tol: float | None = None,
    output: str | Path | None = None,
    quiet: bool = False,
) -> int:
    """Tabulate column counts at matched residual levels for two or more traces."""
    try:
        trace_paths = [Path(p) for p in paths]
        frames = [read_trace(p) for p in trace_paths]
        names = list(labels) if labels else _trace_labels(trace_paths)
        table = compare_traces(frames, names, default_levels(frames, tol))
    except TadiError as e:
        console.print(f"[red]{e.message}[/red]")
        return e.exit_code

    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(output, index=False, float_format="%.17g", na_rep="unreached", lineterminator="\n")
        logger.info(f"Wrote comparison table to {output}")

    if not quiet:
        rich_table = Table(title="Columns to reach each residual level")
        for column in table.columns:
            rich_table.add_column(str(column), justify="right")
        for _, row in table.iterrows():
            cells = [f"{row['level']:.0e}"]
            for column in table.columns[1:]:
                value = row[column]
                if np.isnan(value):
                    cells.append("[yellow]unreached[/yellow]")
                elif "/" in str(column):
                    cells.append(f"{value:.2f}")
                else:
                    cells.append(str(int(value)))
            rich_table.add_row(*cells)
        console.print(rich_table)
    return ExitCodes.CONVERGED


def oracle_workflow(
    config: RunConfig,
    factors_dir: str | Path | None = None,
    output: str | Path | None = None,
    quiet: bool = False,
) -> int:
    """Solve the configured problem densely; optionally score stored factors against it."""
    try:
        problem = _stage("problem", build_problem, InputError, quiet)(config)
        solution = _stage("solver", dense_lyap_solve, NumericalError, quiet)(problem)
        error = None
        if factors_dir is not None:
            factors = _stage("output", read_factors, InputError, quiet)(factors_dir)
            error = compare(factors, solution)
        if output is not None:
            _stage("output", scipy.io.mmwrite, InputError, quiet)(
                str(output), solution.X, precision=Utility.TEXT_PRECISION
            )
    except TadiError as e:
        return e.exit_code

    if not quiet:
        console.print(f"Dense solution of {problem.name} (n={problem.n}) by {solution.method}")
        console.print(f"Relative residual: {format_residual(solution.residual)}")
        if error is not None:
            console.print(f"Relative error of the stored factors: {error:.3e}")
    return ExitCodes.CONVERGED


def gen_workflow(config: RunConfig, directory: str | Path, quiet: bool = False) -> int:
    """Write the configured problem as Matrix Market files."""
    try:
        problem = _stage("problem", build_problem, InputError, quiet)(config)
        written: dict[str, Any] = _stage("output", save_matrix_market, InputError, quiet)(problem, directory)
    except TadiError as e:
        return e.exit_code
    if not quiet:
        for label, path in written.items():
            print_message(f"{label}: {path}", "success")
    return ExitCodes.CONVERGED
