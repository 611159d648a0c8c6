"""CLI entry point for tadi.

Defines the Click-based command-line interface and delegates execution to the workflows in main.
"""

import functools
import logging
import sys
from collections.abc import Callable
from typing import Any

import click
from rich.console import Console

from tadi import __version__
from tadi.config import TadiEnvConfig, load_config, parse_overrides, parse_run_file
from tadi.config_cli import config as config_cli
from tadi.constants import DirectionDefaults, ExitCodes
from tadi.errors import ConfigError
from tadi.main import compare_workflow, gen_workflow, oracle_workflow, solve_workflow
from tadi.presets import PRESETS, get_preset
from tadi.run_config import RunConfig, build_run_config
from tadi.utils import setup_logging

logger = logging.getLogger(__name__)
console = Console()

# flag name -> configuration key
FLAG_KEYS = {
    "source": "problem.source",
    "n": "problem.n",
    "m": "problem.m",
    "seed": "problem.seed",
    "variant": "solver.variant",
    "tol": "solver.tol",
    "max_cols": "solver.max_cols",
    "strategy": "directions.strategy",
    "shifts": "shifts.values",
    "output_dir": "output.dir",
}


class TadiGroup(click.Group):
    """Click group whose usage errors exit with the input-error code."""

    def main(self, *args: Any, **kwargs: Any) -> Any:
        kwargs["standalone_mode"] = False
        try:
            return super().main(*args, **kwargs)
        except click.UsageError as e:
            e.show()
            sys.exit(ExitCodes.INPUT_ERROR)
        except click.ClickException as e:
            e.show()
            sys.exit(e.exit_code)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(1)


def run_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by every command that builds a RunConfig."""

    @click.option("--config", "-c", "config_file", type=click.Path(dir_okay=False), help="Run configuration file")
    @click.option("--set", "-s", "overrides", multiple=True, help="Override a key: section.name=value (repeatable)")
    @click.option("--preset", "-p", type=click.Choice(sorted(PRESETS)), help="Start from a named experiment")
    @click.option(
        "--source", type=click.Choice(["synthetic", "matrix_market", "second_order", "scalar"]), help="Problem source"
    )
    @click.option("--n", "n", type=int, help="Synthetic problem size")
    @click.option("--m", "m", type=int, help="Columns of the constant term B")
    @click.option("--seed", type=int, help="Problem seed")
    @click.option("--variant", type=click.Choice(["block", "tangential"]), help="ADI variant")
    @click.option("--tol", type=float, help="Normalized residual tolerance")
    @click.option("--max-cols", "max_cols", type=int, help="Column limit of the factor L")
    @click.option(
        "--strategy",
        type=click.Choice(DirectionDefaults.STRATEGIES),
        help="Tangential direction strategy",
    )
    @click.option("--shifts", help="Fixed shifts, e.g. '-1,-2+3i' (sets shifts.kind=fixed)")
    @click.option("--output-dir", "-o", "output_dir", type=click.Path(file_okay=False), help="Output directory")
    @click.option("--quiet", "-q", is_flag=True, help="Suppress non-error output")
    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        return func(*args, **kwargs)

    return wrapper


def _env(ctx: click.Context) -> TadiEnvConfig:
    return ctx.ensure_object(dict)["env"]


def resolve_run_config(
    config_file: str | None,
    overrides: tuple[str, ...],
    preset: str | None,
    flags: dict[str, Any],
    env: TadiEnvConfig | None = None,
) -> RunConfig:
    """Merge preset, file, --set pairs and dedicated flags into a validated RunConfig.

    Settings from the environment (TADI_WRITE_FACTORS) sit below the preset.

    Raises:
        ConfigError: On a malformed key, an unknown preset or an invalid value
    """
    flat = parse_overrides(overrides)
    for flag, key in FLAG_KEYS.items():
        if flags.get(flag) is not None:
            flat[key] = flags[flag]
    if flags.get("shifts") is not None:
        flat["shifts.kind"] = "fixed"
    base = {"output.factors": str(env.get("write_factors", True)).lower()} if env else {}
    base.update(get_preset(preset) if preset else {})
    file_values = parse_run_file(config_file) if config_file else None
    return build_run_config(file_values, flat, base)


def _run_config_or_exit(ctx: click.Context, quiet: bool, **options: Any) -> RunConfig:
    setup_logging("ERROR" if quiet else _env(ctx)["log_level"])
    try:
        return resolve_run_config(
            options.pop("config_file"), options.pop("overrides"), options.pop("preset"), options, _env(ctx)
        )
    except ConfigError as e:
        console.print(f"[red]{e.message}[/red]")
        if e.details:
            console.print(e.details)
        if e.suggestion:
            console.print(e.suggestion)
        sys.exit(e.exit_code)


@click.group(cls=TadiGroup, invoke_without_command=True)
@click.option("--version", is_flag=True, help="Show the version of tadi")
@click.pass_context
def cli(ctx: click.Context, version: bool = False) -> None:
    """tadi - low-rank ADI solvers for Lyapunov equations with indefinite right-hand sides."""
    try:
        ctx.ensure_object(dict)["env"] = load_config()
    except ConfigError as e:
        console.print(f"[red]{e.message}[/red]")
        sys.exit(e.exit_code)

    if ctx.invoked_subcommand is None:
        if version:
            print(f"tadi version: {__version__}")
            sys.exit(0)
        console.print("Use 'tadi --help' to see available commands.")
        console.print("Main commands:")
        console.print("  solve    - Run block or tangential ADI on a problem")
        console.print("  compare  - Compare convergence traces")
        console.print("  oracle   - Dense reference solution of a small problem")
        console.print("  gen      - Write a synthetic problem as Matrix Market files")
        console.print("  config   - Manage settings and check run files")


cli.add_command(config_cli)


@cli.command()
@run_options
@click.option("--repeat", "-r", default=1, type=int, help="Independent runs with seeds seed..seed+N-1")
@click.pass_context
def solve(ctx: click.Context, quiet: bool = False, repeat: int = 1, **options: Any) -> None:
    """Solve the configured Lyapunov equation and write trace, summary and factors."""
    run_config = _run_config_or_exit(ctx, quiet, **options)
    logger.info("Starting solve workflow")
    env = _env(ctx)
    exit_code = solve_workflow(
        run_config,
        output_dir=run_config.output.dir or env["output_dir"],
        repeat=repeat,
        quiet=quiet,
        max_workers=env.get("max_workers"),
    )
    sys.exit(exit_code)


@cli.command()
@click.argument("traces", nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.option("--label", "-l", "labels", multiple=True, help="Label per trace (default: file or directory name)")
@click.option("--tol", type=float, help="Extra residual level to tabulate")
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write the table as CSV")
@click.option("--quiet", "-q", is_flag=True, help="Suppress non-error output")
@click.pass_context
def compare(
    ctx: click.Context,
    traces: tuple[str, ...],
    labels: tuple[str, ...] = (),
    tol: float | None = None,
    output: str | None = None,
    quiet: bool = False,
) -> None:
    """Columns needed by each TRACE to reach matched residual levels."""
    setup_logging("ERROR" if quiet else _env(ctx)["log_level"])
    exit_code = compare_workflow(traces, labels=labels or None, tol=tol, output=output, quiet=quiet)
    sys.exit(exit_code)


@cli.command()
@run_options
@click.option("--factors", "factors_dir", type=click.Path(file_okay=False), help="Directory with L.mtx and D.txt")
@click.option("--output", "output_file", type=click.Path(dir_okay=False), help="Write X as a Matrix Market file")
@click.pass_context
def oracle(
    ctx: click.Context,
    quiet: bool = False,
    factors_dir: str | None = None,
    output_file: str | None = None,
    **options: Any,
) -> None:
    """Dense reference solution of the configured problem (n <= 256)."""
    run_config = _run_config_or_exit(ctx, quiet, **options)
    sys.exit(oracle_workflow(run_config, factors_dir=factors_dir, output=output_file, quiet=quiet))


@cli.command()
@run_options
@click.argument("directory", type=click.Path(file_okay=False))
@click.pass_context
def gen(ctx: click.Context, directory: str, quiet: bool = False, **options: Any) -> None:
    """Write the configured problem to DIRECTORY as Matrix Market files."""
    run_config = _run_config_or_exit(ctx, quiet, **options)
    sys.exit(gen_workflow(run_config, directory, quiet=quiet))
