"""CLI for managing tadi settings in $HOME/.tadi.env and checking run files."""

import os
import sys
from pathlib import Path

import click
from dotenv import dotenv_values, load_dotenv, set_key
from rich.console import Console
from rich.table import Table

from tadi.config import parse_run_file
from tadi.errors import ConfigError
from tadi.run_config import build_run_config

TADI_ENV_PATH = Path.home() / ".tadi.env"
console = Console()


@click.group()
def config() -> None:
    """Manage tadi settings and run configuration files."""
    pass


def _echo_env(path: Path) -> None:
    for key, value in sorted(dotenv_values(str(path)).items()):
        if value is not None:
            click.echo(f"  {key}={value}")


@config.command()
def show() -> None:
    """Show all current settings."""
    project_env_path = Path(".tadi.env")
    user_exists = TADI_ENV_PATH.exists()
    project_exists = project_env_path.exists()

    if user_exists:
        click.echo(f"User config ({TADI_ENV_PATH}):")
        _echo_env(TADI_ENV_PATH)
    else:
        click.echo("No $HOME/.tadi.env found.")

    if project_exists:
        if user_exists:
            click.echo("")
        click.echo("Project config (./.tadi.env):")
        _echo_env(project_env_path)
        click.echo("")
        click.echo("Note: Project-level .tadi.env overrides $HOME/.tadi.env values for any duplicated variables.")
    else:
        click.echo("No project-level .tadi.env found.")


@config.command()
@click.argument("key")
@click.argument("value")
def set(key: str, value: str) -> None:
    """Set a setting KEY to VALUE in $HOME/.tadi.env."""
    TADI_ENV_PATH.touch(exist_ok=True)
    set_key(str(TADI_ENV_PATH), key, value)
    click.echo(f"Set {key} in $HOME/.tadi.env")


@config.command()
@click.argument("key")
def get(key: str) -> None:
    """Get a setting by KEY."""
    load_dotenv(TADI_ENV_PATH, override=True)
    value = os.getenv(key)
    if value is None:
        click.echo(f"{key} not set.")
    else:
        click.echo(value)


@config.command()
@click.argument("key")
def unset(key: str) -> None:
    """Remove a setting KEY from $HOME/.tadi.env."""
    if not TADI_ENV_PATH.exists():
        click.echo("No $HOME/.tadi.env found.")
        return
    lines = TADI_ENV_PATH.read_text().splitlines()
    new_lines = [line for line in lines if not line.strip().startswith(f"{key}=")]
    TADI_ENV_PATH.write_text("\n".join(new_lines) + "\n")
    click.echo(f"Unset {key} in $HOME/.tadi.env")


@config.command()
@click.argument("path", type=click.Path(dir_okay=False))
def check(path: str) -> None:
    """Validate the run configuration FILE and print the resolved values."""
    try:
        run_config = build_run_config(parse_run_file(path))
    except ConfigError as e:
        console.print(f"[red]{e.message}[/red]")
        if e.details:
            console.print(e.details)
        sys.exit(e.exit_code)

    table = Table(title=f"Resolved configuration: {path}")
    table.add_column("Key", style="cyan")
    table.add_column("Value", style="white")
    for key, value in run_config.to_flat().items():
        table.add_row(key, str(value))
    console.print(table)
