"""Configuration loading for tadi.

Handles environment variable and .tadi.env file precedence for application settings,
and reads the flat ``section.key=value`` run-configuration files.
"""

import os
from pathlib import Path
from typing import TypedDict

from dotenv import dotenv_values, load_dotenv

from tadi.constants import EnvDefaults, Logging
from tadi.errors import ConfigError
from tadi.utils import parse_bool

RUN_SECTIONS = ("problem", "solver", "shifts", "directions", "output")


class TadiEnvConfig(TypedDict, total=False):
    """Environment-level settings; run parameters live in RunConfig."""

    log_level: str
    output_dir: str
    max_workers: int | None
    write_factors: bool


def validate_config(config: TadiEnvConfig) -> None:
    """Validate configuration values at load time.

    Args:
        config: Configuration dictionary to validate

    Raises:
        ConfigError: If any configuration value is invalid
    """
    level = config.get("log_level")
    if level is not None and level.upper() not in Logging.LEVELS:
        raise ConfigError(f"log_level must be one of {', '.join(Logging.LEVELS)}, got {level}")

    workers = config.get("max_workers")
    if workers is not None and workers < 1:
        raise ConfigError(f"max_workers must be positive, got {workers}")

    if not config.get("output_dir"):
        raise ConfigError("output_dir must not be empty")


def load_config() -> TadiEnvConfig:
    """Load configuration from $HOME/.tadi.env, then ./.tadi.env, then environment variables."""
    user_config = Path.home() / ".tadi.env"
    if user_config.exists():
        load_dotenv(user_config)

    project_env = Path(".tadi.env")
    if project_env.exists():
        load_dotenv(project_env, override=True)

    workers_raw = os.getenv("TADI_MAX_WORKERS")
    try:
        max_workers = int(workers_raw) if workers_raw else None
    except ValueError as e:
        raise ConfigError(f"TADI_MAX_WORKERS must be an integer, got {workers_raw}") from e

    config: TadiEnvConfig = {
        "log_level": os.getenv("TADI_LOG_LEVEL", Logging.DEFAULT_LEVEL),
        "output_dir": os.getenv("TADI_OUTPUT_DIR", EnvDefaults.OUTPUT_DIR),
        "max_workers": max_workers,
        "write_factors": parse_bool(os.getenv("TADI_WRITE_FACTORS", str(EnvDefaults.WRITE_FACTORS))),
    }

    validate_config(config)
    return config


def split_key(key: str) -> tuple[str, str]:
    """Split ``section.name`` into its parts, rejecting unknown sections."""
    section, dot, name = key.strip().partition(".")
    if not dot or not name or section not in RUN_SECTIONS:
        raise ConfigError(
            f"Malformed configuration key '{key}'",
            suggestion=f"Keys look like 'section.name' with section in: {', '.join(RUN_SECTIONS)}",
        )
    return section, name


def parse_run_file(path: str | Path) -> dict[str, str]:
    """Read a flat key=value run-configuration file.

    Lines starting with ``#`` are comments. Every key must carry one of the
    known section prefixes.

    Args:
        path: Location of the file

    Returns:
        Mapping of ``section.name`` to the raw string value

    Raises:
        ConfigError: If the file is missing or holds a malformed key
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Configuration file not found: {path}")

    values: dict[str, str] = {}
    for key, value in dotenv_values(path).items():
        split_key(key)
        if value is None:
            raise ConfigError(f"Configuration key '{key}' in {path} has no value")
        values[key.strip()] = value.strip()
    return values


def parse_overrides(pairs: tuple[str, ...] | list[str]) -> dict[str, str]:
    """Parse repeated ``--set key=value`` command-line overrides."""
    values: dict[str, str] = {}
    for pair in pairs:
        key, eq, value = pair.partition("=")
        if not eq:
            raise ConfigError(f"Override '{pair}' is not of the form key=value")
        split_key(key)
        values[key.strip()] = value.strip()
    return values
