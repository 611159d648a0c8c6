"""Validated run configuration built from flat ``section.key=value`` pairs."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from tadi.config import split_key
from tadi.constants import ShiftDefaults, SolverDefaults
from tadi.errors import ConfigError
from tadi.residual import NormKind

logger = logging.getLogger(__name__)


def _none_if_blank(value: Any) -> Any:
    if isinstance(value, str) and value.strip().lower() in ("", "none", "default"):
        return None
    return value


def parse_shift_list(value: Any) -> list[complex]:
    """Parse ``"-1, -2+3i, -0.5-1j"`` into complex shifts."""
    if value is None:
        return []
    if isinstance(value, str):
        items = [item.strip() for item in value.split(",") if item.strip()]
    else:
        items = list(value)
    shifts = []
    for item in items:
        if isinstance(item, str):
            text = item.replace(" ", "").replace("i", "j")
            try:
                item = complex(text)
            except ValueError as e:
                raise ValueError(f"'{item}' is not a complex number") from e
        shifts.append(complex(item))
    return shifts


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ProblemSection(_Section):
    source: Literal["synthetic", "matrix_market", "second_order", "scalar"] = "synthetic"
    n: int = Field(default=100, ge=1)
    m: int = Field(default=4, ge=1)
    r_negative: int = Field(default=0, ge=0)
    seed: int = 0
    re_min: float = -5.0
    re_max: float = -0.5
    imag_max: float = 0.5
    complex_fraction: float = Field(default=0.2, ge=0.0, le=1.0)
    condition: float = Field(default=2.0, ge=1.0)
    a: str | None = None
    e: str | None = None
    b: str | None = None
    r: str | None = None
    mass: str | None = None
    damping: str | None = None
    stiffness: str | None = None
    c: str | None = None
    observability: bool = False
    bilinear_terms: int = Field(default=0, ge=0)
    bilinear_rank: int = Field(default=28, ge=1)
    bilinear_scale: float = Field(default=0.5, gt=0.0)
    arithmetic: Literal["auto", "real", "complex"] = "auto"

    @field_validator("a", "e", "b", "r", "mass", "damping", "stiffness", "c", mode="before")
    @classmethod
    def blank_paths(cls, value: Any) -> Any:
        return _none_if_blank(value)

    @model_validator(mode="after")
    def check_source(self) -> ProblemSection:
        if self.source == "synthetic" and not self.m <= self.n:
            raise ValueError(f"m={self.m} exceeds n={self.n}")
        if self.source == "synthetic" and self.r_negative > self.m:
            raise ValueError(f"r_negative={self.r_negative} exceeds m={self.m}")
        if self.source == "matrix_market" and not (self.a and self.b):
            raise ValueError("matrix_market source needs problem.a and problem.b")
        if self.source == "second_order" and not all((self.mass, self.damping, self.stiffness, self.c)):
            raise ValueError("second_order source needs problem.mass, problem.damping, problem.stiffness, problem.c")
        return self


class SolverSection(_Section):
    variant: Literal["block", "tangential"] = "block"
    tol: float = Field(default=SolverDefaults.TOL, gt=0.0)
    max_cols: int | None = Field(default=None, ge=1)
    norm: NormKind = NormKind.SPECTRAL
    dense_threshold: int = Field(default=SolverDefaults.DENSE_THRESHOLD, ge=1)

    @field_validator("max_cols", mode="before")
    @classmethod
    def blank_max_cols(cls, value: Any) -> Any:
        return _none_if_blank(value)


class ShiftSection(_Section):
    kind: Literal["projection", "fixed"] = "projection"
    values: list[complex] = Field(default_factory=list)
    ell: int = Field(default=ShiftDefaults.ELL, ge=1)
    k_max: int | None = Field(default=None, ge=1)
    sketch_rank: int = Field(default=ShiftDefaults.SKETCH_RANK, ge=1)

    @field_validator("k_max", mode="before")
    @classmethod
    def blank_k_max(cls, value: Any) -> Any:
        return _none_if_blank(value)

    @field_validator("values", mode="before")
    @classmethod
    def parse_values(cls, value: Any) -> list[complex]:
        return parse_shift_list(value)

    @model_validator(mode="after")
    def check_values(self) -> ShiftSection:
        if self.kind == "fixed" and not self.values:
            raise ValueError("fixed shifts need shifts.values")
        bad = [v for v in self.values if v.real >= 0]
        if bad:
            raise ValueError(f"shifts must have negative real part, got {', '.join(map(str, bad))}")
        return self


class DirectionSection(_Section):
    strategy: Literal["projected", "full", "residual", "cyclic", "random"] = "projected"
    seed: int | None = None

    @field_validator("seed", mode="before")
    @classmethod
    def blank_seed(cls, value: Any) -> Any:
        return _none_if_blank(value)


class OutputSection(_Section):
    dir: str | None = None
    factors: bool = True

    @field_validator("dir", mode="before")
    @classmethod
    def blank_dir(cls, value: Any) -> Any:
        return _none_if_blank(value)


class RunConfig(BaseModel):
    """Everything one solve needs, grouped by configuration section."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    problem: ProblemSection = Field(default_factory=ProblemSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    shifts: ShiftSection = Field(default_factory=ShiftSection)
    directions: DirectionSection = Field(default_factory=DirectionSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @classmethod
    def from_flat(cls, values: Mapping[str, Any]) -> RunConfig:
        """Validate flat ``section.name`` values.

        Raises:
            ConfigError: Naming every offending key
        """
        nested: dict[str, dict[str, Any]] = {}
        for key, value in values.items():
            section, name = split_key(key)
            nested.setdefault(section, {})[name] = value
        try:
            return cls.model_validate(nested)
        except ValidationError as e:
            problems = []
            for error in e.errors():
                location = ".".join(str(part) for part in error["loc"])
                if error["type"] == "extra_forbidden":
                    problems.append(f"unknown configuration key '{location}'")
                else:
                    problems.append(f"{location or 'configuration'}: {error['msg']}")
            raise ConfigError(
                "Invalid configuration",
                details="\n".join(problems),
                suggestion="Run 'tadi config check FILE' to validate a configuration file.",
            ) from e

    def to_flat(self) -> dict[str, Any]:
        """Inverse of :meth:`from_flat` for display."""
        flat: dict[str, Any] = {}
        for section, fields in self.model_dump(mode="json").items():
            for name, value in fields.items():
                flat[f"{section}.{name}"] = value
        return flat

    def with_seed(self, seed: int) -> RunConfig:
        """Copy with the problem seed (and the direction seed, when set) replaced."""
        directions = self.directions
        if directions.seed is not None:
            directions = directions.model_copy(update={"seed": directions.seed + seed - self.problem.seed})
        return self.model_copy(
            update={"problem": self.problem.model_copy(update={"seed": seed}), "directions": directions}
        )


def build_run_config(
    file_values: Mapping[str, str] | None = None,
    overrides: Mapping[str, Any] | None = None,
    preset: Mapping[str, str] | None = None,
) -> RunConfig:
    """Merge preset, file and command-line values (later ones win) and validate."""
    merged: dict[str, Any] = {}
    for layer in (preset, file_values, overrides):
        if layer:
            merged.update({key.strip(): value for key, value in layer.items()})
    config = RunConfig.from_flat(merged)
    if config.solver.variant == "block" and any(key.startswith("directions.") for key in merged):
        logger.info("The block variant ignores the directions section")
    return config
