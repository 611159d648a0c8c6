"""Named experiment presets: flat configuration values applied below file and flag values."""

from tadi.errors import ConfigError

PRESETS: dict[str, dict[str, str]] = {
    # 1x1 smoke test: one exact step
    "scalar": {
        "problem.source": "scalar",
        "solver.variant": "block",
        "shifts.kind": "fixed",
        "shifts.values": "-1",
    },
    # random general directions on an indefinite center; expected not to converge
    "divergence": {
        "problem.source": "synthetic",
        "problem.n": "200",
        "problem.m": "10",
        "problem.r_negative": "5",
        "problem.seed": "7",
        "solver.variant": "tangential",
        "solver.max_cols": "200",
        "directions.strategy": "random",
        "directions.seed": "7",
    },
    "heuristics": {
        "problem.source": "synthetic",
        "problem.n": "300",
        "problem.m": "12",
        "problem.r_negative": "4",
        "problem.seed": "1",
        "solver.variant": "tangential",
        "solver.tol": "1e-10",
        "solver.max_cols": "600",
        "directions.strategy": "projected",
    },
    # high-rank constant term from coupling terms
    "bilinear": {
        "problem.source": "synthetic",
        "problem.n": "400",
        "problem.m": "4",
        "problem.r_negative": "1",
        "problem.seed": "3",
        "problem.bilinear_terms": "2",
        "problem.bilinear_rank": "28",
        "solver.variant": "tangential",
        "solver.tol": "1e-8",
        "solver.max_cols": "2000",
    },
    "synthetic": {
        "problem.source": "synthetic",
        "problem.n": "500",
        "problem.m": "20",
        "problem.r_negative": "8",
        "problem.seed": "0",
        "solver.variant": "block",
        "solver.max_cols": "400",
    },
}


def get_preset(name: str) -> dict[str, str]:
    """Flat values of the preset ``name``.

    Raises:
        ConfigError: If no such preset exists
    """
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset '{name}'", suggestion=f"Available presets: {', '.join(PRESETS)}")
    return dict(PRESETS[name])
