"""
Pytest configuration file with coverage setup to avoid the module-not-measured warning.
"""

import os
import sys

import numpy as np
import pytest

# Add the src directory to the path to ensure proper importing
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../src")))

from tadi.problem import LyapunovProblem, scalar_problem  # noqa: E402


# Disable coverage warnings about modules already imported
def pytest_configure(config):
    import warnings

    from coverage.exceptions import CoverageWarning

    warnings.filterwarnings("ignore", category=CoverageWarning, message="Module .* was previously imported")


@pytest.fixture
def scalar():
    """2 a x + b^2 r = 0 with a=-1, b=1, r=2, whose solution is x = 1."""
    return scalar_problem()


@pytest.fixture
def scalar_unit_center():
    """The scalar problem with r=1 (solution x = 1/2)."""
    return scalar_problem(r=1.0)


@pytest.fixture
def diag_problem():
    """A = diag(-1, -2), E = I, B = [1, 1]^T, R = [1]; X_ij = -1 / (lambda_i + lambda_j)."""
    return LyapunovProblem.create(np.diag([-1.0, -2.0]), np.array([[1.0], [1.0]]), R=np.array([[1.0]]))


@pytest.fixture
def diag_solution():
    return np.array([[1 / 2, 1 / 3], [1 / 3, 1 / 4]])


@pytest.fixture
def isolated_env(tmp_path, monkeypatch):
    """Run with an empty HOME and working directory so no .tadi.env leaks in."""
    home = tmp_path / "home"
    home.mkdir()
    monkeypatch.setenv("HOME", str(home))
    monkeypatch.chdir(tmp_path)
    # setenv first so teardown also removes values that load_dotenv writes during the test
    for key in ("TADI_LOG_LEVEL", "TADI_OUTPUT_DIR", "TADI_MAX_WORKERS", "TADI_WRITE_FACTORS"):
        monkeypatch.setenv(key, "")
        monkeypatch.delenv(key)
    return tmp_path
