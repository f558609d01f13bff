"""
Shared pytest fixtures for the ReProCS test suite: seeded random streams, exact
low-rank estimates and small experiment configurations.

Version: 1.0
"""

# External imports with versions
import os  # built-in
from typing import Any, Dict  # built-in

import numpy as np  # numpy v1.24+
import pytest  # pytest v7.3+
import scipy.linalg  # scipy v1.10+

# Settings are read from the environment on first use
os.environ.setdefault("REPROCS_ENVIRONMENT", "test")
os.environ.setdefault("REPROCS_LOG_LEVEL", "WARNING")

# Internal imports
from reprocs.config.settings import get_settings  # noqa: E402
from reprocs.core.logging import setup_logging  # noqa: E402
from reprocs.models.subspace import SubspaceEstimate  # noqa: E402
from tests.helpers import exact_estimate, orthonormal, small_experiment_data  # noqa: E402

# Test constants
TEST_SEED = 20240611
SMALL_N = 12


@pytest.fixture(scope="session", autouse=True)
def configure_logging():
    """Quiet structured logging for the whole session."""
    setup_logging(level=get_settings().LOG_LEVEL, use_json=False)
    yield


@pytest.fixture
def rng() -> np.random.Generator:
    """Deterministic random stream per test."""
    return np.random.default_rng(TEST_SEED)


@pytest.fixture
def small_basis(rng) -> np.ndarray:
    """12 x 2 orthonormal basis."""
    return orthonormal(SMALL_N, 2, rng)


@pytest.fixture
def small_estimate(small_basis) -> SubspaceEstimate:
    return exact_estimate(small_basis)


@pytest.fixture
def complement(small_basis) -> np.ndarray:
    """Orthonormal basis of the complement of small_basis."""
    return scipy.linalg.null_space(small_basis.T)


@pytest.fixture
def experiment_data() -> Dict[str, Any]:
    return small_experiment_data()
