# tests/antipode/conftest.py
import pytest
from unittest.mock import MagicMock

from antipode.config import Config
from antipode.logger import Logger
from antipode.solvers.circle_solver import CircleSolver
from antipode.solvers.manifold_solver import ManifoldSolver


@pytest.fixture
def config():
    """Real Config with budgets small enough for the test suite."""
    return Config(
        seed=0,
        restarts=64,
        progress=False,
        threads=1,
        oddness_samples=200,
        annealing_steps=150,
        min_diameter_restarts=12,
    )


@pytest.fixture
def mock_logger():
    """Mock Logger object for testing."""
    logger = MagicMock(spec=Logger)
    logger.info.return_value = None
    logger.warning.return_value = None
    logger.error.return_value = None
    return logger


@pytest.fixture
def circle_solver(config, mock_logger):
    return CircleSolver(config, mock_logger)


@pytest.fixture
def manifold_solver(config, mock_logger):
    return ManifoldSolver(config, mock_logger)
