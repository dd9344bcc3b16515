"""
Shared fixtures: short trials, small search budgets and the exact OIE grid
generated from the identified effective noise values.
"""
import numpy as np
import pytest

from oie.models import ObservedGrid
from oie.schemas import OieParams, PsoConfig, TargetSpec
from oie.services.adaptation import predict_from_effective
from oie.services.noise_models import IDENTIFIED_SIGMA_H, IDENTIFIED_SIGMA_V

IDENTIFIED_XI = np.array(IDENTIFIED_SIGMA_V + IDENTIFIED_SIGMA_H)


@pytest.fixture
def short_target():
    return TargetSpec(duration=2.0)


@pytest.fixture
def small_pso():
    return PsoConfig(swarm_size=8, iterations=5, grid_points=3, polish=False, seed=11)


@pytest.fixture(scope="session")
def identified_grid() -> np.ndarray:
    return predict_from_effective(np.array(IDENTIFIED_SIGMA_V), np.array(IDENTIFIED_SIGMA_H), OieParams())


@pytest.fixture(scope="session")
def identified_observed(identified_grid) -> ObservedGrid:
    return ObservedGrid(u=identified_grid)
