"""
Shared fixtures: the default gas and a moderate 3-rarefaction wave.
"""

import pytest

from rarefaction_lab.gas_dynamics import PrimitiveState
from rarefaction_lab.models import GasModel
from rarefaction_lab.rarefaction_waves import RiemannData


@pytest.fixture
def gas():
    """Air-like ideal gas with unit base dissipation constants."""
    return GasModel()


@pytest.fixture
def left_state():
    return PrimitiveState(1.0, 0.0, 1.0)


@pytest.fixture
def riemann(gas, left_state):
    """Left state (1, 0, 1) expanding to v₁ = 0.5."""
    return RiemannData.from_left(gas, left_state, 0.5)
