"""
tests/conftest.py
Shared states and generators.
"""

from typing import Optional

import numpy as np
import pytest

from app.models.domain import ChargePattern
from app.services.states import (
    DensityOperator,
    ThreeModeCoefficients,
    TwoModeCoefficients,
    from_pure,
    mix,
    random_state,
)


def bell_vector() -> np.ndarray:
    """(‖1_κ⟩ + ‖1_κ′⟩)/√2 on two modes: indices 2 and 1."""
    v = np.zeros(4, dtype=np.complex128)
    v[1] = v[2] = 1 / np.sqrt(2)
    return v


def random_two_mode(seed: int) -> TwoModeCoefficients:
    return TwoModeCoefficients.from_matrix(random_state(2, 4, seed=seed).matrix)


def random_three_mode(seed: int) -> ThreeModeCoefficients:
    rho = random_state(3, 8, seed=seed, ssr=ChargePattern.uniform(3))
    return ThreeModeCoefficients.from_matrix(rho.matrix)


def random_ssr_two_mode(seed: int, rank: Optional[int] = None) -> DensityOperator:
    rank = 1 + seed % 4 if rank is None else rank
    return random_state(2, rank, seed=seed, ssr=ChargePattern.uniform(2))


@pytest.fixture
def bell() -> DensityOperator:
    return from_pure(bell_vector())


@pytest.fixture
def vacuum2() -> DensityOperator:
    return from_pure([1, 0, 0, 0])


@pytest.fixture
def werner(bell) -> DensityOperator:
    return mix([bell, DensityOperator.from_matrix(np.eye(4) / 4)], [0.5, 0.5])
