"""Pytest configuration for RealityLab tests."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to Python path so tests can import 'src' module
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.experiments import build_ideal, build_singlet  # noqa: E402
from src.histories import DensityOperator, History  # noqa: E402


@pytest.fixture(scope="session")
def ideal():
    """The spin-5/2 ⊗ spin-3/2 setup."""
    return build_ideal()


@pytest.fixture(scope="session")
def singlet():
    """Singlet with A, P along z and B, Q along x."""
    return build_singlet()


@pytest.fixture(scope="session")
def rho_ideal(ideal):
    return DensityOperator.from_state(ideal.state)


@pytest.fixture(scope="session")
def ideal_histories(ideal):
    """h_T, h_Y, h_E, h_G at times (1, 2)."""
    eye = np.eye(24, dtype=complex)
    return {
        "T": History((eye, ideal.T.op), (1, 2), ("1", "T")),
        "Y": History((eye, ideal.Y.op), (1, 2), ("1", "Y")),
        "E": History((ideal.E.op, ideal.T.op), (1, 2), ("E", "T")),
        "G": History((ideal.G.op, ideal.Y.op), (1, 2), ("G", "Y")),
    }
