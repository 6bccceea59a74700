import numpy as np
import pytest

from psfilter.core import ParameterizedModel


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


@pytest.fixture
def qubit_rotation_model():
    """|psi_theta> = (cos(theta/2), sin(theta/2)): unit QFI everywhere."""
    gy = np.array([[0.0, -1j], [1j, 0.0]]) / 2.0
    return ParameterizedModel(psi0=np.array([1.0, 0.0]), generators=(gy,))


@pytest.fixture
def phase_model():
    """d=2 phase generator diag(0, 1) on (1, 1)/sqrt(2)."""
    g = np.diag([0.0, 1.0]).astype(complex)
    return ParameterizedModel(psi0=np.array([1.0, 1.0]) / np.sqrt(2), generators=(g,))
