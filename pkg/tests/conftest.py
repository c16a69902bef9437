import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qergodic.hilbert import qubit_bases

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

S = 1 / np.sqrt(2)


@pytest.fixture
def qubit():
    """Z, X, Y bases of a qubit, labelled 0/1, +/-, +i/-i."""
    return qubit_bases()
