# conftest.py — fixtures compartidos de la suite
import numpy as np
import pytest

from quantum_models import appendix_a_model, born_behavior
from steering_scenarios import x3_assemblage


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def appendix_behavior():
    return born_behavior(appendix_a_model())


@pytest.fixture(scope="session")
def x3_v1():
    return x3_assemblage(1.0)
