import numpy as np
import pytest

from gwspeed import make_distribution


@pytest.fixture(scope="session")
def binary():
    return make_distribution({2: 1.0})


@pytest.fixture(scope="session")
def ternary():
    return make_distribution({3: 1.0})


@pytest.fixture(scope="session")
def mix23():
    return make_distribution({2: 0.5, 3: 0.5})


@pytest.fixture(scope="session")
def leafy():
    return make_distribution({0: 0.25, 2: 0.75})


def binomial_z(estimate: float, truth: float, trials: int) -> float:
    sigma = np.sqrt(truth * (1.0 - truth) / trials)
    if sigma == 0.0:
        return 0.0 if estimate == truth else np.inf
    return abs(estimate - truth) / sigma
