import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from canonstat.basis import make_finite_basis, make_trig_basis
from canonstat.kernels import CoefficientTensor

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

LAZY = [[0.75, 0.25], [0.25, 0.75]]
THREE = [[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5]]


@pytest.fixture(scope="session")
def trig():
    return make_trig_basis()


@pytest.fixture(scope="session")
def coin():
    return make_finite_basis([0.5, 0.5])


@pytest.fixture
def diag2():
    return CoefficientTensor(2, {(1, 1): 1.0, (2, 2): 1.0})


def random_tensor(rng: np.random.Generator, order: int, max_index: int, max_entries: int = 10):
    count = int(rng.integers(1, max_entries + 1))
    entries = {
        tuple(int(i) for i in rng.integers(1, max_index + 1, size=order)): float(rng.uniform(-2, 2))
        for _ in range(count)
    }
    return CoefficientTensor(order, entries)
