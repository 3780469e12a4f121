import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("dyncoh", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("dyncoh")


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def random_herm(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2
