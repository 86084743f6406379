import numpy as np
import pytest

from wavecrb import Scenario, build_geometry, selection


@pytest.fixture
def two_target_scenario():
    return Scenario(
        n=16,
        delays=np.array([3.3, 9.1]),
        gains=np.array([np.exp(0.4j), np.exp(-1.1j)]),
        noise_var=1.0,
    )


@pytest.fixture
def two_target_geometry(two_target_scenario):
    return build_geometry(two_target_scenario)


@pytest.fixture
def delay_selection_2():
    return selection("delay", 2)


def random_hermitian(rng, n):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (m + m.conj().T) / 2


def random_psd(rng, n):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return m.conj().T @ m
