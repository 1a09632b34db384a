import numpy as np
import pytest

from oneshotsim.states import random_density, random_pure


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def rand_state(rng):
    def make(dims, rank=None):
        return random_density(dims, rng, rank=rank)
    return make


@pytest.fixture
def rand_pure(rng):
    def make(dims):
        return random_pure(dims, rng)
    return make
