import numpy as np
import pytest

import revint as rv


@pytest.fixture
def spring():
    return rv.spring_scene()


@pytest.fixture
def small_ring():
    return rv.ring_scene(n=8)


@pytest.fixture
def chain4():
    return rv.chain_scene(n=4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
