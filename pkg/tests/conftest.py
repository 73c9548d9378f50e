import numpy as np
import pytest

import urnfield as uf


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


@pytest.fixture
def polya_pair():
    one = uf.point_mass(1.0, upper=1.0, K=64)
    return uf.validate(one, one, beta=1.0)


@pytest.fixture
def bern_pair():
    return uf.scaled_bernoulli_pair(2.0, 1.0, 0.5, K=64)


def random_dist(rng, K=64, upper=1.0):
    return uf.QuantileDist(upper, np.sort(rng.random(K)) * upper)
