"""Shared fixtures and hypothesis strategies."""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from corrkit.fdalg import FDAlgebra, make_cyclic_group

settings.register_profile(
    "corrkit", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("corrkit")

block_dims = st.lists(st.integers(1, 3), min_size=1, max_size=3)
seeds = st.integers(0, 2**32 - 1)


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_element(alg, rng):
    """A random element of an FDAlgebra or MatrixAlgebra, as a matrix."""
    return alg.to_matrix(random_complex(rng, alg.dim))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=[2, 3, 4])
def cyclic(request):
    return make_cyclic_group(request.param)


@pytest.fixture
def m2():
    return FDAlgebra([2])
