import numpy as np
import pytest

from fracburg import GridSpec, ModelParams


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def grid():
    return GridSpec(2, 512, 64.0)


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec(2, 128, 32.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
