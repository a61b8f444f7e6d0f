import numpy as np
import pytest

from helpers import eight_object_ensemble


@pytest.fixture
def table_ensemble():
    """The 8-object two-clustering fixture with 4 microclusters."""
    return eight_object_ensemble()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
