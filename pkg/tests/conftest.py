import numpy as np
import pytest

from graphdeconv import (
    erdos_renyi_graph,
    shift_operator,
    spectral_decomposition,
)


@pytest.fixture(scope="session")
def er20():
    """Connected ER(20, 0.4) graph reused across tests."""
    return erdos_renyi_graph(20, 0.4, 7)


@pytest.fixture(scope="session")
def spectral20(er20):
    return spectral_decomposition(shift_operator(er20, "normalized-adjacency"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
