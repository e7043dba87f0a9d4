import matplotlib

matplotlib.use("Agg")

import pytest

from topoprune.graphs.core import complete_graph, ring_lattice
from topoprune.graphs.models import RegularGraph
from topoprune.utils import console


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-budget search runs (deselect with -m 'not slow')")


@pytest.fixture(autouse=True)
def quiet_console():
    console.set_quiet(True)
    yield
    console.set_quiet(False)


@pytest.fixture
def k4() -> RegularGraph:
    return complete_graph(4)


@pytest.fixture
def c4() -> RegularGraph:
    return ring_lattice(4, 2)


@pytest.fixture
def c5() -> RegularGraph:
    return ring_lattice(5, 2)


@pytest.fixture
def petersen() -> RegularGraph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return RegularGraph.from_edges(10, outer + spokes + inner, 3)
