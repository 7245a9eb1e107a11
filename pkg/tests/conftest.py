import numpy as np
import pytest

from blockprox.topology import Graph, Hypergraph

# 0-based supports of the 13-node, 8-component example hypergraph
FIG1_SUPPORTS = (
    (0, 1), (6, 7), (10, 12), (1, 2, 12),
    (4, 5, 11), (8, 9, 11), (0, 6, 7, 8), (3, 9, 10),
)
# four nodes, five edges; node 1 has degree 3
FIVE_EDGE_PAIRS = ((0, 1), (0, 2), (1, 2), (1, 3), (2, 3))


@pytest.fixture
def fig1():
    return Hypergraph(13, FIG1_SUPPORTS)


@pytest.fixture
def five_edge():
    return Graph.from_pairs(4, FIVE_EDGE_PAIRS)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
