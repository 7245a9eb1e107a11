import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockprox.topology import (
    Graph,
    Hypergraph,
    IsolatedNodeError,
    expected_comm_per_iteration,
    hypergraph_from_graph,
    metropolis_hastings_weights,
    node_comm_probability,
    read_graph,
    read_hypergraph,
    read_topology,
    sample_component,
    sample_incident_edge,
    sbm_generate,
    uniform_index,
    write_graph,
    write_hypergraph,
)


def test_hypergraph_comm_formula(fig1):
    assert expected_comm_per_iteration(fig1) == pytest.approx(42 / 8)
    assert fig1.sizes().tolist() == [2, 2, 2, 3, 3, 3, 4, 3]


def test_graph_comm_is_two(five_edge):
    assert expected_comm_per_iteration(hypergraph_from_graph(five_edge)) == 2.0


def test_single_support_cost():
    # one component covering every node: each node always pays n - 1
    h = Hypergraph(5, ((0, 1, 2, 3, 4),))
    assert expected_comm_per_iteration(h) == 5 * 4


def test_node_probability(five_edge):
    h = hypergraph_from_graph(five_edge)
    assert node_comm_probability(h, 1) == pytest.approx(3 / 5)
    assert node_comm_probability(h, 0) == pytest.approx(2 / 5)
    with pytest.raises(IndexError):
        node_comm_probability(h, 4)


def test_hypergraph_validation():
    with pytest.raises(ValueError):
        Hypergraph(3, ((0, 3),))
    with pytest.raises(ValueError):
        Hypergraph(3, ((),))
    with pytest.raises(ValueError):
        Hypergraph(3, ())


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(3, np.array([[1, 0]]))
    with pytest.raises(ValueError):
        Graph(3, np.array([[0, 1], [0, 1]]))
    with pytest.raises(ValueError):
        Graph(3, np.array([[0, 3]]))


def test_incident_edge_isolated():
    g = Graph.from_pairs(3, [(0, 1)])
    with pytest.raises(IsolatedNodeError):
        sample_incident_edge(g, 2, np.random.default_rng(0))


def test_samplers_consume_one_double(fig1, five_edge):
    a, b = np.random.default_rng(3), np.random.default_rng(3)
    sample_component(fig1, a)
    b.random()
    assert a.random() == b.random()
    sample_incident_edge(five_edge, 1, a)
    b.random()
    assert a.random() == b.random()


def test_component_frequencies(fig1):
    rng = np.random.default_rng(0)
    draws = np.array([sample_component(fig1, rng) for _ in range(40_000)])
    freq = np.bincount(draws, minlength=fig1.m) / len(draws)
    np.testing.assert_allclose(freq, 1 / 8, atol=0.01)


@given(st.floats(0, 1, exclude_max=True), st.integers(1, 1000))
def test_uniform_index_range(u, k):
    assert 0 <= int(uniform_index(u, k)) < k


def test_sbm_complete_graph():
    g = sbm_generate([40], 1.0, 1.0, np.random.default_rng(0))
    assert g.m == 780


def test_sbm_determinism():
    a = sbm_generate([10, 17, 18, 18, 12], 0.5, 0.01, np.random.default_rng(7))
    b = sbm_generate([10, 17, 18, 18, 12], 0.5, 0.01, np.random.default_rng(7))
    assert np.array_equal(a.edges, b.edges)


def test_sbm_draw_count_independent_of_probabilities():
    r1, r2 = np.random.default_rng(1), np.random.default_rng(1)
    sbm_generate([3, 4], 0.0, 0.0, r1)
    sbm_generate([3, 4], 0.9, 0.3, r2)
    assert r1.random() == r2.random()


def test_mh_path_graph():
    g = Graph.from_pairs(3, [(0, 1), (1, 2)])
    w = metropolis_hastings_weights(g)
    expected = np.array([[2 / 3, 1 / 3, 0], [1 / 3, 1 / 3, 1 / 3], [0, 1 / 3, 2 / 3]])
    np.testing.assert_allclose(w, expected, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_mh_doubly_stochastic(seed):
    g = sbm_generate([5, 7], 0.6, 0.1, np.random.default_rng(seed))
    w = metropolis_hastings_weights(g)
    np.testing.assert_allclose(w.sum(0), 1, atol=1e-12)
    np.testing.assert_allclose(w.sum(1), 1, atol=1e-12)
    assert np.array_equal(w, w.T)
    assert (w >= 0).all()


def test_graph_file_roundtrip(tmp_path, five_edge):
    p = tmp_path / "g.txt"
    write_graph(five_edge, p)
    g = read_graph(p)
    assert g.n == 4 and np.array_equal(g.edges, five_edge.edges)
    assert read_topology(p).m == 5


def test_hypergraph_file_roundtrip(tmp_path, fig1):
    p = tmp_path / "h.txt"
    write_hypergraph(fig1, p)
    assert read_hypergraph(p) == fig1
    assert read_topology(p) == fig1


def test_graph_file_edge_count_mismatch(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("3 2\n0 1\n")
    with pytest.raises(ValueError, match="declares 2 edges"):
        read_graph(p)


def test_fig1_node_in_two_components(fig1):
    assert node_comm_probability(fig1, 8) == pytest.approx(0.25)


def test_degenerate_cases(rng):
    h = Hypergraph(3, ((1,),))
    assert expected_comm_per_iteration(h) == 0.0
    assert node_comm_probability(h, 0) == 0.0
    assert all(sample_component(h, rng) == 0 for _ in range(20))
    g = Graph.from_pairs(3, [(0, 1), (1, 2)])
    assert all(sample_incident_edge(g, 0, rng) == 0 for _ in range(20))
    np.testing.assert_array_equal(metropolis_hastings_weights(Graph(1, np.empty((0, 2)))), [[1.0]])
    assert sbm_generate([4, 4], 0.0, 0.0, rng).m == 0


def test_incident_edge_frequencies(five_edge):
    rng = np.random.default_rng(2)
    draws = np.array([sample_incident_edge(five_edge, 1, rng) for _ in range(30_000)])
    vals, counts = np.unique(draws, return_counts=True)
    assert vals.tolist() == [0, 2, 3]
    np.testing.assert_allclose(counts / len(draws), 1 / 3, atol=0.015)


def test_graph_hypergraph_supports():
    tri = Graph.from_pairs(3, [(0, 1), (0, 2), (1, 2)])
    assert hypergraph_from_graph(tri).supports == ((0, 1), (0, 2), (1, 2))
