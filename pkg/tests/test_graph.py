import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pottscolor.graph import (
    Graph, GraphError, GraphFormatError, PlantedColoring, balanced_class_sizes, degree_feature,
    edge_count, format_graph, generate_er, generate_planted, hetero_pair_count, parse_graph,
    read_graph, write_graph,
)
from pottscolor.potts import conflict_count


@pytest.mark.parametrize("n,c,m", [(1000, 13.0, 6500), (10, 2.0, 10), (100, 5.0, 250), (3, 1.0, 2)])
def test_edge_count(n, c, m):
    assert edge_count(n, c) == m


def test_edge_count_too_dense():
    with pytest.raises(GraphError):
        edge_count(4, 7.0)


def test_canonical_edges_and_csr():
    g = Graph(4, [(2, 0), (3, 1), (1, 0)])
    assert g.edges.tolist() == [[0, 1], [0, 2], [1, 3]]
    assert g.degrees().tolist() == [2, 2, 1, 1]
    assert sorted(g.neighbors(0).tolist()) == [1, 2]
    recv, send = g.directed_edges()
    assert len(recv) == 2 * g.n_edges
    pairs = {(int(a), int(b)) for a, b in zip(recv, send)}
    assert (0, 1) in pairs and (1, 0) in pairs


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 5)], [(0, 1), (1, 0)], [(-1, 2)]])
def test_invalid_edges(edges):
    with pytest.raises(GraphError):
        Graph(4, edges)


def test_planted_validation():
    with pytest.raises(GraphError):
        PlantedColoring(np.array([0, 3]), 3)
    with pytest.raises(GraphError):
        Graph(3, [(0, 1)], PlantedColoring(np.array([0, 1]), 2))


def test_degree_feature_star():
    # star on 5 nodes: c = 8/5 = 1.6
    g = Graph(5, [(0, k) for k in range(1, 5)])
    f = degree_feature(g)
    assert f[0] == pytest.approx(2.5)
    assert f[1:] == pytest.approx([0.625] * 4)
    assert np.all(degree_feature(Graph(3, [])) == 0)


def test_er_counts_and_determinism():
    g = generate_er(200, 6.0, seed=3)
    assert g.n_edges == 600 and g.planted is None
    assert g == generate_er(200, 6.0, seed=3)
    assert g != generate_er(200, 6.0, seed=4)


def test_er_complete_graph():
    g = generate_er(6, 5.0, seed=0)
    assert g.n_edges == 15


def test_planted_basic():
    g, planted = generate_planted(100, 5.0, 5, seed=1)
    assert g.n_edges == 250
    assert conflict_count(g, planted.colors) == 0
    assert planted.class_sizes().tolist() == [20] * 5


def test_planted_infeasible():
    # 4 nodes in 2 classes: only 4 hetero pairs
    assert hetero_pair_count(4, 2) == 4
    with pytest.raises(GraphError):
        generate_planted(4, 2.5, 2, seed=0)
    with pytest.raises(GraphError):
        generate_planted(10, 2.0, 1, seed=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(2, 6), st.floats(0.0, 6.0), st.integers(0, 2**31))
def test_planted_properties(n, q, c, seed):
    m = edge_count(n, c) if n * c / 2 + 0.5 <= n * (n - 1) / 2 else None
    if m is None or m > hetero_pair_count(n, q):
        return
    g, planted = generate_planted(n, c, q, seed)
    assert g.n_edges == m
    assert conflict_count(g, planted.colors) == 0
    sizes = planted.class_sizes()
    assert sizes.max() - sizes.min() <= 1
    assert np.array_equal(sizes, balanced_class_sizes(n, q))


def test_relabel_preserves_structure(small_planted):
    g, _ = small_planted
    perm = np.random.default_rng(0).permutation(g.n_nodes)
    h = g.relabel(perm)
    assert h.n_edges == g.n_edges
    assert conflict_count(h, h.planted.colors) == 0
    assert sorted(h.degrees().tolist()) == sorted(g.degrees().tolist())


def test_io_roundtrip(tmp_path, small_planted):
    g, _ = small_planted
    path = tmp_path / "g.txt"
    write_graph(g, path)
    assert read_graph(path) == g
    er = generate_er(20, 3.0, seed=2)
    assert parse_graph(format_graph(er)) == er
    assert format_graph(er).splitlines()[0] == "20 30 0"


@pytest.mark.parametrize("text", [
    "",
    "3 1\n0 1\n",
    "3 x 0\n0 1\n",
    "3 2 0\n0 1\n",
    "3 1 0\n0 3\n",
    "3 1 0\n1 1\n",
    "3 1 0\n0 1 2\n",
    "3 1 2\n0 1\n0 1\n",
    "3 1 2\n0 1 5\n0 1\n",
    "3 2 0\n0 1\n1 0\n",
])
def test_parse_errors(text):
    with pytest.raises(GraphFormatError):
        parse_graph(text)
