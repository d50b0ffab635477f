import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netsampling.graph import (DegreeDistribution, Graph, GraphError, category_counts,
                               check_invariants, connected_components, degree,
                               degree_distribution, load_graph, save_graph)

from conftest import complete, make, path, star


def test_degree_examples(k3, s5):
    assert all(degree(k3, v) == 2 for v in range(3))
    assert degree(s5, 0) == 5
    assert degree(s5, 3) == 1


def test_degree_unknown_node(k3):
    with pytest.raises(GraphError):
        degree(k3, 3)
    with pytest.raises(GraphError):
        degree(k3, -1)


def test_degree_distribution_examples(k3, s5):
    assert degree_distribution(k3).probabilities == {2: 1.0}
    dd = degree_distribution(s5)
    assert dd.probabilities[1] == pytest.approx(5 / 6)
    assert dd.probabilities[5] == pytest.approx(1 / 6)


def test_degree_distribution_empty_graph():
    with pytest.raises(GraphError):
        degree_distribution(make(0, []))


def test_degree_distribution_must_sum_to_one():
    with pytest.raises(ValueError):
        DegreeDistribution({1: 0.5, 2: 0.4})
    with pytest.raises(ValueError):
        DegreeDistribution({1: 1.2, 2: -0.2})


def test_components_examples(k3):
    assert connected_components(k3) == [{0, 1, 2}]
    comps = connected_components(make(4, [(0, 1), (2, 3)]))
    assert sorted(map(sorted, comps)) == [[0, 1], [2, 3]]
    assert sorted(map(sorted, connected_components(make(4, [])))) == [[0], [1], [2], [3]]


def test_category_counts_examples():
    g = make(10, [(0, 1)], a_nodes=[2, 5, 7])
    assert category_counts(g) == (3, 7)
    assert category_counts(make(4, [], a_nodes=range(4))) == (4, 0)
    assert category_counts(g)[0] == int(sum(g.category(v) == "A" for v in range(10)))


def test_rejects_self_loops_and_parallel_edges():
    with pytest.raises(GraphError):
        make(3, [(0, 0)])
    with pytest.raises(GraphError):
        make(3, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        make(3, [(0, 5)])


def test_graph_is_read_only(k3):
    with pytest.raises(ValueError):
        k3.indices[0] = 1
    with pytest.raises(ValueError):
        k3.is_a[0] = True


def test_neighbors_sorted(s5):
    assert s5.neighbors(0).tolist() == [1, 2, 3, 4, 5]
    assert s5.has_edge(3, 0) and not s5.has_edge(1, 2)


@st.composite
def random_graphs(draw):
    n = draw(st.integers(1, 12))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True) if pairs else st.just([]))
    a = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    return Graph.from_edges(n, chosen, np.array(a, dtype=bool))


@settings(max_examples=60, deadline=None)
@given(random_graphs())
def test_invariants_hold_for_random_graphs(g):
    check_invariants(g)
    assert g.volume == 2 * g.edge_count
    for u, v in g.edges().tolist():
        assert g.has_edge(v, u)
    dd = degree_distribution(g)
    assert abs(dd.mean - g.volume / g.num_nodes) < 1e-12
    comps = connected_components(g)
    assert sorted(v for c in comps for v in c) == list(range(g.num_nodes))
    n_a, n_b = category_counts(g)
    assert n_a + n_b == g.num_nodes


def test_roundtrip_files(tmp_path):
    g = make(6, [(0, 1), (1, 2), (4, 5)], a_nodes=[1, 4])
    save_graph(g, tmp_path / "g.edges", tmp_path / "g.cat")
    h = load_graph(tmp_path / "g.edges", tmp_path / "g.cat")
    assert h.num_nodes == 6
    assert h.edges().tolist() == g.edges().tolist()
    assert h.is_a.tolist() == g.is_a.tolist()


def test_loader_rejects_bad_files(tmp_path):
    (tmp_path / "loop.edges").write_text("0 1\n2 2\n")
    with pytest.raises(GraphError):
        load_graph(tmp_path / "loop.edges")
    (tmp_path / "dup.edges").write_text("0 1\n1 0\n")
    with pytest.raises(GraphError):
        load_graph(tmp_path / "dup.edges")
    (tmp_path / "ok.edges").write_text("0 1\n")
    (tmp_path / "bad.cat").write_text("0 C\n")
    with pytest.raises(GraphError):
        load_graph(tmp_path / "ok.edges", tmp_path / "bad.cat")


def test_helpers_build_expected_shapes():
    assert complete(4).edge_count == 6
    assert star(5).num_nodes == 6
    assert path(5).edge_count == 4
