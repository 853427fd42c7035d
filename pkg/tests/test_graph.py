import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from influcomp.graph import (DegreeModel, Graph, GraphFormatError, degree, generate_power_law,
                             load_edge_list, sample_degrees, write_edge_list)


def _write(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_simple_path(tmp_path):
    g = load_edge_list(_write(tmp_path, "0 1\n1 2\n"))
    assert (g.n, g.edge_count) == (3, 2)


def test_load_drops_duplicates_and_loops(tmp_path):
    g = load_edge_list(_write(tmp_path, "0 1\n1 0\n2 2\n"))
    assert (g.n, g.edge_count) == (3, 1)


def test_load_remaps_sparse_ids(tmp_path):
    g = load_edge_list(_write(tmp_path, "# comment\n10 30\n30 70  # trailing\n"))
    assert g.n == 3
    assert g.labels.tolist() == [10, 30, 70]
    assert g.edges().tolist() == [[0, 1], [1, 2]]


@pytest.mark.parametrize("text,lineno", [("0 1\nfoo bar\n", 2), ("0 1\n1\n", 2),
                                         ("# c\n\n0 -1\n", 3), ("0 1 2\n", 1)])
def test_load_reports_line_number(tmp_path, text, lineno):
    with pytest.raises(GraphFormatError, match=f":{lineno}:"):
        load_edge_list(_write(tmp_path, text))


def test_load_empty_file(tmp_path):
    with pytest.raises(GraphFormatError):
        load_edge_list(_write(tmp_path, "# only comments\n\n"))


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_edge_list(tmp_path / "nope.txt")


def test_latent_marker_round_trip(tmp_path):
    g = Graph.from_edges(4, [(0, 1), (2, 3), (1, 2)], latent_edges=np.array([[1, 2]]))
    path = tmp_path / "out.txt"
    write_edge_list(g, path)
    text = path.read_text()
    assert "1 2 # latent" in text and "0 1\n" in text
    back = load_edge_list(path)
    assert back == g
    assert back.latent_edges.tolist() == [[1, 2]]


def test_isolated_nodes_survive_round_trip(tmp_path):
    g = Graph.from_edges(5, [(0, 3)])
    path = tmp_path / "iso.txt"
    write_edge_list(g, path)
    back = load_edge_list(path)
    assert back == g and back.n == 5


def test_degree_examples():
    tri = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert all(degree(tri, i) == 2 for i in range(3))
    path = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert degree(path, 1) == 2 and degree(path, 0) == 1
    with pytest.raises(IndexError):
        degree(path, 3)


def test_two_node_generation_is_deterministic():
    g1 = generate_power_law(2, 2.0, 11)
    g2 = generate_power_law(2, 2.0, 11)
    assert g1 == g2
    assert g1.edges().tolist() in ([[0, 1]], [])


def test_exponent_must_exceed_one():
    with pytest.raises(ValueError):
        generate_power_law(100, 1.0, 0)
    with pytest.raises(ValueError):
        DegreeModel(0.5, 10)


@pytest.mark.parametrize("lam,kmax", [(1.5, 999), (2.5, 1999), (3.0, 5)])
def test_degree_model_normalization(lam, kmax):
    m = DegreeModel(lam, kmax)
    assert m.normalization > 0
    assert abs(m.pmf().sum() - 1.0) < 1e-9


def _discrete_mle(degrees, kmax):
    # oracle: maximise the truncated power-law likelihood directly
    k = degrees[degrees >= 1].astype(float)
    support = np.arange(1, kmax + 1, dtype=float)
    s = np.log(k).sum()

    def nll(lam):
        return lam * s + len(k) * np.log(np.sum(support ** -lam))

    return minimize_scalar(nll, bounds=(1.01, 6.0), method="bounded").x


def test_power_law_exponent_fit():
    g = generate_power_law(2000, 2.5, 7)
    lam = _discrete_mle(g.degrees, 1999)
    assert abs(lam - 2.5) <= 0.3
    assert lam == pytest.approx(2.509, abs=2e-3)  # frozen from the oracle above


def test_heavy_tail_mean_degree():
    # realised degrees lose stubs to loop/multi-edge rejection at lambda=1.5,
    # so the check is on the sampled degree sequence itself
    model = DegreeModel(1.5, 999)
    oracle = sum(k * model.normalization / k**1.5 for k in range(1, 1000))
    deg = sample_degrees(model, 1000, np.random.default_rng(7))
    assert abs(deg.mean() - oracle) <= 0.15 * oracle
    assert oracle == pytest.approx(24.23, abs=0.01)


def test_generated_graph_invariants():
    g = generate_power_law(500, 2.2, 3)
    assert g.degrees.sum() % 2 == 0
    assert g.indices.max() < g.n
    for i in range(g.n):
        nb = g.neighbors(i)
        assert i not in nb
        assert np.all(np.diff(nb) > 0)


edge_lists = st.integers(2, 30).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1),
                                                        st.integers(0, n - 1)), max_size=80)))


@settings(max_examples=60, deadline=None)
@given(edge_lists)
def test_symmetry_and_no_loops(data):
    n, edges = data
    g = Graph.from_edges(n, edges)
    adj = g.adjacency_sets()
    for i in range(n):
        assert i not in adj[i]
        for j in adj[i]:
            assert i in adj[j]
    assert g.edge_count == len({tuple(sorted(e)) for e in edges if e[0] != e[1]})


@settings(max_examples=40, deadline=None)
@given(edge_lists)
def test_round_trip(tmp_path_factory, data):
    n, edges = data
    g = Graph.from_edges(n, edges)
    path = tmp_path_factory.mktemp("rt") / "g.txt"
    write_edge_list(g, path)
    assert load_edge_list(path) == g
