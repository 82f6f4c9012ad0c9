import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gvnr.graph import EmptyGraphError, GraphFormatError, load_graph


class TestLoadGraph:
    def test_unweighted_path(self):
        g = load_graph(["a b", "b c"])
        assert g.n == 3
        assert g.degree(g.index_of["b"]) == 2
        assert np.all(g.weights == 1.0)

    def test_duplicate_edges_sum_weights(self):
        g = load_graph(["a b 2.0", "a b 1.0"])
        assert g.n == 2
        nbrs, w = g.neighbors(g.index_of["a"])
        assert list(nbrs) == [g.index_of["b"]]
        assert w[0] == 3.0

    def test_reversed_duplicate_is_same_edge(self):
        g = load_graph(["a b", "b a"])
        _, w = g.neighbors(0)
        assert w[0] == 2.0

    def test_directed_input_symmetrizes_to_same_graph(self):
        lines = ["a b 1.5", "b a 0.5", "b c 1.0"]
        g1 = load_graph(lines, directed_input=True)
        g2 = load_graph(lines, directed_input=False)
        assert list(g1.edge_lines()) == list(g2.edge_lines())

    def test_comments_and_blank_lines_skipped(self):
        g = load_graph(["# header", "", "a b", "   ", "# trailing"])
        assert g.n == 2

    def test_self_loops_dropped_and_counted(self):
        g = load_graph(["a a", "a b", "b b 3.0"])
        assert g.dropped_self_loops == 2
        assert g.edge_entry_count == 2

    def test_self_loop_only_node_is_isolated(self):
        g = load_graph(["a b", "c c"])
        assert list(g.isolated_nodes()) == [g.index_of["c"]]

    def test_malformed_line_reports_number(self):
        with pytest.raises(GraphFormatError, match="line 2"):
            load_graph(["a b", "a"])

    def test_bad_weight_reports_number(self):
        with pytest.raises(GraphFormatError, match="line 1"):
            load_graph(["a b zero"])

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(GraphFormatError, match="positive"):
            load_graph(["a b -1.0"])
        with pytest.raises(GraphFormatError, match="positive"):
            load_graph(["a b 0"])

    def test_empty_graph_rejected(self):
        with pytest.raises(EmptyGraphError):
            load_graph(["# nothing here"])

    def test_index_bijection(self):
        g = load_graph(["a b", "b c", "c d"])
        assert sorted(g.index_of.values()) == list(range(g.n))
        assert [g.node_ids[g.index_of[v]] for v in g.node_ids] == g.node_ids


class TestSymmetry:
    def test_every_edge_in_both_lists_with_equal_weight(self):
        g = load_graph(["a b 2", "b c 0.5", "a c 1.25", "c d 4"])
        for i in range(g.n):
            nbrs, w = g.neighbors(i)
            for j, wij in zip(nbrs, w):
                back, wback = g.neighbors(j)
                pos = list(back).index(i)
                assert wback[pos] == wij

    @given(st.lists(
        st.tuples(st.integers(0, 8), st.integers(0, 8),
                  st.floats(0.1, 10.0, allow_nan=False)),
        min_size=1, max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_random_edge_lists_keep_invariants(self, edges):
        lines = [f"v{a} v{b} {w}" for a, b, w in edges]
        if all(a == b for a, b, _ in edges):
            return  # only self-loops; nothing to assert beyond loading
        g = load_graph(lines)
        assert np.all(g.weights > 0)
        for i in range(g.n):
            nbrs, w = g.neighbors(i)
            assert i not in nbrs
            for j, wij in zip(nbrs, w):
                back, wback = g.neighbors(j)
                assert wback[list(back).index(i)] == wij


class TestSampling:
    def test_single_neighbor_always_chosen(self):
        g = load_graph(["a b"])
        rng = np.random.default_rng(0)
        a = g.index_of["a"]
        assert all(g.sample_neighbor(a, rng) == g.index_of["b"] for _ in range(50))

    def test_weighted_frequency_three_to_one(self):
        g = load_graph(["x j 3.0", "x k 1.0"])
        rng = np.random.default_rng(123)
        x, j = g.index_of["x"], g.index_of["j"]
        draws = 100_000
        hits = sum(g.sample_neighbor(x, rng) == j for _ in range(draws))
        assert 0.74 <= hits / draws <= 0.76

    def test_uniform_four_neighbors(self):
        g = load_graph(["x a", "x b", "x c", "x d"])
        rng = np.random.default_rng(5)
        x = g.index_of["x"]
        counts = np.zeros(g.n)
        draws = 100_000
        for _ in range(draws):
            counts[g.sample_neighbor(x, rng)] += 1
        freqs = counts[counts > 0] / draws
        assert np.all(np.abs(freqs - 0.25) <= 0.01)

    def test_chi_squared_against_weights(self):
        g = load_graph(["x a 1", "x b 2", "x c 5", "x d 0.5"])
        rng = np.random.default_rng(42)
        x = g.index_of["x"]
        nbrs, w = g.neighbors(x)
        draws = 50_000
        counts = np.zeros(len(nbrs))
        lookup = {int(j): pos for pos, j in enumerate(nbrs)}
        for _ in range(draws):
            counts[lookup[g.sample_neighbor(x, rng)]] += 1
        expected = draws * w / w.sum()
        _, p = stats.chisquare(counts, expected)
        assert p >= 0.01

    def test_vectorized_sampler_matches_distribution(self):
        g = load_graph(["x j 3.0", "x k 1.0"])
        x, j = g.index_of["x"], g.index_of["j"]
        rng = np.random.default_rng(9)
        nodes = np.full(100_000, x, dtype=np.float64)
        picks = g.sample_neighbors(nodes, rng.random(100_000))
        assert 0.74 <= np.mean(picks == j) <= 0.76

    def test_isolated_node_raises(self):
        g = load_graph(["a b", "c c"])
        with pytest.raises(ValueError, match="isolated"):
            g.sample_neighbor(g.index_of["c"], np.random.default_rng(0))


class TestRoundTrip:
    def test_save_load_save_is_byte_stable(self, tmp_path):
        g = load_graph(["a b 2", "b c 0.125", "a c 1.0", "c d 4", "d e 0.3"])
        p1, p2 = tmp_path / "g1.edges", tmp_path / "g2.edges"
        g.save_edges(p1)
        g2 = load_graph(p1)
        g2.save_edges(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_reload_reproduces_adjacency(self, tmp_path):
        g = load_graph(["a b 2", "b c 0.5", "a c 1.25"])
        path = tmp_path / "g.edges"
        g.save_edges(path)
        g2 = load_graph(path)
        for name in g.node_ids:
            i, i2 = g.index_of[name], g2.index_of[name]
            nbrs, w = g.neighbors(i)
            nbrs2, w2 = g2.neighbors(i2)
            pairs = sorted((g.node_ids[j], wij) for j, wij in zip(nbrs, w))
            pairs2 = sorted((g2.node_ids[j], wij) for j, wij in zip(nbrs2, w2))
            assert pairs == pairs2
