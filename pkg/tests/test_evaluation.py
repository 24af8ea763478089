import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import rankdata

from locattr.evaluation import (
    DegenerateGraphError,
    auc,
    average_f1,
    cut_cost,
    empirical_pvalue,
    f1_score,
    modularity,
    naive_statistic,
    rank_attributes,
    spearman,
)
from locattr.graph import Graph, ball, grid_graph
from locattr.wavelet import build_basis

finite = st.floats(-1e6, 1e6, allow_nan=False)
samples = st.lists(st.integers(-5, 5).map(float) | finite, min_size=1, max_size=30)


def pairwise_auc(h1, h0):
    return np.mean([1.0 if a > b else 0.5 if a == b else 0.0 for a in h1 for b in h0])


def dense_modularity(g, c):
    a = g.adjacency.toarray()
    d = a.sum(axis=1)
    m = d.sum()
    return sum((a[i, j] - d[i] * d[j] / m) * c[i] * c[j] for i in range(g.num_nodes) for j in range(g.num_nodes))


class TestAuc:
    def test_examples(self):
        assert auc([3, 4], [1, 2]) == 1.0
        assert auc([1, 1, 1], [1, 1]) == 0.5
        assert auc([3, 1], [2, 0]) == 0.75

    @given(samples, samples)
    def test_matches_pairwise_and_is_symmetric(self, h1, h0):
        assert auc(h1, h0) == pytest.approx(pairwise_auc(h1, h0), abs=1e-12)
        assert auc(h1, h0) + auc(h0, h1) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("bad", [([], [1]), ([1], []), ([np.nan], [1]), ([1], [np.inf])])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            auc(*bad)


class TestModularity:
    def test_triangle(self):
        g = Graph(3, [(0, 1), (1, 2), (0, 2)])
        # A-part 2, degree part (2+2)^2/6
        assert modularity(g, [1, 1, 0]) == pytest.approx(2 - 16 / 6, abs=1e-12)
        assert modularity(g, [1, 1, 0]) == pytest.approx(dense_modularity(g, [1, 1, 0]), abs=1e-12)

    def test_trivial_sets(self):
        g = grid_graph(4, 5)
        assert modularity(g, np.zeros(20, dtype=int)) == 0
        assert modularity(g, np.ones(20, dtype=int)) == pytest.approx(0, abs=1e-12)

    def test_weighted_matches_dense(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            edges = [(a, b, float(rng.uniform(0.5, 3))) for a, b in itertools.combinations(range(7), 2) if rng.random() < 0.5]
            g = Graph(7, edges or [(0, 1)])
            c = rng.integers(0, 2, 7)
            assert modularity(g, c) == pytest.approx(dense_modularity(g, c), abs=1e-12)

    def test_edgeless(self):
        with pytest.raises(DegenerateGraphError):
            modularity(Graph(3), [1, 0, 0])


def test_cut_cost_and_naive():
    g = Graph(3, [(0, 1), (1, 2, 2.0)])
    assert cut_cost(g, [1, 1, 0]) == 1
    assert naive_statistic([0, 0, 0]) == (0, 0.0)
    assert naive_statistic([1, 1, 1, 1]) == (4, 1.0)
    assert naive_statistic([1, 0, 1, 0]) == (2, 0.5)


class TestF1:
    def test_examples(self):
        truth = [{0, 1, 2}]
        assert average_f1(truth, truth) == 1.0
        assert average_f1(truth, [{5, 6}]) == 0.0
        assert f1_score({0, 1, 2}, {1, 2, 3}) == pytest.approx(2 / 3, abs=1e-15)
        assert average_f1([{0, 1, 2}], [{1, 2, 3}]) == pytest.approx(2 / 3, abs=1e-15)

    def test_empty_community_scores_zero(self):
        assert f1_score(set(), {1}) == 0
        assert average_f1([{0, 1}, set()], [{0, 1}]) == pytest.approx(0.5 * 0.5 + 0.5 * 1.0)

    @given(
        st.lists(st.frozensets(st.integers(0, 12), max_size=6), min_size=1, max_size=4),
        st.lists(st.frozensets(st.integers(0, 12), max_size=6), min_size=1, max_size=4),
    )
    def test_symmetric_and_bounded(self, a, b):
        v = average_f1(a, b)
        assert v == pytest.approx(average_f1(b, a), abs=1e-15)
        assert 0 <= v <= 1


class TestSpearman:
    def test_examples(self):
        assert spearman([1, 2, 3], [2, 1, 3]) == 0.5
        assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == -1

    @given(st.permutations(range(1, 9)))
    def test_self_and_reverse(self, p):
        assert spearman(p, p) == 1
        assert spearman(p, [9 - v for v in p]) == pytest.approx(-1, abs=1e-15)

    @given(st.permutations(range(1, 8)), st.permutations(range(1, 8)))
    def test_equals_pearson_of_ranks(self, p, q):
        assert spearman(p, q) == pytest.approx(np.corrcoef(p, q)[0, 1], abs=1e-12)

    def test_invalid(self):
        with pytest.raises(ValueError):
            spearman([1, 2], [1, 2, 3])
        with pytest.raises(ValueError):
            spearman([1], [1])


class TestEmpiricalPvalue:
    def test_examples(self):
        null = np.arange(999, dtype=float)
        assert empirical_pvalue(1000, null) == 1 / 1000
        assert empirical_pvalue(-1, null) == 1
        assert empirical_pvalue(499, null) == 501 / 1000

    @given(st.lists(finite, min_size=1, max_size=40), finite, finite)
    def test_monotone(self, null, a, b):
        lo, hi = sorted((a, b))
        assert 0 < empirical_pvalue(hi, null) <= empirical_pvalue(lo, null) <= 1


class TestRank:
    def test_single_attribute(self):
        g = grid_graph(4, 4)
        y = np.zeros(16, dtype=int)
        y[[0, 1, 4]] = 1
        for r in rank_attributes(g, [("a", y)], ["wavelet", "cut", "avg-modularity", "naive", "lgss"]):
            assert r.rows[0][0] == "a" and r.rows[0][2] == 1

    def test_orders_and_ties(self):
        g = grid_graph(6, 6)
        local = np.zeros(36, dtype=int)
        local[ball(g, 14, 1)] = 1
        scattered = np.zeros(36, dtype=int)
        scattered[[7, 10, 21, 25, 28]] = 1  # pairwise non-adjacent interior nodes
        attrs = [(2, scattered), (1, local), (3, np.zeros(36, dtype=int)), (0, local.copy())]
        res = {r.method: r for r in rank_attributes(g, attrs, ["cut", "modularity", "naive"])}
        assert [a for a, _, _ in res["cut"].rows] == [0, 1, 2, 3]
        assert [a for a, _, _ in res["modularity"].rows] == [0, 1, 2, 3]
        assert np.isnan(res["naive"].rows[-1][1])
        assert sorted(res["cut"].ranks().values()) == [1, 2, 3, 4]

    def test_wrong_length_skipped(self):
        g = grid_graph(3, 3)
        with pytest.warns(UserWarning):
            (r,) = rank_attributes(g, [("ok", [1] + [0] * 8), ("bad", [1, 0])], ["naive"])
        assert r.skipped == ["bad"] and len(r.rows) == 1

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            rank_attributes(grid_graph(2, 2), [("a", [1, 0, 0, 0])], ["nope"])

    def test_pipeline_spearman(self):
        # five attributes on a 5x6 grid, each a noisy copy of one community
        g = grid_graph(5, 6)
        community = set(ball(g, 14, 2).tolist())
        rng = np.random.default_rng(21)
        attrs, f1 = [], {}
        for k in range(5):
            y = np.zeros(30, dtype=int)
            y[list(community)] = 1
            flip = rng.choice(30, 2 * k, replace=False)
            y[flip] = 1 - y[flip]
            attrs.append((k, y))
            f1[k] = f1_score(community, set(np.flatnonzero(y).tolist()))
        (res,) = rank_attributes(g, attrs, ["wavelet"])
        # independent oracle: dense projection statistic, ties broken by id
        w = build_basis(g).to_dense()[:, 1:]
        stats = np.array([np.abs(w.T @ y).max() for _, y in attrs])
        assert [s for _, s, _ in sorted(res.rows)] == pytest.approx(stats, abs=1e-12)
        order = sorted(range(5), key=lambda k: (-stats[k], k))
        oracle = {k: i + 1 for i, k in enumerate(order)}
        truth = rankdata([-f1[k] for k in range(5)])
        got = spearman([res.ranks()[k] for k in range(5)], truth)
        assert got == pytest.approx(spearman([oracle[k] for k in range(5)], truth), abs=1e-12)
        assert -1 <= got <= 1
