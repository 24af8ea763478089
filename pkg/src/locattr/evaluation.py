"""Metrics and baselines for judging detectors and ranking attributes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .graph import GraphError, as_attribute, total_variation

__all__ = [
    "DegenerateGraphError",
    "RankingResult",
    "auc",
    "modularity",
    "cut_cost",
    "naive_statistic",
    "f1_score",
    "average_f1",
    "spearman",
    "empirical_pvalue",
    "rank_attributes",
    "RANK_METHODS",
]

# methods where smaller values mean "more localized"
_ASCENDING = {"cut", "avg-cut"}
RANK_METHODS = ("wavelet", "lgss", "cgss", "modularity", "cut", "avg-modularity", "avg-cut", "naive")


class DegenerateGraphError(GraphError):
    """The metric is undefined on this graph (e.g. no edges)."""


def _finite_sample(x, name):
    x = np.asarray(x, dtype=np.float64).ravel()
    if len(x) == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def auc(scores_h1, scores_h0):
    """Area under the ROC curve, ``P(s1 > s0) + P(s1 = s0) / 2``.

    Computed from the Mann-Whitney rank sum with average ranks for ties, so it
    is exact for finite samples.
    """
    a = _finite_sample(scores_h1, "scores_h1")
    b = _finite_sample(scores_h0, "scores_h0")
    ranks = rankdata(np.concatenate([a, b]))
    u = ranks[: len(a)].sum() - len(a) * (len(a) + 1) / 2
    return float(u / (len(a) * len(b)))


def modularity(g, c):
    """``sum_ij (A_ij - d_i d_j / M) c_i c_j`` with ``M = sum_i d_i``.

    The sum runs over all ordered pairs, diagonal included, so a single node
    contributes ``-d_i^2 / M``.
    """
    x = np.asarray(as_attribute(c, g.num_nodes), dtype=np.float64)
    d = g.degree
    m = d.sum()
    if m <= 0:
        raise DegenerateGraphError("modularity is undefined on an edgeless graph")
    return float(x @ (g.adjacency @ x) - (d @ x) ** 2 / m)


def cut_cost(g, c):
    """Number of edges leaving the activated set."""
    return total_variation(g, as_attribute(c, g.num_nodes), p=0)


def naive_statistic(y):
    """Activated count ``1^T y`` and the mean ``1^T y / N``."""
    y = np.asarray(y)
    count = int(np.count_nonzero(y))
    return count, (count / len(y) if len(y) else 0.0)


def f1_score(a, b):
    """F1 of predicted set ``b`` against reference ``a``; 0 when disjoint."""
    a, b = set(a), set(b)
    inter = len(a & b)
    if inter == 0:
        return 0.0
    precision = inter / len(b)
    recall = inter / len(a)
    return 2 * precision * recall / (precision + recall)


def average_f1(truth, induced):
    """Symmetric best-match F1 between two collections of node sets.

    Each ground-truth set is matched to its best induced set and each induced
    set to its best ground-truth set; the result averages the two
    directional means.
    """
    truth = [set(map(int, c)) for c in truth]
    induced = [set(map(int, c)) for c in induced]
    if not truth or not induced:
        raise ValueError("both community collections must be nonempty")
    f = np.array([[f1_score(t, s) for s in induced] for t in truth])
    return float(0.5 * f.max(axis=1).mean() + 0.5 * f.max(axis=0).mean())


def spearman(rank_a, rank_b):
    """``1 - 6 sum d_i^2 / (K (K^2 - 1))`` for two rankings of K items."""
    p = np.asarray(rank_a, dtype=np.float64)
    q = np.asarray(rank_b, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"rankings must have equal length, got {p.shape} and {q.shape}")
    k = len(p)
    if k < 2:
        raise ValueError("need at least two ranked items")
    return float(1 - 6 * np.sum((p - q) ** 2) / (k * (k * k - 1)))


def empirical_pvalue(observed, null_scores):
    """Add-one permutation p-value ``(1 + #{null >= observed}) / (1 + #null)``."""
    null = _finite_sample(null_scores, "null_scores")
    return float((1 + np.count_nonzero(null >= observed)) / (1 + len(null)))


@dataclass
class RankingResult:
    """Ranking of attributes under one method.

    ``rows`` holds ``(attribute_id, statistic, rank)`` sorted by rank.  Scores
    of zero-activation attributes are ``nan`` and they share the tail.
    """

    method: str
    rows: list
    skipped: list

    def ranks(self):
        return {aid: rank for aid, _, rank in self.rows}


def _score(method, g, y, rho, delta, seed):
    count = int(np.count_nonzero(y))
    if count == 0:
        return math.nan
    if method == "wavelet":
        from .wavelet import build_basis, wavelet_statistic

        return wavelet_statistic(build_basis(g, seed=seed), y)
    if method in ("lgss", "cgss"):
        from .scan import AnnealingSchedule, ScanConfig, cgss, lgss

        if count == len(y):
            return 0.0
        r = rho if rho is not None else total_variation(g, y, p=1)
        cfg = ScanConfig(rho=max(r, 0.0), delta=delta, annealing=AnnealingSchedule(seed=seed))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return (lgss if method == "lgss" else cgss)(g, y, cfg).statistic
    if method == "modularity":
        return modularity(g, y)
    if method == "cut":
        return cut_cost(g, y)
    if method == "avg-modularity":
        return modularity(g, y) / count
    if method == "avg-cut":
        return cut_cost(g, y) / count
    if method == "naive":
        return float(count)
    raise ValueError(f"unknown ranking method {method!r}")


def rank_attributes(g, attrs, methods, rho=None, delta=0.05, seed=0):
    """Rank attributes by each method's statistic.

    Parameters
    ----------
    g : Graph
    attrs : sequence of (id, array)
    methods : sequence of str
        Any of ``RANK_METHODS``.  ``cut`` and ``avg-cut`` rank ascending, the
        rest descending.  Ties go to the lower attribute id.
    rho : float, optional
        Cut budget for the scan methods; defaults to each attribute's own
        total variation.

    Returns
    -------
    list of RankingResult
        One per method.  Attributes of the wrong length are skipped with a
        warning and listed in ``skipped``; attributes with no activated node
        rank last.
    """
    attrs = list(attrs)
    if not attrs:
        raise ValueError("need at least one attribute")
    for m in methods:
        if m not in RANK_METHODS:
            raise ValueError(f"unknown ranking method {m!r}")
    valid, skipped = [], []
    for aid, y in attrs:
        try:
            valid.append((aid, as_attribute(y, g.num_nodes)))
        except GraphError as exc:
            warnings.warn(f"attribute {aid}: {exc}; skipped", stacklevel=2)
            skipped.append(aid)
    results = []
    for m in methods:
        scored = [(aid, _score(m, g, y, rho, delta, seed)) for aid, y in valid]
        sign = 1.0 if m in _ASCENDING else -1.0
        order = sorted(
            scored,
            key=lambda r: (math.isnan(r[1]), sign * r[1] if not math.isnan(r[1]) else 0.0, r[0]),
        )
        rows = [(aid, s, k + 1) for k, (aid, s) in enumerate(order)]
        results.append(RankingResult(m, rows, list(skipped)))
    return results
