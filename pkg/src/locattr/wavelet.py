"""Local-set graph wavelet basis and the graph wavelet statistic.

The basis comes from recursively splitting node sets in two with a
geodesic 2-means.  Each split ``(S1, S2)`` contributes the unit vector

    w = sqrt(|S1| |S2| / (|S1| + |S2|)) * (1_S1 / |S1| - 1_S2 / |S2|)

and each connected component contributes one constant vector.  The
high-frequency coefficients are therefore scaled differences of set means
and are computed from a sparse matrix with ``O(N L)`` nonzeros.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .graph import Graph, GraphError, as_attribute, connected_components, local_set
from .rng import make_rng

__all__ = [
    "WaveletVector",
    "WaveletBasis",
    "WaveletReport",
    "partition_2means",
    "build_basis",
    "wavelet_statistic",
    "wavelet_threshold",
    "wavelet_pvalue_bound",
    "wavelet_condition",
    "detect_wavelet",
    "load_basis",
]

EXACT_HEADS_LIMIT = 4096
MAX_ROUNDS = 20
_MEDIAN_CANDIDATES = 32

_BASIS_CACHE: dict = {}


@dataclass(frozen=True)
class WaveletVector:
    set_a: np.ndarray
    set_b: np.ndarray
    depth: int = 0

    @property
    def scale(self):
        na, nb = len(self.set_a), len(self.set_b)
        return math.sqrt(na * nb / (na + nb))

    def dense(self, n):
        w = np.zeros(n)
        w[self.set_a] = self.scale / len(self.set_a)
        w[self.set_b] = -self.scale / len(self.set_b)
        return w

    def coefficient(self, y):
        y = np.asarray(y, dtype=np.float64)
        return self.scale * (y[self.set_a].mean() - y[self.set_b].mean())


@dataclass
class WaveletBasis:
    """Constant vectors (one per component) plus the high-frequency split vectors."""

    num_nodes: int
    constant_sets: list
    vectors: list
    level: int
    graph_fingerprint: str = ""
    seed: int = 0
    mode: str = "hop"
    _matrix: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    @property
    def matrix(self):
        """Sparse ``(num_vectors, N)`` matrix whose rows are the split vectors."""
        if self._matrix is None:
            rows, cols, vals = [], [], []
            for k, vec in enumerate(self.vectors):
                s = vec.scale
                rows += [k] * (len(vec.set_a) + len(vec.set_b))
                cols += vec.set_a.tolist() + vec.set_b.tolist()
                vals += [s / len(vec.set_a)] * len(vec.set_a) + [-s / len(vec.set_b)] * len(vec.set_b)
            self._matrix = sp.csr_matrix(
                (vals, (rows, cols)), shape=(len(self.vectors), self.num_nodes)
            )
        return self._matrix

    def coefficients(self, y):
        """High-frequency coefficients of ``y`` (a vector, or an ``N x K`` batch)."""
        y = np.asarray(y, dtype=np.float64)
        if y.shape[0] != self.num_nodes:
            raise GraphError(f"attribute has length {y.shape[0]}, basis has {self.num_nodes} nodes")
        return self.matrix @ y

    def statistics(self, ys):
        """Wavelet statistic of every column of an ``N x K`` batch."""
        coef = self.coefficients(ys)
        if coef.ndim == 1:
            coef = coef[:, None]
        if coef.shape[0] == 0:
            return np.zeros(coef.shape[1])
        return np.abs(coef).max(axis=0)

    def to_dense(self):
        """Full orthonormal basis as columns: constant vectors first, then the splits."""
        n = self.num_nodes
        cols = []
        for comp in self.constant_sets:
            c = np.zeros(n)
            c[comp] = 1 / math.sqrt(len(comp))
            cols.append(c)
        cols += [vec.dense(n) for vec in self.vectors]
        return np.column_stack(cols) if cols else np.zeros((n, 0))

    def to_json(self):
        return json.dumps({
            "format": "locattr-wavelet-basis",
            "version": 1,
            "graph_fingerprint": self.graph_fingerprint,
            "num_nodes": self.num_nodes,
            "seed": self.seed,
            "mode": self.mode,
            "level": self.level,
            "roots": [c.tolist() for c in self.constant_sets],
            "splits": [
                {"a": v.set_a.tolist(), "b": v.set_b.tolist(), "depth": v.depth}
                for v in self.vectors
            ],
        })

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        if d.get("format") != "locattr-wavelet-basis":
            raise ValueError("not a serialized wavelet basis")
        return cls(
            num_nodes=d["num_nodes"],
            constant_sets=[np.asarray(c, dtype=np.int64) for c in d["roots"]],
            vectors=[
                WaveletVector(np.asarray(s["a"], dtype=np.int64), np.asarray(s["b"], dtype=np.int64), s["depth"])
                for s in d["splits"]
            ],
            level=d["level"],
            graph_fingerprint=d["graph_fingerprint"],
            seed=d["seed"],
            mode=d.get("mode", "hop"),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


def load_basis(path, g=None):
    """Read a basis file; when ``g`` is given, its fingerprint must match."""
    with open(path, encoding="utf-8") as fh:
        basis = WaveletBasis.from_json(fh.read())
    if g is not None and basis.graph_fingerprint != g.fingerprint():
        raise ValueError(f"{path}: basis was built for a different graph")
    return basis


@dataclass
class WaveletReport:
    statistic: float
    threshold: float
    p_value_bound: float
    reject: bool
    argmax_vector: int

    def to_dict(self):
        return {
            "variant": "wavelet",
            "statistic": self.statistic,
            "threshold": self.threshold,
            "p_value_bound": self.p_value_bound,
            "reject": self.reject,
            "argmax_vector": self.argmax_vector,
        }


# ---------------------------------------------------------------------------
# partitioning


def _lengths(sub, mode):
    a = sub.adjacency.copy()
    if mode == "hop":
        a.data = np.ones_like(a.data)
    elif mode == "weighted":
        a.data = 1.0 / a.data
    else:
        raise GraphError(f"unknown distance mode {mode!r}")
    return a


def _pack_components(labels):
    comps = [np.flatnonzero(labels == c) for c in range(labels.max() + 1)]
    comps.sort(key=lambda c: (-len(c), c[0]))
    groups = [[], []]
    sizes = [0, 0]
    for c in comps:
        k = 0 if sizes[0] <= sizes[1] else 1
        groups[k].append(c)
        sizes[k] += len(c)
    return [np.sort(np.concatenate(gr)) for gr in groups]


def _assign(lengths, dist_a, dist_b, head_a, head_b):
    """Nearest-head assignment that keeps both clusters connected.

    Nodes are visited by increasing distance to their nearest head.  A node
    equidistant from both heads may only join a cluster in which a neighbor
    precedes it on a shortest path; among those, the currently smaller
    cluster wins, then the lower head id.
    """
    k = len(dist_a)
    label = np.full(k, -1, dtype=np.int64)
    label[head_a] = 0
    label[head_b] = 1
    sizes = [1, 1]
    dists = (dist_a, dist_b)
    order = np.lexsort((np.arange(k), np.minimum(dist_a, dist_b)))
    indptr, indices, data = lengths.indptr, lengths.indices, lengths.data
    for v in order:
        if label[v] >= 0:
            continue
        if dist_a[v] < dist_b[v]:
            c = 0
        elif dist_b[v] < dist_a[v]:
            c = 1
        else:
            nbrs = indices[indptr[v] : indptr[v + 1]]
            lens = data[indptr[v] : indptr[v + 1]]
            allowed = [
                h for h in (0, 1)
                if np.any((label[nbrs] == h) & np.isclose(dists[h][nbrs] + lens, dists[h][v]))
            ]
            if not allowed:
                allowed = [0, 1]
            c = min(allowed, key=lambda h: (sizes[h], (head_a, head_b)[h]))
        label[v] = c
        sizes[c] += 1
    return label


def _pick_median(cand, sums, current):
    """Minimizer of the distance sum; a tied current head stays put, else the lowest id wins."""
    best = cand[np.isclose(sums, sums.min(), rtol=1e-12, atol=0)]
    return int(current) if current in best else int(best.min())


def partition_2means(g, s, seed=0, mode="hop"):
    """Split a node set into two disjoint nonempty parts by geodesic 2-means.

    Heads start at the farthest pair (by geodesic distance inside the
    induced subgraph), nodes join the nearest head, and each head moves to
    the 1-median of its cluster until nothing changes or 20 rounds pass.  A
    disconnected set is instead split by packing whole components into two
    groups of balanced size.

    Returns
    -------
    (ndarray, ndarray)
        Sorted node ids; the first part holds the first head.
    """
    s = local_set(s, g.num_nodes)
    if len(s) < 2:
        raise GraphError("need at least two nodes to partition")
    if len(s) == 2:
        return s[:1], s[1:]
    sub = g.subgraph(s)
    ncomp, labels = csgraph.connected_components(sub.adjacency, directed=False)
    if ncomp > 1:
        a, b = _pack_components(labels)
        return s[a], s[b]
    lengths = _lengths(sub, mode)
    k = len(s)
    if k <= EXACT_HEADS_LIMIT:
        dist = csgraph.shortest_path(lengths, directed=False)
        flat = int(np.argmax(dist))
        head_a, head_b = divmod(flat, k)

        def from_head(h):
            return dist[h]

        def median(members, current):
            sums = dist[np.ix_(members, members)].sum(axis=1)
            return _pick_median(members, sums, current)
    else:
        rng = make_rng(seed, k)

        def from_head(h):
            return csgraph.shortest_path(lengths, indices=h, directed=False)

        start = int(rng.integers(k))
        d0 = from_head(start)
        a = int(np.argmax(d0))
        b = int(np.argmax(from_head(a)))
        head_a, head_b = min(a, b), max(a, b)

        def median(members, current):
            cand = rng.choice(members, size=min(_MEDIAN_CANDIDATES, len(members)), replace=False)
            cand = np.unique(np.append(cand, current))
            sums = np.array([from_head(int(c))[members].sum() for c in cand])
            return _pick_median(cand, sums, current)

    label = None
    for _ in range(MAX_ROUNDS):
        label = _assign(lengths, from_head(head_a), from_head(head_b), head_a, head_b)
        new_a = median(np.flatnonzero(label == 0), head_a)
        new_b = median(np.flatnonzero(label == 1), head_b)
        if (new_a, new_b) == (head_a, head_b):
            break
        head_a, head_b = new_a, new_b
    else:
        label = _assign(lengths, from_head(head_a), from_head(head_b), head_a, head_b)
    return s[label == 0], s[label == 1]


# ---------------------------------------------------------------------------
# basis and statistic


def build_basis(g, seed=0, mode="hop", cache=True):
    """Recursive 2-means wavelet basis of ``g``.

    Disconnected graphs get one constant vector per component and an
    independent split tree under each.  ``level`` is the measured tree
    depth: the largest number of splits between a root and a singleton.
    Results are memoized per ``(graph fingerprint, seed, mode)``.
    """
    key = (g.fingerprint(), int(seed), mode)
    if cache and key in _BASIS_CACHE:
        return _BASIS_CACHE[key]
    labels = connected_components(g)
    roots = [np.flatnonzero(labels == c) for c in range(labels.max() + 1)] if g.num_nodes else []
    vectors = []
    level = 0
    stack = [(r, 0) for r in reversed(roots) if len(r) > 1]
    while stack:
        s, depth = stack.pop()
        a, b = partition_2means(g, s, seed=seed, mode=mode)
        vectors.append(WaveletVector(a, b, depth))
        level = max(level, depth + 1)
        for child in (b, a):
            if len(child) > 1:
                stack.append((child, depth + 1))
    basis = WaveletBasis(g.num_nodes, roots, vectors, level, g.fingerprint(), int(seed), mode)
    if cache:
        _BASIS_CACHE[key] = basis
    return basis


def wavelet_statistic(basis, y):
    """Largest absolute high-frequency wavelet coefficient of ``y``."""
    y = as_attribute(y, basis.num_nodes)
    coef = basis.coefficients(y)
    return float(np.abs(coef).max()) if len(coef) else 0.0


def wavelet_threshold(n, delta):
    """``sqrt(log n) + sqrt(2 log(2/delta))``; type-1 error at most ``delta``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.sqrt(math.log(n)) + math.sqrt(2 * math.log(2 / delta))


def wavelet_pvalue_bound(stat, n):
    """``exp(-(stat - sqrt(log n))^2 / 2)`` above the null level, else 1."""
    if n < 2:
        raise ValueError("n must be at least 2")
    gap = stat - math.sqrt(math.log(n))
    if gap <= 0:
        return 1.0
    return min(1.0, math.exp(-0.5 * gap**2))


def wavelet_condition(n, c_size, mu, eps, rho, delta1, delta2):
    """Signal strength vs the level sufficient for detection; returns ``(lhs, rhs)``.

    A diagnostic only: it needs the unknown ``mu``, ``eps`` and ``|C|``.
    """
    lhs = math.sqrt(c_size * (1 - c_size / n)) * (mu - eps)
    rhs = math.sqrt(1 + rho * math.log(n)) * (
        math.sqrt(math.log(n)) + math.sqrt(2 * math.log(2 / delta1)) + math.sqrt(2 * math.log(2 / delta2))
    )
    return lhs, rhs


def detect_wavelet(g, y, delta=0.05, seed=0, basis=None):
    """Wavelet test of ``y`` on ``g`` at level ``delta``."""
    y = as_attribute(y, g.num_nodes)
    if basis is None:
        basis = build_basis(g, seed=seed)
    coef = basis.coefficients(y)
    if len(coef):
        k = int(np.argmax(np.abs(coef)))
        stat = float(abs(coef[k]))
    else:
        k, stat = -1, 0.0
    tau = wavelet_threshold(g.num_nodes, delta)
    return WaveletReport(stat, tau, wavelet_pvalue_bound(stat, g.num_nodes), stat > tau, k)
