"""Weighted undirected graphs and the operators every detector consumes.

Edges are stored once, in canonical ``u < v`` order, together with a CSR
neighbor index.  The incidence operator is applied edge-wise and never
materialized as a dense matrix.
"""

from __future__ import annotations

import hashlib
from collections import deque

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import Delaunay, cKDTree

__all__ = [
    "Graph",
    "GraphError",
    "as_attribute",
    "local_set",
    "incidence_apply",
    "total_variation",
    "geodesic_distances",
    "knn_graph",
    "ball",
    "grid_graph",
    "road_like_graph",
    "connected_components",
]


class GraphError(ValueError):
    """Invalid graph, attribute, or operator input."""


class Graph:
    """Immutable weighted undirected graph on nodes ``0..N-1``.

    Parameters
    ----------
    num_nodes : int
        Number of nodes N.
    edges : iterable of (u, v) or (u, v, w)
        Each unordered pair may appear once.  Weights default to 1 and must
        be strictly positive.
    """

    def __init__(self, num_nodes, edges=()):
        num_nodes = int(num_nodes)
        if num_nodes < 0:
            raise GraphError("num_nodes must be nonnegative")
        rows = [tuple(e) for e in edges]
        u = np.empty(len(rows), dtype=np.int64)
        v = np.empty(len(rows), dtype=np.int64)
        w = np.ones(len(rows), dtype=np.float64)
        for i, e in enumerate(rows):
            if len(e) not in (2, 3):
                raise GraphError(f"edge {i} must be (u, v) or (u, v, w), got {e!r}")
            a, b = int(e[0]), int(e[1])
            u[i], v[i] = min(a, b), max(a, b)
            if len(e) == 3:
                w[i] = float(e[2])
        self._init_arrays(num_nodes, u, v, w)

    @classmethod
    def from_arrays(cls, num_nodes, u, v, w=None):
        """Build from parallel endpoint (and weight) arrays."""
        g = cls.__new__(cls)
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.ones(len(u)) if w is None else np.asarray(w, dtype=np.float64)
        g._init_arrays(int(num_nodes), np.minimum(u, v), np.maximum(u, v), w.copy())
        return g

    def _init_arrays(self, n, u, v, w):
        if len(u):
            if u.min() < 0 or v.max() >= n:
                raise GraphError(f"node ids must lie in [0, {n})")
            if np.any(u == v):
                raise GraphError("self-loops are not allowed")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise GraphError("edge weights must be finite and strictly positive")
        order = np.lexsort((v, u))
        u, v, w = u[order], v[order], w[order]
        if len(u) > 1:
            dup = (u[1:] == u[:-1]) & (v[1:] == v[:-1])
            if np.any(dup):
                i = int(np.flatnonzero(dup)[0])
                raise GraphError(f"duplicate edge ({u[i]}, {v[i]})")
        for arr in (u, v, w):
            arr.setflags(write=False)
        self.num_nodes = n
        self.u, self.v, self.w = u, v, w
        adj = sp.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(n, n),
        ).tocsr()
        adj.sort_indices()
        self._adj = adj
        self._cache = {}

    @property
    def num_edges(self):
        return len(self.u)

    @property
    def edges(self):
        """List of ``(u, v, w)`` triples with ``u < v``."""
        return list(zip(self.u.tolist(), self.v.tolist(), self.w.tolist()))

    @property
    def adjacency(self):
        """Symmetric CSR adjacency matrix (a copy-free view; do not mutate)."""
        return self._adj

    @property
    def degree(self):
        """Weighted degree of each node."""
        return np.asarray(self._adj.sum(axis=1)).ravel()

    @property
    def is_unweighted(self):
        return bool(np.all(self.w == 1.0))

    def neighbors(self, i):
        a = self._adj
        return a.indices[a.indptr[i] : a.indptr[i + 1]]

    def subgraph(self, nodes):
        """Induced subgraph on ``nodes`` (relabelled to ``0..k-1`` in the given order)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        pos = np.full(self.num_nodes, -1, dtype=np.int64)
        pos[nodes] = np.arange(len(nodes))
        keep = (pos[self.u] >= 0) & (pos[self.v] >= 0)
        return Graph.from_arrays(len(nodes), pos[self.u[keep]], pos[self.v[keep]], self.w[keep])

    def fingerprint(self):
        """Stable SHA-256 of the canonical edge list."""
        if "fingerprint" not in self._cache:
            h = hashlib.sha256()
            h.update(np.int64(self.num_nodes).tobytes())
            h.update(self.u.astype("<i8").tobytes())
            h.update(self.v.astype("<i8").tobytes())
            h.update(self.w.astype("<f8").tobytes())
            self._cache["fingerprint"] = h.hexdigest()
        return self._cache["fingerprint"]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.w, other.w)
        )

    __hash__ = None

    def __repr__(self):
        return f"Graph(num_nodes={self.num_nodes}, num_edges={self.num_edges})"


def as_attribute(y, n=None):
    """Validate a binary node attribute and return it as an int8 array."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise GraphError("attribute must be one-dimensional")
    if n is not None and len(arr) != n:
        raise GraphError(f"attribute has length {len(arr)}, graph has {n} nodes")
    if arr.dtype == bool:
        return arr.astype(np.int8)
    if not np.all((arr == 0) | (arr == 1)):
        raise GraphError("attribute entries must be 0 or 1")
    return arr.astype(np.int8)


def local_set(members, n=None):
    """Sorted, duplicate-free node-id array."""
    arr = np.asarray(sorted(set(int(m) for m in members)), dtype=np.int64)
    if n is not None and len(arr) and (arr[0] < 0 or arr[-1] >= n):
        raise GraphError(f"node ids must lie in [0, {n})")
    return arr


def _check_length(g, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (g.num_nodes,):
        raise GraphError(f"vector has shape {x.shape}, expected ({g.num_nodes},)")
    return x


def incidence_apply(g, x):
    """Edge-indexed vector ``w_e * (x_u - x_v)`` for each edge ``e = (u, v)``, ``u < v``."""
    x = _check_length(g, x)
    return g.w * (x[g.u] - x[g.v])


def total_variation(g, x, p=1):
    """l0 (boundary-edge count) or l1 (boundary weight) norm of the incidence image."""
    if p not in (0, 1):
        raise GraphError(f"unsupported total-variation norm p={p!r}; use 0 or 1")
    d = incidence_apply(g, x)
    if p == 0:
        return float(np.count_nonzero(d))
    return float(np.abs(d).sum())


def geodesic_distances(g, source, mode="hop"):
    """Shortest-path distances from ``source``; unreachable nodes get ``inf``.

    ``mode="weighted"`` uses edge length ``1/w`` so strong ties are short.
    """
    if not 0 <= source < g.num_nodes:
        raise GraphError(f"source {source} out of range")
    if mode == "hop":
        return csgraph.shortest_path(g.adjacency, indices=source, unweighted=True, directed=False)
    if mode == "weighted":
        return csgraph.shortest_path(_length_matrix(g), indices=source, directed=False)
    raise GraphError(f"unknown distance mode {mode!r}")


def _length_matrix(g):
    if "lengths" not in g._cache:
        a = g.adjacency.copy()
        a.data = 1.0 / a.data
        g._cache["lengths"] = a
    return g._cache["lengths"]


def connected_components(g):
    """Component label per node (labels ordered by smallest member)."""
    _, labels = csgraph.connected_components(g.adjacency, directed=False)
    return labels


def knn_graph(points, k):
    """Union-symmetrized k-nearest-neighbor graph with unit weights.

    Parameters
    ----------
    points : sequence of (id, (x, y))
        Node ``i`` of the result is the point with the ``i``-th smallest id.
    k : int

    Returns
    -------
    graph : Graph
    ids : ndarray
        Point id of each node.
    """
    k = int(k)
    if k < 1:
        raise GraphError("k must be at least 1")
    pts = sorted(((int(pid), tuple(map(float, xy))) for pid, xy in points), key=lambda p: p[0])
    ids = np.array([p[0] for p in pts], dtype=np.int64)
    if len(ids) != len(np.unique(ids)):
        raise GraphError("duplicate point ids")
    n = len(pts)
    if n < k + 1:
        raise GraphError(f"need at least k+1={k + 1} points, got {n}")
    xy = np.array([p[1] for p in pts], dtype=np.float64).reshape(n, 2)
    if not np.all(np.isfinite(xy)):
        raise GraphError("coordinates must be finite")
    tree = cKDTree(xy)
    edges = set()
    m = min(n, k + 1)
    while True:
        dist, idx = tree.query(xy, k=m)
        dist = np.atleast_2d(dist)
        idx = np.atleast_2d(idx)
        done = True
        for i in range(n):
            cand = [(d, j) for d, j in zip(dist[i], idx[i]) if j != i and j < n]
            cand.sort()
            # need strictly more candidates than k unless all points were queried
            if m < n and (len(cand) <= k or cand[k - 1][0] >= dist[i][-1]):
                done = False
                break
        if done:
            break
        m = min(n, 2 * m)
    for i in range(n):
        cand = sorted((d, j) for d, j in zip(dist[i], idx[i]) if j != i and j < n)
        for _, j in cand[:k]:
            edges.add((min(i, int(j)), max(i, int(j))))
    edges = sorted(edges)
    return Graph(n, edges), ids


def ball(g, head, k):
    """Nodes within ``k`` hops of ``head`` (always contains ``head``)."""
    if not 0 <= head < g.num_nodes:
        raise GraphError(f"head {head} out of range")
    dist = {int(head): 0}
    queue = deque([int(head)])
    while queue:
        i = queue.popleft()
        if dist[i] == k:
            continue
        for j in g.neighbors(i):
            j = int(j)
            if j not in dist:
                dist[j] = dist[i] + 1
                queue.append(j)
    return np.array(sorted(dist), dtype=np.int64)


def grid_graph(rows, cols):
    """Unit-weight 4-connected lattice; node ``r*cols + c``."""
    idx = np.arange(rows * cols).reshape(rows, cols)
    u = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    v = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    return Graph.from_arrays(rows * cols, u, v)


def road_like_graph(num_nodes, num_edges=None, seed=0):
    """Sparse planar graph that resembles a road network.

    Points are uniform in the unit square.  The Euclidean minimum spanning
    tree of their Delaunay triangulation keeps the graph connected, then the
    shortest remaining Delaunay edges are added until ``num_edges`` is reached
    (default ``1.25 * num_nodes``, an average degree of 2.5).

    Returns
    -------
    graph : Graph
    points : ndarray of shape (num_nodes, 2)
    """
    from .rng import make_rng

    n = int(num_nodes)
    if n < 3:
        raise GraphError("need at least three points")
    m = int(round(1.25 * n)) if num_edges is None else int(num_edges)
    pts = make_rng(seed).random((n, 2))
    simplices = Delaunay(pts).simplices
    e = np.vstack([simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [0, 2]]])
    e = np.unique(np.sort(e, axis=1), axis=0)
    if not n - 1 <= m <= len(e):
        raise GraphError(f"num_edges must lie in [{n - 1}, {len(e)}]")
    length = np.linalg.norm(pts[e[:, 0]] - pts[e[:, 1]], axis=1)
    tree = minimum_spanning_tree(sp.coo_matrix((length, (e[:, 0], e[:, 1])), shape=(n, n))).tocoo()
    in_tree = set(zip(np.minimum(tree.row, tree.col).tolist(), np.maximum(tree.row, tree.col).tolist()))
    is_tree = np.array([(a, b) in in_tree for a, b in e.tolist()])
    extra = np.flatnonzero(~is_tree)
    extra = extra[np.argsort(length[extra], kind="stable")][: m - int(is_tree.sum())]
    keep = np.concatenate([np.flatnonzero(is_tree), extra])
    return Graph.from_arrays(n, e[keep, 0], e[keep, 1]), pts
