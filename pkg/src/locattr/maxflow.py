"""Exact s-t max-flow / min-cut and graph-cut minimization of pseudo-boolean energies.

The solver is the Boykov-Kolmogorov augmenting-path algorithm (two search
trees with orphan adoption) on a static CSR arc layout, compiled with
numba.  Capacities are real valued; an arc counts as residual when its
remaining capacity exceeds ``1e-12 * (1 + max capacity)``.  The returned
cut is canonical: the set of nodes reachable from the source in the final
residual network, i.e. the smallest minimum cut.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "FlowNetwork",
    "CutResult",
    "min_cut",
    "pseudo_boolean_min",
    "pseudo_boolean_energy",
    "read_dimacs",
]

_REL_EPS = 1e-12


@dataclass(frozen=True)
class FlowNetwork:
    """Directed network with nonnegative arc capacities.

    ``num_nodes`` counts every node including the two terminals.
    """

    num_nodes: int
    source: int
    sink: int
    tails: np.ndarray
    heads: np.ndarray
    capacities: np.ndarray

    def __post_init__(self):
        tails = np.asarray(self.tails, dtype=np.int64)
        heads = np.asarray(self.heads, dtype=np.int64)
        caps = np.asarray(self.capacities, dtype=np.float64)
        if not (tails.shape == heads.shape == caps.shape) or tails.ndim != 1:
            raise ValueError("tails, heads and capacities must be 1-D arrays of equal length")
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        for name, node in (("source", self.source), ("sink", self.sink)):
            if not 0 <= node < self.num_nodes:
                raise ValueError(f"{name} {node} out of range")
        if len(tails) and (min(tails.min(), heads.min()) < 0 or max(tails.max(), heads.max()) >= self.num_nodes):
            raise ValueError("arc endpoint out of range")
        if not np.all(np.isfinite(caps)) or np.any(caps < 0):
            raise ValueError("capacities must be finite and nonnegative")
        object.__setattr__(self, "tails", tails)
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "capacities", caps)

    @classmethod
    def from_arcs(cls, num_nodes, source, sink, arcs):
        arcs = list(arcs)
        if not arcs:
            return cls(num_nodes, source, sink, np.empty(0), np.empty(0), np.empty(0))
        t, h, c = zip(*arcs)
        return cls(num_nodes, source, sink, np.array(t), np.array(h), np.array(c, dtype=float))


@dataclass(frozen=True)
class CutResult:
    value: float
    source_side: frozenset = field(default_factory=frozenset)


class _ArcLayout:
    """Residual arc pairs sorted by tail, with a map from input arcs to slots."""

    def __init__(self, num_nodes, tails, heads):
        m = len(tails)
        all_t = np.concatenate([tails, heads])
        all_h = np.concatenate([heads, tails])
        order = np.argsort(all_t, kind="stable")
        slot = np.empty(2 * m, dtype=np.int64)
        slot[order] = np.arange(2 * m)
        self.heads = all_h[order]
        self.rev = np.empty(2 * m, dtype=np.int64)
        self.rev[slot[:m]] = slot[m:]
        self.rev[slot[m:]] = slot[:m]
        self.offsets = np.zeros(num_nodes + 1, dtype=np.int64)
        np.add.at(self.offsets, all_t + 1, 1)
        np.cumsum(self.offsets, out=self.offsets)
        self.forward = slot[:m]
        self.backward = slot[m:]
        self.num_nodes = num_nodes

    def residual(self, forward_caps, backward_caps=None):
        cap = np.zeros(len(self.heads))
        cap[self.forward] = forward_caps
        if backward_caps is not None:
            cap[self.backward] += backward_caps
        return cap


_FREE, _S, _T = 0, 1, 2
_TERMINAL, _ORPHAN = -1, -2


@njit(cache=True)
def _origin_distance(q, parent, heads, ts, dist, time):
    # hops from q to its terminal, or -1 when the chain ends in an orphan
    j = q
    d = 0
    while True:
        if ts[j] == time:
            d += dist[j]
            break
        pa = parent[j]
        if pa == _TERMINAL:
            break
        if pa == _ORPHAN:
            return -1
        d += 1
        j = heads[pa]
    j = q
    dd = d
    while ts[j] != time:
        ts[j] = time
        dist[j] = dd
        dd -= 1
        pa = parent[j]
        if pa == _TERMINAL:
            break
        j = heads[pa]
    return d


@njit(cache=True)
def _boykov_kolmogorov(n, s, t, offsets, heads, rev, cap, eps):
    tree = np.zeros(n, np.int8)
    parent = np.full(n, _ORPHAN, np.int64)
    ts = np.zeros(n, np.int64)
    dist = np.zeros(n, np.int64)
    active = np.zeros(n, np.bool_)
    queue = np.empty(n, np.int64)
    orphans = np.empty(n, np.int64)
    tree[s] = _S
    tree[t] = _T
    parent[s] = _TERMINAL
    parent[t] = _TERMINAL
    queue[0] = s
    queue[1] = t
    active[s] = True
    active[t] = True
    qh = 0
    qlen = 2
    time = 1
    flow = 0.0
    while qlen > 0:
        p = queue[qh]
        qh = (qh + 1) % n
        qlen -= 1
        active[p] = False
        side = tree[p]
        if side == _FREE:
            continue
        bridge = -1
        for a in range(offsets[p], offsets[p + 1]):
            q = heads[a]
            if side == _S:
                if cap[a] <= eps:
                    continue
            elif cap[rev[a]] <= eps:
                continue
            if tree[q] == _FREE:
                tree[q] = side
                parent[q] = rev[a]
                ts[q] = ts[p]
                dist[q] = dist[p] + 1
                if not active[q]:
                    active[q] = True
                    queue[(qh + qlen) % n] = q
                    qlen += 1
            elif tree[q] != side:
                bridge = a if side == _S else rev[a]
                break
        if bridge < 0:
            continue

        time += 1
        # bottleneck over bridge + both tree paths
        sn = heads[rev[bridge]]
        tn = heads[bridge]
        b = cap[bridge]
        v = sn
        while v != s:
            a = parent[v]
            if cap[rev[a]] < b:
                b = cap[rev[a]]
            v = heads[a]
        v = tn
        while v != t:
            a = parent[v]
            if cap[a] < b:
                b = cap[a]
            v = heads[a]
        cap[bridge] -= b
        cap[rev[bridge]] += b
        n_orph = 0
        v = sn
        while v != s:
            a = parent[v]
            nxt = heads[a]
            cap[rev[a]] -= b
            cap[a] += b
            if cap[rev[a]] <= eps:
                parent[v] = _ORPHAN
                orphans[n_orph] = v
                n_orph += 1
            v = nxt
        v = tn
        while v != t:
            a = parent[v]
            nxt = heads[a]
            cap[a] -= b
            cap[rev[a]] += b
            if cap[a] <= eps:
                parent[v] = _ORPHAN
                orphans[n_orph] = v
                n_orph += 1
            v = nxt
        flow += b

        while n_orph > 0:
            n_orph -= 1
            o = orphans[n_orph]
            side = tree[o]
            best = -1
            best_d = n + 1
            for a in range(offsets[o], offsets[o + 1]):
                q = heads[a]
                if tree[q] != side:
                    continue
                if side == _S:
                    if cap[rev[a]] <= eps:
                        continue
                elif cap[a] <= eps:
                    continue
                d = _origin_distance(q, parent, heads, ts, dist, time)
                if d >= 0 and d < best_d:
                    best = a
                    best_d = d
            if best >= 0:
                parent[o] = best
                ts[o] = time
                dist[o] = best_d + 1
                continue
            for a in range(offsets[o], offsets[o + 1]):
                q = heads[a]
                if tree[q] != side:
                    continue
                if side == _S:
                    residual = cap[rev[a]] > eps
                else:
                    residual = cap[a] > eps
                if residual and not active[q]:
                    active[q] = True
                    queue[(qh + qlen) % n] = q
                    qlen += 1
                pq = parent[q]
                if pq >= 0 and heads[pq] == o:
                    parent[q] = _ORPHAN
                    orphans[n_orph] = q
                    n_orph += 1
            tree[o] = _FREE

        if tree[p] != _FREE and not active[p]:
            active[p] = True
            queue[(qh + qlen) % n] = p
            qlen += 1
    return flow


@njit(cache=True)
def _reachable(n, s, offsets, heads, cap, eps):
    seen = np.zeros(n, np.bool_)
    queue = np.empty(n, np.int64)
    seen[s] = True
    queue[0] = s
    qh = 0
    qt = 1
    while qh < qt:
        u = queue[qh]
        qh += 1
        for a in range(offsets[u], offsets[u + 1]):
            v = heads[a]
            if not seen[v] and cap[a] > eps:
                seen[v] = True
                queue[qt] = v
                qt += 1
    return seen


def _eps(caps):
    return _REL_EPS * (1.0 + (float(caps.max()) if len(caps) else 0.0))


def min_cut(net):
    """Maximum flow value and the canonical minimum cut of ``net``."""
    layout = _ArcLayout(net.num_nodes, net.tails, net.heads)
    cap = layout.residual(net.capacities)
    eps = _eps(net.capacities)
    flow = _boykov_kolmogorov(net.num_nodes, net.source, net.sink, layout.offsets, layout.heads, layout.rev, cap, eps)
    seen = _reachable(net.num_nodes, net.source, layout.offsets, layout.heads, cap, eps)
    crossing = seen[net.tails] & ~seen[net.heads]
    value = float(net.capacities[crossing].sum())
    if abs(value - flow) > 1e-9 * (1.0 + value):
        raise ArithmeticError(f"max-flow {flow} disagrees with cut capacity {value}")
    side = frozenset(int(i) for i in np.flatnonzero(seen) if i not in (net.source, net.sink))
    return CutResult(value, side)


class _CutTemplate:
    """Arc layout for ``min sum unary*x + pair * sum w|x_u - x_v|`` on a fixed graph.

    Node ``n`` is the source, ``n + 1`` the sink.  Arc order: graph edges
    (each as one arc whose reverse carries the same capacity), then
    source->i, then i->sink.
    """

    def __init__(self, g):
        n = g.num_nodes
        nodes = np.arange(n, dtype=np.int64)
        tails = np.concatenate([g.u, np.full(n, n), nodes])
        heads = np.concatenate([g.v, nodes, np.full(n, n + 1)])
        self.layout = _ArcLayout(n + 2, tails, heads)
        self.n = n
        self.m = g.num_edges
        self.w = g.w
        lay = self.layout
        self.edge_fwd = lay.forward[: self.m]
        self.edge_bwd = lay.backward[: self.m]
        self.src_arc = lay.forward[self.m : self.m + n]
        self.snk_arc = lay.forward[self.m + n :]

    def capacities(self, unary, pair):
        cap = np.zeros(len(self.layout.heads))
        cap[self.edge_fwd] = pair * self.w
        cap[self.edge_bwd] = pair * self.w
        cap[self.src_arc] = np.maximum(-unary, 0.0)
        cap[self.snk_arc] = np.maximum(unary, 0.0)
        return cap


def _template(g):
    if "cut_template" not in g._cache:
        g._cache["cut_template"] = _CutTemplate(g)
    return g._cache["cut_template"]


def pseudo_boolean_energy(g, unary, pair_weight, x):
    """``sum unary*x + pair_weight * sum_e w_e |x_u - x_v|``."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.dot(unary, x) + pair_weight * np.dot(g.w, np.abs(x[g.u] - x[g.v])))


def pseudo_boolean_min(g, unary, pair_weight):
    """Exact binary minimizer of a submodular unary + total-variation energy.

    Parameters
    ----------
    g : Graph
    unary : array_like
        Cost of setting ``x_i = 1``.
    pair_weight : float
        Nonnegative multiplier on the weighted cut ``sum w |x_u - x_v|``.

    Returns
    -------
    x : ndarray of int8
        Minimizer; among ties the one with the fewest ones (smallest cut).
    objective : float
    """
    unary = np.asarray(unary, dtype=np.float64)
    if unary.shape != (g.num_nodes,):
        raise ValueError(f"unary has shape {unary.shape}, expected ({g.num_nodes},)")
    pair_weight = float(pair_weight)
    if pair_weight < 0:
        raise ValueError("pair_weight must be nonnegative (submodularity)")
    tpl = _template(g)
    cap = tpl.capacities(unary, pair_weight)
    lay = tpl.layout
    n = g.num_nodes
    eps = _eps(cap)
    flow = _boykov_kolmogorov(n + 2, n, n + 1, lay.offsets, lay.heads, lay.rev, cap, eps)
    seen = _reachable(n + 2, n, lay.offsets, lay.heads, cap, eps)
    x = seen[:n].astype(np.int8)
    energy = pseudo_boolean_energy(g, unary, pair_weight, x)
    # the cut's crossing capacity is the energy shifted by the negative unaries
    value = energy - float(np.minimum(unary, 0.0).sum())
    if abs(value - flow) > 1e-9 * (1.0 + abs(value)):
        raise ArithmeticError(f"max-flow {flow} disagrees with cut capacity {value}")
    return x, energy


def read_dimacs(path):
    """Parse a DIMACS max-flow file (``p max``, ``n <id> s|t``, ``a <u> <v> <c>``; 1-based)."""
    n = source = sink = None
    arcs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0] == "c":
                continue
            try:
                if parts[0] == "p":
                    n = int(parts[2])
                elif parts[0] == "n":
                    if parts[2] == "s":
                        source = int(parts[1]) - 1
                    else:
                        sink = int(parts[1]) - 1
                elif parts[0] == "a":
                    arcs.append((int(parts[1]) - 1, int(parts[2]) - 1, float(parts[3])))
                else:
                    raise ValueError(parts[0])
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed DIMACS line {line.strip()!r}") from exc
    if n is None or source is None or sink is None:
        raise ValueError(f"{path}: missing problem, source or sink line")
    return FlowNetwork.from_arcs(n, source, sink, arcs)
