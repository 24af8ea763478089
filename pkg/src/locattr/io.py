"""Text formats: edge lists, attribute files, point CSVs, attribute matrices, rankings.

Every reader raises ``InputError`` with the file name and line number of
the first bad line.
"""

from __future__ import annotations

import csv

import numpy as np

from .graph import Graph

__all__ = [
    "InputError",
    "read_edge_list",
    "write_edge_list",
    "read_attribute",
    "write_attribute",
    "read_points",
    "read_attribute_pairs",
    "read_ranking",
    "write_ranking_csv",
]


class InputError(ValueError):
    """Malformed or inconsistent input file."""


def _lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if line:
                    yield lineno, line.split()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not UTF-8 text") from exc


def read_edge_list(path, num_nodes=None):
    """Read ``u v [w]`` lines into a Graph.

    The node count defaults to one more than the largest id seen.
    """
    edges = []
    top = -1
    for lineno, tok in _lines(path):
        if len(tok) not in (2, 3):
            raise InputError(f"{path}:{lineno}: expected 'u v [w]', got {len(tok)} fields")
        try:
            u, v = int(tok[0]), int(tok[1])
            w = float(tok[2]) if len(tok) == 3 else 1.0
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
        if u < 0 or v < 0:
            raise InputError(f"{path}:{lineno}: node ids must be nonnegative")
        if u == v:
            raise InputError(f"{path}:{lineno}: self-loop on node {u}")
        if not np.isfinite(w) or w <= 0:
            raise InputError(f"{path}:{lineno}: weight must be finite and positive")
        edges.append((u, v, w, lineno))
        top = max(top, u, v)
    n = top + 1 if num_nodes is None else int(num_nodes)
    if top >= n:
        raise InputError(f"{path}: node id {top} exceeds num_nodes={n}")
    seen = {}
    for u, v, _, lineno in edges:
        key = (min(u, v), max(u, v))
        if key in seen:
            raise InputError(f"{path}:{lineno}: duplicate edge {key} (first on line {seen[key]})")
        seen[key] = lineno
    return Graph(n, [(u, v, w) for u, v, w, _ in edges])


def write_edge_list(g, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nodes {g.num_nodes} edges {g.num_edges}\n")
        for u, v, w in g.edges:
            fh.write(f"{u} {v}\n" if w == 1.0 else f"{u} {v} {w!r}\n")


def _binary(path, lineno, text):
    if text not in ("0", "1"):
        raise InputError(f"{path}:{lineno}: attribute value must be 0 or 1, got {text!r}")
    return int(text)


def read_attribute(path, num_nodes=None):
    """Read a binary attribute.

    Either one ``0``/``1`` per line (line order is node order) or ``id value``
    pairs with unlisted nodes set to 0.  A file that mixes the two forms is
    rejected.
    """
    rows = list(_lines(path))
    widths = {len(tok) for _, tok in rows}
    if widths - {1, 2}:
        lineno = next(ln for ln, tok in rows if len(tok) not in (1, 2))
        raise InputError(f"{path}:{lineno}: expected 'value' or 'id value'")
    if widths == {1, 2}:
        first = {len(rows[0][1])}
        lineno = next(ln for ln, tok in rows if len(tok) not in first)
        raise InputError(f"{path}:{lineno}: file mixes 'value' and 'id value' lines")
    if widths == {1}:
        y = np.array([_binary(path, ln, tok[0]) for ln, tok in rows], dtype=np.int8)
        if num_nodes is not None and len(y) != num_nodes:
            raise InputError(f"{path}: {len(y)} values for a graph with {num_nodes} nodes")
        return y
    pairs = {}
    for ln, tok in rows:
        try:
            i = int(tok[0])
        except ValueError as exc:
            raise InputError(f"{path}:{ln}: {exc}") from exc
        if i < 0 or (num_nodes is not None and i >= num_nodes):
            raise InputError(f"{path}:{ln}: node id {i} out of range")
        if i in pairs:
            raise InputError(f"{path}:{ln}: node {i} listed twice")
        pairs[i] = _binary(path, ln, tok[1])
    n = num_nodes if num_nodes is not None else (max(pairs) + 1 if pairs else 0)
    y = np.zeros(n, dtype=np.int8)
    for i, v in pairs.items():
        y[i] = v
    return y


def write_attribute(y, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(v)}\n" for v in y)


def read_points(path):
    """Read an ``id,x,y[,value]`` CSV; returns ``(ids, xy, values or None)``."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header[:3] != ["id", "x", "y"] or header[3:] not in ([], ["value"]):
            raise InputError(f"{path}:1: header must be 'id,x,y' or 'id,x,y,value'")
        has_value = len(header) == 4
        ids, xy, vals = [], [], []
        seen = set()
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                pid = int(row[0])
                x, y = float(row[1]), float(row[2])
                v = float(row[3]) if has_value else None
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
            if not (np.isfinite(x) and np.isfinite(y)):
                raise InputError(f"{path}:{lineno}: coordinates must be finite")
            if pid in seen:
                raise InputError(f"{path}:{lineno}: duplicate id {pid}")
            seen.add(pid)
            ids.append(pid)
            xy.append((x, y))
            vals.append(v)
    if not ids:
        raise InputError(f"{path}: no points")
    return np.array(ids, dtype=np.int64), np.array(xy), (np.array(vals) if has_value else None)


def read_attribute_pairs(path, num_nodes):
    """Read ``attr_id node_id`` lines into ``[(attr_id, attribute), ...]`` sorted by id."""
    members = {}
    for lineno, tok in _lines(path):
        if len(tok) != 2:
            raise InputError(f"{path}:{lineno}: expected 'attr_id node_id'")
        try:
            a, i = int(tok[0]), int(tok[1])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
        if not 0 <= i < num_nodes:
            raise InputError(f"{path}:{lineno}: node id {i} out of range [0, {num_nodes})")
        members.setdefault(a, set()).add(i)
    if not members:
        raise InputError(f"{path}: no attributes")
    out = []
    for a in sorted(members):
        y = np.zeros(num_nodes, dtype=np.int8)
        y[sorted(members[a])] = 1
        out.append((a, y))
    return out


def read_ranking(path):
    """Read ``attr_id rank`` lines into a dict."""
    ranks = {}
    for lineno, tok in _lines(path):
        if len(tok) != 2:
            raise InputError(f"{path}:{lineno}: expected 'attr_id rank'")
        try:
            ranks[int(tok[0])] = float(tok[1])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
    return ranks


def write_ranking_csv(results, fh):
    """Write ``attribute_id,method,statistic,rank`` rows for every RankingResult."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["attribute_id", "method", "statistic", "rank"])
    for res in results:
        for aid, stat, rank in res.rows:
            w.writerow([aid, res.method, "nan" if stat != stat else repr(float(stat)), rank])

