"""Planted-ball attributes, matched nulls, and the AUC sweep runner.

Under H1 nodes inside a planted set C fire with probability ``mu`` and the
rest with ``eps``.  The matched H0 fires every node at the rate that gives the
same expected count, ``(mu |C| + eps (N - |C|)) / N``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .evaluation import auc, cut_cost, modularity
from .graph import GraphError, as_attribute, ball, local_set, total_variation
from .rng import make_rng

__all__ = [
    "PlantedModel",
    "SweepConfig",
    "draw_h1",
    "draw_h0",
    "scattered_null",
    "random_head",
    "score_attribute",
    "run_sweep",
    "sweep_csv",
    "DEFAULT_GRID",
    "SWEEP_METHODS",
]

DEFAULT_GRID = tuple(round(0.05 + 0.1 * i, 2) for i in range(10))
SWEEP_METHODS = ("wavelet", "lgss", "cgss", "naive", "modularity", "cut")
JOBS_ENV = "LOCATTR_JOBS"


@dataclass(frozen=True)
class PlantedModel:
    """Bernoulli activation with rate ``mu`` on ``c`` and ``eps`` elsewhere."""

    mu: float
    eps: float
    c: tuple
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.mu <= 1:
            raise ValueError(f"mu must lie in (0, 1], got {self.mu}")
        if not 0 <= self.eps < 1:
            raise ValueError(f"eps must lie in [0, 1), got {self.eps}")
        if self.eps > self.mu:
            raise ValueError(f"eps={self.eps} must not exceed mu={self.mu}")
        if len(self.c) == 0:
            raise ValueError("the planted set must be nonempty")
        object.__setattr__(self, "c", tuple(local_set(self.c).tolist()))

    def probabilities(self, n):
        p = np.full(n, self.eps)
        p[list(self.c)] = self.mu
        return p

    def matched_rate(self, n):
        k = len(self.c)
        return (self.mu * k + self.eps * (n - k)) / n


def _uniforms(g, m, trial):
    return make_rng(m.seed, trial).random(g.num_nodes)


def draw_h1(g, m, trial=0):
    """Planted-set attribute; reproducible from ``(m.seed, trial)``."""
    if m.c[-1] >= g.num_nodes:
        raise GraphError("planted set has nodes outside the graph")
    return (_uniforms(g, m, trial) < m.probabilities(g.num_nodes)).astype(np.int8)


def draw_h0(g, m, trial=0):
    """I.i.d. attribute at the matched rate, drawn from the same stream as ``draw_h1``.

    With ``mu == eps`` the two draws coincide.
    """
    return (_uniforms(g, m, trial) < m.matched_rate(g.num_nodes)).astype(np.int8)


def scattered_null(g, k, seed=0, trial=0):
    """Uniformly random ``k``-subset of nodes activated."""
    n = g.num_nodes
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}], got {k}")
    y = np.zeros(n, dtype=np.int8)
    y[make_rng(seed, trial).permutation(n)[:k]] = 1
    return y


def random_head(g, seed=0, stream=0):
    """Uniformly random cluster head."""
    return int(make_rng(seed, stream).integers(g.num_nodes))


def score_attribute(method, g, y, rho=None, delta=0.05, seed=0):
    """Detection score of ``y``, oriented so that larger means more localized.

    Cut cost is negated.  Scan statistics of a constant attribute are 0.
    """
    y = as_attribute(y, g.num_nodes)
    if method == "wavelet":
        from .wavelet import build_basis, wavelet_statistic

        return wavelet_statistic(build_basis(g, seed=seed), y)
    if method in ("lgss", "cgss"):
        from .scan import AnnealingSchedule, ScanConfig, cgss, lgss

        count = int(y.sum())
        if count in (0, len(y)):
            return 0.0
        r = total_variation(g, y, p=1) if rho is None else rho
        cfg = ScanConfig(rho=r, delta=delta, annealing=AnnealingSchedule(seed=seed))
        with warnings.catch_warnings():
            # a null draw with no feasible candidate simply scores 0
            warnings.simplefilter("ignore", RuntimeWarning)
            return (lgss if method == "lgss" else cgss)(g, y, cfg).statistic
    if method == "naive":
        return float(y.sum())
    if method == "modularity":
        return modularity(g, y)
    if method == "cut":
        return -cut_cost(g, y)
    raise ValueError(f"unknown method {method!r}")


@dataclass
class SweepConfig:
    """Grid of planted-ball experiments.

    Each radius uses the ball around one seeded random head; every
    ``(mu, eps)`` cell with ``mu > eps`` draws ``trials`` H1 and H0
    attributes and reports the AUC of each method.  ``rho`` defaults to the
    planted ball's own total variation.
    """

    radii: list
    trials: int = 100
    mu: list = field(default_factory=lambda: list(DEFAULT_GRID))
    eps: list = field(default_factory=lambda: list(DEFAULT_GRID))
    methods: list = field(default_factory=lambda: ["wavelet"])
    seed: int = 0
    delta: float = 0.05
    rho: float | None = None
    graph: str | None = None
    output: str | None = None

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ValueError("trials must be a positive integer")
        if not self.radii or any(int(r) < 0 for r in self.radii):
            raise ValueError("radii must be a nonempty list of nonnegative integers")
        for name in ("mu", "eps"):
            vals = getattr(self, name)
            if not vals or any(not 0 <= v <= 1 for v in vals):
                raise ValueError(f"{name} grid must be nonempty with values in [0, 1]")
        for m in self.methods:
            if m not in SWEEP_METHODS:
                raise ValueError(f"unknown method {m!r}")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.rho is not None and self.rho < 0:
            raise ValueError("rho must be nonnegative")

    @classmethod
    def from_json(cls, path_or_dict):
        d = path_or_dict
        if not isinstance(d, dict):
            with open(d, encoding="utf-8") as fh:
                d = json.load(fh)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**d)


def _cell(g, c, mu, eps, cfg, cell_id):
    """Scores under H1 and H0 for one cell: ``{method: (h1, h0)}``."""
    model = PlantedModel(mu, eps, c, seed=cfg.seed)
    ind = np.zeros(g.num_nodes)
    ind[list(model.c)] = 1
    rho = total_variation(g, ind, p=1) if cfg.rho is None else cfg.rho
    scores = {m: ([], []) for m in cfg.methods}
    for j in range(int(cfg.trials)):
        y1 = draw_h1(g, model, trial=_trial_stream(cell_id, 2 * j))
        y0 = draw_h0(g, model, trial=_trial_stream(cell_id, 2 * j + 1))
        for m in cfg.methods:
            scores[m][0].append(score_attribute(m, g, y1, rho, cfg.delta, cfg.seed))
            scores[m][1].append(score_attribute(m, g, y0, rho, cfg.delta, cfg.seed))
    return scores


def _trial_stream(cell_id, k):
    # cells never hold more than 2**20 draws
    return (cell_id << 20) + k


def run_sweep(g, cfg, jobs=None):
    """Run every cell of the sweep; returns rows ``(mu, eps, radius, method, auc, trials, seed)``.

    Cells with ``mu <= eps`` are not run and report ``auc = 0`` with ``trials = 0``.
    """
    if jobs is None:
        jobs = int(os.environ.get(JOBS_ENV, "1"))
    head = random_head(g, cfg.seed)
    tasks, layout = [], []
    cell_id = 0
    for radius in cfg.radii:
        c = ball(g, head, int(radius))
        for mu in cfg.mu:
            for eps in cfg.eps:
                if mu <= eps:
                    layout.append((mu, eps, radius, None))
                    continue
                tasks.append((c, mu, eps, cell_id))
                layout.append((mu, eps, radius, len(tasks) - 1))
                cell_id += 1
    if jobs > 1 and len(tasks) > 1:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=jobs)(delayed(_cell)(g, c, mu, eps, cfg, k) for c, mu, eps, k in tasks)
    else:
        results = [_cell(g, c, mu, eps, cfg, k) for c, mu, eps, k in tasks]
    rows = []
    for mu, eps, radius, idx in layout:
        for m in cfg.methods:
            if idx is None:
                rows.append((mu, eps, radius, m, 0.0, 0, cfg.seed))
            else:
                h1, h0 = results[idx][m]
                rows.append((mu, eps, radius, m, auc(h1, h0), int(cfg.trials), cfg.seed))
    return rows


def sweep_csv(rows):
    """CSV text with header ``mu,eps,radius,method,auc,trials,seed``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mu", "eps", "radius", "method", "auc", "trials", "seed"])
    for mu, eps, radius, m, a, trials, seed in rows:
        w.writerow([f"{mu:.2f}", f"{eps:.2f}", int(radius), m, f"{a:.6f}", trials, seed])
    return buf.getvalue()
