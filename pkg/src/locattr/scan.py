"""Graph scan statistics for a binary attribute.

Two computational routes to the cut-budgeted generalized likelihood ratio
``max_t max_x t * KL(x'y / t || mean(y))`` subject to ``TV_1(x) <= rho`` and
``sum(x) <= t``:

* **LGSS** keeps ``x`` binary.  For each size budget ``t`` the multipliers of
  the two constraints are searched by simulated annealing on the Lagrangian
  dual; every inner problem is an exact s-t graph cut.  The reported
  statistic is the best primal-feasible objective seen along the way.
* **CGSS** relaxes ``x`` to ``[0, 1]^N``; each budget is a linear program.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import highspy
import numpy as np
import scipy.sparse as sp
from numba import njit

from .graph import as_attribute
from .maxflow import _boykov_kolmogorov, _reachable, _template, pseudo_boolean_min
from .rng import make_rng

__all__ = [
    "DegenerateBackgroundError",
    "NumericalError",
    "AnnealingSchedule",
    "ScanConfig",
    "ScanSolution",
    "ScanReport",
    "bernoulli_kl",
    "scan_objective",
    "default_t_grid",
    "lgss_inner",
    "lgss",
    "cgss_inner",
    "cgss",
    "lgss_threshold",
    "cgss_threshold",
    "scan_pvalue_bound",
    "scan_condition",
    "relaxed_scan_condition",
]


class DegenerateBackgroundError(ValueError):
    """The global activation rate is 0 or 1, so the KL background is undefined."""


class NumericalError(ArithmeticError):
    """An inner solver failed to reach a certified optimum."""


@dataclass(frozen=True)
class AnnealingSchedule:
    """Metropolis search over the two Lagrange multipliers.

    Proposals multiply each multiplier by ``exp(proposal_scale * N(0, 1))``.
    ``eta1``/``eta2`` of None start at the global rate and at 1.
    """

    initial_temperature: float = 1.0
    cooling: float = 0.95
    steps: int = 300
    proposal_scale: float = 0.3
    seed: int = 0
    eta1: float | None = None
    eta2: float | None = None

    def __post_init__(self):
        if not 0 < self.cooling < 1:
            raise ValueError("cooling ratio must lie in (0, 1)")
        if self.initial_temperature <= 0 or self.proposal_scale <= 0 or self.steps < 0:
            raise ValueError("temperature and proposal scale must be positive, steps nonnegative")


@dataclass(frozen=True)
class ScanConfig:
    """Parameters shared by LGSS and CGSS.

    ``t_grid`` of None means :func:`default_t_grid` for the observed attribute.
    """

    rho: float
    t_grid: tuple | None = None
    annealing: AnnealingSchedule = field(default_factory=AnnealingSchedule)
    lp_tolerance: float = 1e-7
    delta: float = 0.05

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.lp_tolerance <= 0:
            raise ValueError("lp_tolerance must be positive")
        _check_delta(self.delta)
        if self.t_grid is not None:
            grid = tuple(float(t) for t in self.t_grid)
            if not grid or grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError("t_grid must be nonempty, >= 1 and strictly increasing")
            object.__setattr__(self, "t_grid", grid)


@dataclass
class ScanSolution:
    x: np.ndarray
    t: float
    objective: float
    feasible: bool


@dataclass
class ScanReport:
    variant: str
    statistic: float
    threshold: float
    p_value_bound: float
    reject: bool
    solution: ScanSolution
    no_feasible_solution: bool = False
    dual_value: float | None = None

    @property
    def support(self):
        return np.flatnonzero(self.solution.x > 0.5)

    def to_dict(self, include_x=False):
        out = {
            "variant": self.variant,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "p_value_bound": self.p_value_bound,
            "reject": self.reject,
            "t": self.solution.t,
            "support": self.support.tolist(),
        }
        if self.no_feasible_solution:
            out["warning"] = "no feasible candidate above the background; statistic set to 0"
        if include_x:
            out["x"] = np.asarray(self.solution.x, dtype=float).tolist()
        return out


def _check_delta(delta):
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


@njit(cache=True)
def _kl(a, b):
    out = 0.0
    if a > 0.0:
        out += a * math.log(a / b)
    if a < 1.0:
        out += (1.0 - a) * math.log((1.0 - a) / (1.0 - b))
    return out


def bernoulli_kl(a, b):
    """KL divergence between Bernoulli(a) and Bernoulli(b), natural log, ``0 log 0 = 0``."""
    if not 0 < b < 1:
        raise DegenerateBackgroundError(f"background rate must lie in (0, 1), got {b}")
    if not 0 <= a <= 1:
        raise ValueError(f"a must lie in [0, 1], got {a}")
    return float(_kl(float(a), float(b)))


def _background(y):
    ybar = float(np.mean(y))
    if not 0 < ybar < 1:
        raise DegenerateBackgroundError(
            "attribute is all-zeros or all-ones; the scan statistic is undefined"
        )
    return ybar


def scan_objective(y, x, t):
    """``t * KL(x'y/t || mean(y))`` when the candidate mean exceeds the global mean, else 0."""
    y = np.asarray(y, dtype=np.float64)
    ybar = _background(y)
    t = float(t)
    if t < 1:
        raise ValueError("t must be at least 1")
    a = float(np.dot(x, y)) / t
    if a <= ybar:
        return 0.0
    if a > 1 + 1e-9:
        raise ValueError("x'y / t exceeds 1; x is not within the size budget")
    return t * bernoulli_kl(min(a, 1.0), ybar)


def default_t_grid(n, y=None):
    """Powers of two up to ``n/2`` plus the activated count of ``y``."""
    grid = set()
    t = 1
    while t <= max(n / 2, 1):
        grid.add(float(t))
        t *= 2
    if y is not None:
        k = float(np.sum(y))
        if k >= 1:
            grid.add(min(k, float(n)))
    return tuple(sorted(grid))


# ---------------------------------------------------------------------------
# LGSS


def lgss_inner(g, y, eta1, eta2):
    """Binary minimizer of ``-x'y + eta1 * sum(x) + eta2 * TV_1(x)`` and its value ``q``."""
    if eta1 < 0 or eta2 < 0:
        raise ValueError("multipliers must be nonnegative")
    y = np.asarray(y, dtype=np.float64)
    return pseudo_boolean_min(g, eta1 - y, eta2)


@njit(cache=True)
def _cut_solve(n, offsets, heads, rev, edge_fwd, edge_bwd, src_arc, snk_arc,
               eu, ev, ew, y, eta1, eta2, cap, x):
    for e in range(len(ew)):
        cap[edge_fwd[e]] = eta2 * ew[e]
        cap[edge_bwd[e]] = eta2 * ew[e]
    cmax = 0.0
    neg = 0.0
    for i in range(n):
        u = eta1 - y[i]
        cap[src_arc[i]] = -u if u < 0 else 0.0
        cap[snk_arc[i]] = u if u > 0 else 0.0
        if u < 0:
            neg += u
        if abs(u) > cmax:
            cmax = abs(u)
    for e in range(len(ew)):
        if eta2 * ew[e] > cmax:
            cmax = eta2 * ew[e]
    eps = 1e-12 * (1.0 + cmax)
    flow = _boykov_kolmogorov(n + 2, n, n + 1, offsets, heads, rev, cap, eps)
    seen = _reachable(n + 2, n, offsets, heads, cap, eps)
    size = 0.0
    xy = 0.0
    for i in range(n):
        x[i] = 1 if seen[i] else 0
        size += x[i]
        xy += x[i] * y[i]
    tv = 0.0
    for e in range(len(ew)):
        if x[eu[e]] != x[ev[e]]:
            tv += ew[e]
    q = -xy + eta1 * size + eta2 * tv
    if abs(q - neg - flow) > 1e-9 * (1.0 + abs(q - neg)):
        raise ArithmeticError("max-flow disagrees with the cut capacity")
    return q, tv, size, xy


@njit(cache=True)
def _anneal_chain(n, offsets, heads, rev, edge_fwd, edge_bwd, src_arc, snk_arc,
                  eu, ev, ew, y, ybar, t, rho, eta1, eta2, temperature, cooling,
                  scale, normals, uniforms):
    cap = np.zeros(len(heads))
    x = np.zeros(n, np.int8)
    best_x = np.zeros(n, np.int8)
    best_obj = -1.0
    tv_tol = 1e-9 * (1.0 + rho)
    q, tv, size, xy = _cut_solve(n, offsets, heads, rev, edge_fwd, edge_bwd, src_arc,
                                 snk_arc, eu, ev, ew, y, eta1, eta2, cap, x)
    dual = q - eta1 * t - eta2 * rho
    best_dual = dual
    steps = len(uniforms)
    for k in range(steps + 1):
        if tv <= rho + tv_tol and size <= t:
            a = xy / t
            obj = t * _kl(a, ybar) if a > ybar else 0.0
            if obj > best_obj:
                best_obj = obj
                best_x[:] = x
        if k == steps:
            break
        p1 = eta1 * math.exp(scale * normals[k, 0])
        p2 = eta2 * math.exp(scale * normals[k, 1])
        q_new, tv_new, size_new, xy_new = _cut_solve(
            n, offsets, heads, rev, edge_fwd, edge_bwd, src_arc, snk_arc,
            eu, ev, ew, y, p1, p2, cap, x)
        dual_new = q_new - p1 * t - p2 * rho
        if dual_new > best_dual:
            best_dual = dual_new
        if dual_new >= dual or uniforms[k] < math.exp((dual_new - dual) / temperature):
            eta1, eta2, dual = p1, p2, dual_new
        # x always holds the latest inner solution; feasibility is judged on it
        tv, size, xy = tv_new, size_new, xy_new
        temperature *= cooling
    return best_obj, best_x, best_dual


def lgss(g, y, cfg):
    """Local graph scan statistic with its threshold and p-value bound.

    Returns
    -------
    ScanReport
        ``solution.x`` is the binary witness (primal feasible) attaining the
        statistic; ``dual_value`` is the best Lagrangian dual value seen.
    """
    y = as_attribute(y, g.num_nodes).astype(np.float64)
    n = g.num_nodes
    ybar = _background(y)
    grid = cfg.t_grid if cfg.t_grid is not None else default_t_grid(n, y)
    sched = cfg.annealing
    eta1 = ybar if sched.eta1 is None else sched.eta1
    eta2 = 1.0 if sched.eta2 is None else sched.eta2
    tpl = _template(g)
    lay = tpl.layout
    best = None
    best_dual = -np.inf
    for idx, t in enumerate(grid):
        rng = make_rng(sched.seed, idx)
        normals = rng.standard_normal((sched.steps, 2))
        uniforms = rng.random(sched.steps)
        obj, x, dual = _anneal_chain(
            n, lay.offsets, lay.heads, lay.rev, tpl.edge_fwd, tpl.edge_bwd,
            tpl.src_arc, tpl.snk_arc, g.u, g.v, g.w, y, ybar, float(t), float(cfg.rho),
            float(eta1), float(eta2), float(sched.initial_temperature),
            float(sched.cooling), float(sched.proposal_scale), normals, uniforms,
        )
        best_dual = max(best_dual, dual)
        if obj < 0:
            continue
        # grid is increasing, so ties keep the smaller t
        if best is None or obj > best[0]:
            best = (obj, float(t), x.copy())
    # the empty set is always feasible; flag when nothing better was found
    empty = best is None or best[0] <= 0
    if empty:
        warnings.warn("LGSS found no feasible candidate above the background; statistic set to 0",
                      RuntimeWarning)
        best = (0.0, float(grid[0]), np.zeros(n, np.int8))
    stat, t_best, x_best = best
    solution = ScanSolution(x_best, t_best, stat, not empty)
    tau = lgss_threshold(n, cfg.rho, cfg.delta)
    return ScanReport(
        "lgss", stat, tau, scan_pvalue_bound(stat, n, cfg.rho), stat > tau, solution,
        no_feasible_solution=empty, dual_value=float(best_dual),
    )


# ---------------------------------------------------------------------------
# CGSS


class _RelaxedLP:
    """``max x'y`` over the box, the weighted-TV budget and the size budget.

    Columns are ``x`` (N) then the edge slacks ``z`` (M); rows are
    ``+-(x_u - x_v) - z_e <= 0``, ``w'z <= rho`` and ``1'x <= t``.
    """

    def __init__(self, g, y, rho, tol):
        n, m = g.num_nodes, g.num_edges
        e = np.arange(m)
        diff = sp.csr_matrix(
            (np.r_[np.ones(m), -np.ones(m)], (np.r_[e, e], np.r_[g.u, g.v])), shape=(m, n)
        )
        eye = sp.identity(m, format="csr")
        a = sp.vstack([
            sp.hstack([diff, -eye]),
            sp.hstack([-diff, -eye]),
            sp.hstack([sp.csr_matrix((1, n)), sp.csr_matrix(g.w[None, :])]),
            sp.hstack([sp.csr_matrix(np.ones((1, n))), sp.csr_matrix((1, m))]),
        ]).tocsc()
        inf = highspy.kHighsInf
        lp = highspy.HighsLp()
        lp.num_col_ = n + m
        lp.num_row_ = a.shape[0]
        lp.col_cost_ = np.r_[-np.asarray(y, dtype=float), np.zeros(m)]
        lp.col_lower_ = np.zeros(n + m)
        lp.col_upper_ = np.r_[np.ones(n), np.full(m, inf)]
        lp.row_lower_ = np.full(a.shape[0], -inf)
        lp.row_upper_ = np.r_[np.zeros(2 * m), float(rho), float(n)]
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = a.indptr
        lp.a_matrix_.index_ = a.indices
        lp.a_matrix_.value_ = a.data
        self.h = highspy.Highs()
        self.h.setOptionValue("output_flag", False)
        self.h.setOptionValue("primal_feasibility_tolerance", float(tol))
        self.h.setOptionValue("dual_feasibility_tolerance", float(tol))
        self.h.passModel(lp)
        self.size_row = a.shape[0] - 1
        self.n = n

    def solve(self, t):
        h = self.h
        h.changeRowBounds(self.size_row, -highspy.kHighsInf, float(t))
        h.run()
        status = h.getModelStatus()
        if status != highspy.HighsModelStatus.kOptimal:
            raise NumericalError(
                f"LP solve for t={t} ended with status {h.modelStatusToString(status)}; "
                f"simplex iterations={h.getInfo().simplex_iteration_count}"
            )
        x = np.clip(np.asarray(h.getSolution().col_value[: self.n]), 0.0, 1.0)
        return x, -h.getInfo().objective_function_value


def cgss_inner(g, y, t, rho, tol=1e-7):
    """Fractional maximizer of ``x'y`` under the box, TV and size budgets.

    Returns ``(x, objective)`` with ``objective`` the LP optimum ``x'y``.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    y = np.asarray(y, dtype=np.float64)
    return _RelaxedLP(g, y, rho, tol).solve(t)


def cgss(g, y, cfg):
    """Convex graph scan statistic: the relaxed scan evaluated over the t-grid."""
    y = as_attribute(y, g.num_nodes).astype(np.float64)
    n = g.num_nodes
    ybar = _background(y)
    grid = cfg.t_grid if cfg.t_grid is not None else default_t_grid(n, y)
    lp = _RelaxedLP(g, y, cfg.rho, cfg.lp_tolerance)
    best = None
    for t in grid:
        x, _ = lp.solve(t)
        a = min(float(np.dot(x, y)) / t, 1.0)
        obj = t * bernoulli_kl(a, ybar) if a > ybar else 0.0
        if best is None or obj > best[0]:
            best = (obj, float(t), x)
    stat, t_best, x_best = best
    solution = ScanSolution(x_best, t_best, stat, True)
    tau = cgss_threshold(n, cfg.rho, cfg.delta)
    return ScanReport("cgss", stat, tau, scan_pvalue_bound(stat, n, cfg.rho), stat > tau, solution)


# ---------------------------------------------------------------------------
# thresholds and bounds


def _spread(n, rho):
    return math.sqrt(rho) + math.sqrt(0.5 * math.log(n))


def lgss_threshold(n, rho, delta):
    """Rejection threshold for the binary scan statistic (type-1 error at most ``1-(1-delta)^2``)."""
    if n < 3:
        raise ValueError("n must be at least 3")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    _check_delta(delta)
    inner = (
        _spread(n, rho) * math.sqrt(2 * math.log(n - 1))
        + math.sqrt(2 * math.log(2))
        + math.sqrt(4.5 * math.log(2 / delta))
    )
    return 8 * inner**2


def cgss_threshold(n, rho, delta):
    """Rejection threshold for the relaxed scan statistic."""
    if n < 3:
        raise ValueError("n must be at least 3")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    _check_delta(delta)
    root = math.sqrt(_spread(n, rho) ** 2 * math.log(n))
    inner = (
        (math.log(2 * n) + 1) / root
        + math.sqrt(2 * math.log(2))
        + 2 * root
        + math.sqrt(4.5 * math.log(2 / delta))
    )
    return 8 * inner**2


def scan_pvalue_bound(stat, n, rho):
    """Sub-Gaussian upper bound on the p-value of a scan statistic, clamped to [0, 1]."""
    if stat < 0:
        raise ValueError("statistic must be nonnegative")
    gap = math.sqrt(stat / 8) - 2 * math.log(2) - _spread(n, rho) * math.sqrt(2 * math.log(n - 1))
    if gap <= 0:
        return 1.0
    return min(1.0, 2 * math.exp(-(math.sqrt(2) / 3) * gap**2))


def scan_condition(n, c_size, mu, eps, rho, delta1, delta2):
    """Signal strength vs the sufficient level for the binary scan test; returns ``(lhs, rhs)``."""
    lhs = (1 - c_size / n) * math.sqrt(c_size) * (mu - eps)
    rhs = (
        4 * math.sqrt(math.log(2))
        + 6 * math.sqrt(math.log(2 / delta1))
        + 4 * _spread(n, rho) * math.sqrt(math.log(n - 1))
        + (math.sqrt(0.5) + math.sqrt(c_size / (2 * n))) * math.sqrt(math.log(2 / delta2))
    )
    return lhs, rhs


def relaxed_scan_condition(n, c_size, mu, eps, rho, delta1, delta2):
    """Signal strength vs the sufficient level for the relaxed scan test; returns ``(lhs, rhs)``."""
    lhs = (1 - c_size / n) * math.sqrt(c_size) * (mu - eps)
    root = math.sqrt(_spread(n, rho) ** 2 * math.log(n))
    rhs = (
        4 * math.sqrt(math.log(2))
        + 6 * math.sqrt(math.log(2 / delta1))
        + 2 * math.sqrt(2) * (math.log(2 * n) + 1) / root
        + 4 * math.sqrt(2) * root
        + (math.sqrt(0.5) + math.sqrt(c_size / (2 * n))) * math.sqrt(math.log(2 / delta2))
    )
    return lhs, rhs
