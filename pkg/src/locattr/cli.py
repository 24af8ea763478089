"""Command-line entry point.

Exit codes: 0 on success, 2 for bad input, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np
from scipy.stats import rankdata

from . import io as lio
from .evaluation import RANK_METHODS, empirical_pvalue, rank_attributes, spearman
from .graph import knn_graph, total_variation
from .scan import AnnealingSchedule, ScanConfig, cgss, lgss
from .simulation import (
    DEFAULT_GRID,
    JOBS_ENV,
    SweepConfig,
    run_sweep,
    scattered_null,
    score_attribute,
    sweep_csv,
)
from .wavelet import build_basis, detect_wavelet, load_basis

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _default_jobs():
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise lio.InputError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise lio.InputError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise lio.InputError(f"{path}: config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _resolve(command, given):
    """Merge built-in defaults, the JSON config, and explicit flags (in rising priority)."""
    opts = dict(_DEFAULTS[command])
    opts["jobs"] = _default_jobs()
    if given.get("config"):
        cfg = _load_config(given["config"])
        unknown = set(cfg) - set(opts) - _REQUIRED[command] - {"config"}
        if unknown:
            raise lio.InputError(f"{given['config']}: unknown options {sorted(unknown)}")
        opts.update(cfg)
    opts.update(given)
    missing = sorted(k for k in _REQUIRED[command] if opts.get(k) is None)
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise lio.InputError(f"{command}: missing required option(s) {flags}")
    return argparse.Namespace(command=command, **opts)


# ---------------------------------------------------------------------------
# commands


def cmd_build_knn(args):
    ids, xy, values = lio.read_points(args.points)
    g, _ = knn_graph(zip(ids.tolist(), xy.tolist()), args.k)
    lio.write_edge_list(g, args.output)
    if args.threshold is not None:
        if values is None:
            raise lio.InputError(f"{args.points}: --threshold needs a 'value' column")
        order = np.argsort(ids, kind="stable")
        y = (values[order] > args.threshold).astype(np.int8)
        lio.write_attribute(y, args.attribute_output or args.output + ".attr")
    return EXIT_OK


def _scan_config(args, g, y):
    rho = args.rho
    if rho is None:
        rho = total_variation(g, y, p=1)
        warnings.warn(f"--rho not given; using the attribute's own total variation {rho:g}", stacklevel=2)
    t_grid = None
    if args.t_grid:
        t_grid = [float(t) for t in str(args.t_grid).split(",")]
    return ScanConfig(rho=rho, t_grid=t_grid, delta=args.delta, annealing=AnnealingSchedule(seed=args.seed))


def cmd_detect(args):
    g = lio.read_edge_list(args.graph)
    y = lio.read_attribute(args.attribute, g.num_nodes)
    report = {"method": args.method, "num_nodes": g.num_nodes, "seed": args.seed, "delta": args.delta}
    rho = None
    if args.method == "wavelet":
        basis = load_basis(args.basis, g) if args.basis else build_basis(g, seed=args.seed)
        report.update(detect_wavelet(g, y, args.delta, seed=args.seed, basis=basis).to_dict())
        report["support"] = []
        if report["argmax_vector"] >= 0:
            # the half with the higher activation rate
            vec = basis.vectors[report["argmax_vector"]]
            report["support"] = (vec.set_a if vec.coefficient(y) > 0 else vec.set_b).tolist()
    elif args.method in ("lgss", "cgss"):
        cfg = _scan_config(args, g, y)
        rho = cfg.rho
        rep = (lgss if args.method == "lgss" else cgss)(g, y, cfg)
        report.update(rep.to_dict(include_x=args.include_x))
        report["rho"] = rho
    else:
        count = int(y.sum())
        report.update({
            "variant": "naive",
            "statistic": float(count),
            "mean": count / g.num_nodes,
            "threshold": None,
            "p_value_bound": None,
            "reject": None,
            "support": np.flatnonzero(y).tolist(),
        })
    report["empirical_p_value"] = None
    if args.null_trials:
        k = int(y.sum())
        null = [
            score_attribute(args.method, g, scattered_null(g, k, args.seed, trial=j), rho, args.delta, args.seed)
            for j in range(args.null_trials)
        ]
        report["empirical_p_value"] = empirical_pvalue(report["statistic"], null)
        report["null_trials"] = args.null_trials
        if args.method == "naive":
            report["reject"] = report["empirical_p_value"] <= args.delta
    _emit(_dump(report), args.output)
    return EXIT_OK


def cmd_simulate(args):
    try:
        cfg = SweepConfig(
            radii=list(args.radii),
            trials=int(args.trials),
            mu=list(args.mu),
            eps=list(args.eps),
            methods=list(args.methods),
            seed=int(args.seed),
            delta=float(args.delta),
            rho=args.rho,
            graph=args.graph,
            output=args.output,
        )
    except TypeError as exc:
        raise lio.InputError(f"bad sweep option: {exc}") from exc
    g = lio.read_edge_list(cfg.graph)
    rows = run_sweep(g, cfg, jobs=args.jobs)
    _emit(sweep_csv(rows), cfg.output)
    return EXIT_OK


def cmd_rank(args):
    g = lio.read_edge_list(args.graph)
    attrs = lio.read_attribute_pairs(args.attributes, g.num_nodes)
    results = rank_attributes(g, attrs, args.methods, rho=args.rho, delta=args.delta, seed=args.seed)
    if args.output in (None, "-"):
        lio.write_ranking_csv(results, sys.stdout)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            lio.write_ranking_csv(results, fh)
    if args.truth:
        truth = lio.read_ranking(args.truth)
        summary = {}
        for res in results:
            ranks = res.ranks()
            common = sorted(set(ranks) & set(truth))
            if len(common) < 2:
                raise lio.InputError(f"{args.truth}: fewer than two attributes in common with the ranking")
            summary[res.method] = spearman(
                rankdata([truth[a] for a in common]), rankdata([ranks[a] for a in common])
            )
        text = _dump({"spearman": summary})
        if args.spearman_output:
            _emit(text, args.spearman_output)
        else:
            sys.stdout.write(text)
    return EXIT_OK


def cmd_basis_cache(args):
    if args.action == "build":
        g = lio.read_edge_list(args.graph)
        basis = build_basis(g, seed=args.seed)
        basis.save(args.output)
        print(_dump({"num_nodes": basis.num_nodes, "level": basis.level, "vectors": len(basis.vectors),
                     "graph_fingerprint": basis.graph_fingerprint}), end="")
    else:
        g = lio.read_edge_list(args.graph) if args.graph else None
        basis = load_basis(args.basis, g)
        sizes = [len(v.set_a) + len(v.set_b) for v in basis.vectors]
        print(_dump({
            "num_nodes": basis.num_nodes,
            "level": basis.level,
            "vectors": len(basis.vectors),
            "components": len(basis.constant_sets),
            "seed": basis.seed,
            "graph_fingerprint": basis.graph_fingerprint,
            "graph_matches": None if g is None else True,
            "largest_split": max(sizes) if sizes else 0,
        }), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

_COMMON = {"seed": 0, "config": None}
_DEFAULTS = {
    "build-knn": {**_COMMON, "k": 10, "threshold": None, "attribute_output": None},
    "detect": {
        **_COMMON, "method": "wavelet", "rho": None, "delta": 0.05, "t_grid": None,
        "null_trials": 0, "basis": None, "include_x": False, "output": None,
    },
    "simulate": {
        **_COMMON, "trials": 100, "mu": list(DEFAULT_GRID), "eps": list(DEFAULT_GRID),
        "methods": ["wavelet"], "delta": 0.05, "rho": None, "output": None,
    },
    "rank": {
        **_COMMON, "methods": ["wavelet"], "rho": None, "delta": 0.05, "truth": None,
        "spearman_output": None, "output": None,
    },
    "basis-cache": {**_COMMON, "graph": None, "basis": None, "output": None},
}
_REQUIRED = {
    "build-knn": {"points", "output"},
    "detect": {"graph", "attribute"},
    "simulate": {"graph", "radii"},
    "rank": {"graph", "attributes"},
    "basis-cache": {"action"},
}
_DISPATCH = {
    "build-knn": cmd_build_knn,
    "detect": cmd_detect,
    "simulate": cmd_simulate,
    "rank": cmd_rank,
    "basis-cache": cmd_basis_cache,
}


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _float_list(text):
    return [float(t) for t in text.split(",") if t]


def _int_list(text):
    return [int(t) for t in text.split(",") if t]


def _str_list(text):
    return [t for t in text.split(",") if t]


def build_parser():
    """Parser whose namespaces hold only the flags actually given."""
    p = _Parser(prog="locattr", description="Detect localized binary attributes on graphs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    quiet = {"argument_default": argparse.SUPPRESS}

    def common(sp_):
        sp_.add_argument("--seed", type=_nonneg_int)
        sp_.add_argument("--jobs", type=int, help=f"worker processes (default ${JOBS_ENV} or 1)")
        sp_.add_argument("--config", help="JSON file of option values; explicit flags win")

    b = sub.add_parser("build-knn", help="k-nearest-neighbor graph from a points CSV", **quiet)
    b.add_argument("--points")
    b.add_argument("--k", type=int)
    b.add_argument("--output")
    b.add_argument("--threshold", type=float, help="write value > threshold as an attribute file")
    b.add_argument("--attribute-output", help="default: <output>.attr")
    common(b)

    d = sub.add_parser("detect", help="test one attribute for localization", **quiet)
    d.add_argument("--graph")
    d.add_argument("--attribute")
    d.add_argument("--method", choices=["wavelet", "lgss", "cgss", "naive"])
    d.add_argument("--rho", type=float, help="cut budget (default: total variation of the attribute)")
    d.add_argument("--delta", type=float)
    d.add_argument("--t-grid", help="comma-separated candidate sizes")
    d.add_argument("--null-trials", type=_nonneg_int)
    d.add_argument("--basis", help="cached basis file from 'basis-cache build'")
    d.add_argument("--include-x", action="store_true")
    d.add_argument("--output")
    common(d)

    s = sub.add_parser("simulate", help="planted-ball AUC sweep", **quiet)
    s.add_argument("--graph")
    s.add_argument("--radii", type=_int_list)
    s.add_argument("--trials", type=int)
    s.add_argument("--mu", type=_float_list)
    s.add_argument("--eps", type=_float_list)
    s.add_argument("--methods", type=_str_list)
    s.add_argument("--delta", type=float)
    s.add_argument("--rho", type=float)
    s.add_argument("--output")
    common(s)

    r = sub.add_parser("rank", help="rank attributes of a sparse attribute matrix", **quiet)
    r.add_argument("--graph")
    r.add_argument("--attributes", help="'attr_id node_id' pairs")
    r.add_argument("--methods", type=_str_list)
    r.add_argument("--rho", type=float)
    r.add_argument("--delta", type=float)
    r.add_argument("--truth", help="'attr_id rank' ground-truth ranking")
    r.add_argument("--spearman-output")
    r.add_argument("--output")
    common(r)

    c = sub.add_parser("basis-cache", help="build or inspect a cached wavelet basis", **quiet)
    c.add_argument("action", choices=["build", "inspect"])
    c.add_argument("--graph")
    c.add_argument("--basis")
    c.add_argument("--output")
    common(c)
    return p


def _validate(args):
    if getattr(args, "delta", None) is not None and not 0 < args.delta < 1:
        raise lio.InputError(f"--delta must lie in (0, 1), got {args.delta}")
    if getattr(args, "rho", None) is not None and args.rho < 0:
        raise lio.InputError("--rho must be nonnegative")
    if args.jobs < 1:
        raise lio.InputError("--jobs must be at least 1")
    if args.command == "build-knn" and args.k < 1:
        raise lio.InputError("--k must be at least 1")
    if args.command == "simulate" and int(args.trials) < 1:
        raise lio.InputError("--trials must be a positive integer")
    if args.command == "rank":
        bad = [m for m in args.methods if m not in RANK_METHODS]
        if bad:
            raise lio.InputError(f"unknown ranking methods: {bad}")
    if args.command == "basis-cache":
        if args.action == "build" and not (args.graph and args.output):
            raise lio.InputError("basis-cache build needs --graph and --output")
        if args.action == "inspect" and not args.basis:
            raise lio.InputError("basis-cache inspect needs --basis")


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"locattr: warning: {message}", file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    try:
        given = vars(parser.parse_args(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    command = given.pop("command")
    try:
        args = _resolve(command, given)
        _validate(args)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            return _DISPATCH[command](args)
    except ArithmeticError as exc:
        print(f"locattr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"locattr: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
