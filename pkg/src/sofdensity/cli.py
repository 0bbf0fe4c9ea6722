"""Command-line entry point: ``sofdensity <command> [options]``.

Exit codes: 0 success, 1 invalid arguments or input, 2 numerical
failure, 3 oracle-check tolerance breach.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .datasets import (
    PRESETS,
    Component,
    epsilon_graph,
    format_affinity_triplets,
    generate_communities,
    knn_graph,
    pairwise_affinity,
    read_points,
    to_cost_graph,
    write_points,
)
from .evaluation import DEFAULT_THETA_GRID, MEASURES, evaluate, export_report
from .exceptions import NumericalError, SofError
from .graph import read_edge_list, write_edge_list
from .oracle import DEFAULT_ARC_CAP, compare_with_engine, random_graph

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_BREACH = 0, 1, 2, 3
ALLOWED_PERCENTILES = (80, 90, 95, 99)
DEFAULT_THETA = {"epsilon": 5.0, "knn": 50.0}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive_float(s):
    v = float(s)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {s}")
    return v


def _float_list(s):
    try:
        vals = [_positive_float(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated positive numbers, got {s!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _meta_path(path):
    return f"{os.fspath(path)}.meta.json"


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_meta(path):
    p = _meta_path(path)
    if not os.path.exists(p):
        return {}
    with open(p, encoding="utf-8") as fh:
        return json.load(fh)


def _out(args, name):
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def _formats(s):
    fmts = [t.strip() for t in s.split(",") if t.strip()]
    for f in fmts:
        if f not in ("csv", "json", "svg"):
            raise argparse.ArgumentTypeError(f"unknown format {f!r}; choose from csv, json, svg")
    return fmts


def _measures(s):
    out = []
    for t in (t.strip() for t in s.split(",")):
        if not t:
            continue
        if t == "cc":
            t = "cc_weighted"
        if t not in MEASURES:
            raise argparse.ArgumentTypeError(f"unknown measure {t!r}; choose from cc, {', '.join(MEASURES)}")
        if t not in out:
            out.append(t)
    return out


# ---------------------------------------------------------------- commands


def cmd_generate(args):
    if args.preset is not None:
        components = args.preset
        if components not in PRESETS:
            raise UsageError(f"unknown preset {components!r}; valid presets: {', '.join(PRESETS)}")
        source = {"preset": components}
    else:
        with open(args.spec, encoding="utf-8") as fh:
            components = [Component.from_dict(d) for d in json.load(fh)]
        source = {"spec_sha256": _sha256(args.spec)}
    cloud = generate_communities(components, args.seed)
    name = args.out or f"{args.preset or 'points'}-seed{args.seed}.csv"
    path = _out(args, name)
    write_points(cloud, path, {"command": "generate", "seed": args.seed, **source, "version": __version__})
    print(f"wrote {len(cloud)} points to {path}")
    return EXIT_OK


def cmd_build_graph(args):
    cloud = read_points(args.points)
    affinity = pairwise_affinity(cloud)
    if args.method == "epsilon":
        if args.percentile not in ALLOWED_PERCENTILES and not args.percentile_any:
            raise UsageError(
                f"--percentile must be one of {ALLOWED_PERCENTILES} (pass --percentile-any to override)"
            )
        g = epsilon_graph(affinity, args.percentile, args.weighted)
    else:
        g = knn_graph(affinity, args.k, args.weighted)
    graph = to_cost_graph(g)
    construction = {k: (float(v) if isinstance(v, (np.floating,)) else v) for k, v in g.construction.items()}
    meta = {
        "command": "build-graph",
        "construction": construction,
        "points": os.path.basename(args.points),
        "points_sha256": _sha256(args.points),
        "n": graph.n,
        "arcs": graph.n_arcs,
        "version": __version__,
    }
    param = f"{args.percentile:g}" if args.method == "epsilon" else str(args.k)
    name = args.out or f"graph-{args.method}-{param}-{'w' if args.weighted else 'u'}.txt"
    path = _out(args, name)
    comments = [f"{k}: {json.dumps(v, sort_keys=True)}" for k, v in sorted(meta.items())]
    write_edge_list(graph, path, comments)
    _write_json(_meta_path(path), meta)
    if args.affinity_out:
        with open(_out(args, args.affinity_out), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_affinity_triplets(g))
    print(f"wrote graph with {graph.n} nodes and {graph.n_arcs} arcs to {path}")
    return EXIT_OK


def _default_theta(graph_path, theta):
    if theta is not None:
        return theta
    method = _read_meta(graph_path).get("construction", {}).get("method")
    return DEFAULT_THETA.get(method, DEFAULT_THETA["epsilon"])


def _points_for(args, graph_path):
    if args.points:
        return read_points(args.points)
    name = _read_meta(graph_path).get("points")
    if name:
        cand = os.path.join(os.path.dirname(os.path.abspath(graph_path)), name)
        if os.path.exists(cand):
            return read_points(cand)
    return None


def _write_report(args, report, stem):
    written = []
    for fmt in args.format:
        for name, data in export_report(report, fmt, stem).items():
            path = _out(args, name)
            with open(path, "wb") as fh:
                fh.write(data)
            written.append(path)
    return written


def _provenance(args, command, extra=None):
    cfg = {"command": command, "graph": os.path.basename(args.graph), "graph_sha256": _sha256(args.graph)}
    if getattr(args, "points", None):
        cfg["points"] = os.path.basename(args.points)
        cfg["points_sha256"] = _sha256(args.points)
    construction = _read_meta(args.graph).get("construction")
    if construction:
        cfg["construction"] = construction
    cfg.update(extra or {})
    cfg["version"] = __version__
    return cfg


def cmd_density(args):
    graph = read_edge_list(args.graph)
    theta = _default_theta(args.graph, args.theta)
    cloud = _points_for(args, args.graph)
    if "svg" in args.format and cloud is None:
        raise UsageError("SVG output needs node coordinates: pass --points")
    cfg = _provenance(args, "density", {"measures": args.measures})
    report = evaluate(cloud, graph, theta, args.measures, truth=False, config=cfg)
    for path in _write_report(args, report, args.stem):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_evaluate(args):
    graph = read_edge_list(args.graph)
    cloud = read_points(args.points)
    if cloud.components is None:
        raise UsageError(
            f"{args.points} has no generator parameters (missing {_meta_path(args.points)}); "
            "the true density cannot be computed"
        )
    grid = None
    theta = args.theta
    if theta is None:
        grid = args.theta_grid or list(DEFAULT_THETA_GRID)
    cfg = _provenance(args, "evaluate", {"theta_grid": grid})
    report = evaluate(cloud, graph, theta if theta is not None else 0.0, MEASURES, truth=True,
                      config=cfg, grid=grid)
    if report.grid:
        print("theta        spearman(sof)")
        for row in report.grid:
            mark = "*" if row.theta == report.config["theta"] else " "
            val = "failed: " + row.error if row.error else f"{row.correlation:.6f}"
            print(f"{mark} {row.theta:<10g} {val}")
    print(f"theta = {report.config['theta']:g}")
    for m, r in report.spearman.items():
        print(f"  spearman({m}) = {r:.6f}")
    for path in _write_report(args, report, args.stem):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_oracle_check(args):
    z_hook = None
    if args.corrupt_z:
        def z_hook(z, graph):
            if graph.n_arcs:
                h = graph.heads[0]
                z[h, h] = -z[h, h]

    cases = []
    if args.graph:
        graph = read_edge_list(args.graph)
        cases = [(graph, t) for t in args.thetas]
    else:
        rng = np.random.default_rng(args.seed)
        for _ in range(args.random):
            g = random_graph(rng, int(rng.integers(2, args.nodes + 1)), args.arc_prob,
                             (args.cost_min, args.cost_max))
            cases.extend((g, t) for t in args.thetas)
    worst = {"partition_rel_dev": 0.0, "edge_abs_dev": 0.0, "density_abs_dev": 0.0}
    failures = []
    for i, (g, theta) in enumerate(cases):
        c = compare_with_engine(g, theta, args.arc_cap, z_hook=z_hook)
        for k in worst:
            worst[k] = max(worst[k], getattr(c, k))
        if not c.passed(args.tol):
            failures.append({"case": i, "n": c.n, "arcs": c.n_arcs, "theta": theta, "error": c.error,
                             "partition_rel_dev": c.partition_rel_dev, "edge_abs_dev": c.edge_abs_dev,
                             "density_abs_dev": c.density_abs_dev})
    ok = not failures
    summary = {"cases": len(cases), "tolerance": args.tol, "max_deviation": worst,
               "failures": failures, "passed": ok, "seed": args.seed}
    with open(_out(args, args.report), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    print(f"{len(cases)} cases, tolerance {args.tol:g}")
    for k, v in worst.items():
        print(f"  max {k} = {v:.3e}")
    print("PASS" if ok else f"FAIL ({len(failures)} cases over tolerance)")
    return EXIT_OK if ok else EXIT_BREACH


# ------------------------------------------------------------------ parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--threads", type=int, default=None, help="BLAS/LAPACK thread count")
    common.add_argument("--out-dir", default=".", help="directory for output files")
    common.add_argument("--format", type=_formats, default=["csv"],
                        help="comma-separated output formats: csv, json, svg (default csv)")

    p = _Parser(prog="sofdensity", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="sample a synthetic community point cloud")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help=f"one of {', '.join(PRESETS)}")
    src.add_argument("--spec", help="JSON list of {mean, sigma, count} components")
    g.add_argument("--out", help="output CSV file name (inside --out-dir)")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("build-graph", parents=[common], help="epsilon or k-NN graph from a point CSV")
    b.add_argument("--points", required=True)
    b.add_argument("--method", choices=("epsilon", "knn"), default="epsilon")
    b.add_argument("--percentile", type=float, default=95)
    b.add_argument("--percentile-any", action="store_true", help="allow percentiles other than 80/90/95/99")
    b.add_argument("--k", type=int, default=10)
    b.add_argument("--weighted", action=argparse.BooleanOptionalAction, default=True)
    b.add_argument("--out", help="edge-list file name")
    b.add_argument("--affinity-out", help="also write 'i j affinity' triplets to this file")
    b.set_defaults(func=cmd_build_graph)

    d = sub.add_parser("density", parents=[common], help="node density indices of an edge-list graph")
    d.add_argument("--graph", required=True)
    d.add_argument("--theta", type=_positive_float, default=None,
                   help="inverse temperature (default 5 for epsilon graphs, 50 for k-NN)")
    d.add_argument("--measures", type=_measures, default=["sof"],
                   help="comma-separated: sof, strength, cc, cc_unweighted, cc_weighted, degree")
    d.add_argument("--points", help="point CSV supplying node coordinates")
    d.add_argument("--stem", default="density")
    d.set_defaults(func=cmd_density)

    o = sub.add_parser("oracle-check", parents=[common], help="closed form vs. exhaustive forest enumeration")
    og = o.add_mutually_exclusive_group(required=True)
    og.add_argument("--graph")
    og.add_argument("--random", type=int, metavar="COUNT")
    o.add_argument("--nodes", type=int, default=5, help="random graphs have 2..NODES nodes")
    o.add_argument("--arc-prob", type=float, default=0.5)
    o.add_argument("--cost-min", type=_positive_float, default=0.1)
    o.add_argument("--cost-max", type=_positive_float, default=3.0)
    o.add_argument("--thetas", type=_float_list, default=[0.1, 1.0, 5.0, 20.0])
    o.add_argument("--tol", type=float, default=1e-10)
    o.add_argument("--arc-cap", type=int, default=DEFAULT_ARC_CAP)
    o.add_argument("--report", default="oracle-check.json")
    o.add_argument("--corrupt-z", action="store_true", help=argparse.SUPPRESS)
    o.set_defaults(func=cmd_oracle_check)

    e = sub.add_parser("evaluate", parents=[common], help="Spearman correlation with the true density")
    e.add_argument("--points", required=True)
    e.add_argument("--graph", required=True)
    th = e.add_mutually_exclusive_group()
    th.add_argument("--theta", type=_positive_float)
    th.add_argument("--theta-grid", type=_float_list)
    e.add_argument("--stem", default="evaluation")
    e.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "build-graph" and args.method == "knn" and args.k < 1:
            parser.error("--k must be positive")
    except SystemExit as exc:
        # usage errors and --help come back as an exit code, so main() is embeddable
        return exc.code
    try:
        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, SofError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
