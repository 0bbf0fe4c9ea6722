"""Ground-truth density, rank correlation, theta search and report export."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .baselines import clustering_coefficient, degree, strength
from .datasets import PointCloud
from .engine import sof_density
from .exceptions import DegenerateInputError, SofError
from .graph import CostGraph, affinity_matrix, check_graph

__all__ = [
    "DEFAULT_THETA_GRID",
    "MEASURES",
    "CSV_COLUMNS",
    "EvalReport",
    "GridRow",
    "true_density",
    "spearman",
    "theta_grid_search",
    "compute_measures",
    "evaluate",
    "export_report",
    "report_to_csv",
    "report_to_json",
    "report_to_svg",
    "parse_report_csv",
    "colormap",
]

DEFAULT_THETA_GRID = (0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)
MEASURES = ("sof", "strength", "cc_unweighted", "cc_weighted", "degree")
CSV_COLUMNS = ("node", "x", "y", "true_density") + MEASURES


def true_density(cloud: PointCloud) -> np.ndarray:
    """Equal-weight Gaussian mixture pdf of the generator, at every point."""
    if cloud.components is None:
        raise ValueError("the point cloud carries no generator parameters; true density is unknown")
    x, y = cloud.points[:, 0], cloud.points[:, 1]
    parts = []
    for c in cloud.components:
        q = ((x - c.mean[0]) / c.sigma_x) ** 2 + ((y - c.mean[1]) / c.sigma_y) ** 2
        parts.append(np.exp(-0.5 * q) / (2 * math.pi * c.sigma_x * c.sigma_y))
    # sorting makes the sum independent of component order
    return np.sort(np.array(parts), axis=0).sum(axis=0) / len(parts)


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties.

    Tie-free inputs use the exact integer ``1 - 6 sum d^2 / (n (n^2 - 1))``
    form; otherwise the Pearson correlation of the average ranks.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    if np.any(np.isnan(x)) or np.any(np.isnan(y)):
        raise ValueError("NaN in input")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateInputError("Spearman correlation is undefined for a constant vector")
    rx, ry = rankdata(x), rankdata(y)
    n = len(x)
    if len(np.unique(x)) == n and len(np.unique(y)) == n:
        d = (rx - ry).astype(np.int64)
        return 1.0 - 6.0 * int(np.dot(d, d)) / (n * (n * n - 1))
    a, b = rx - rx.mean(), ry - ry.mean()
    r = float(np.dot(a, b) / math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b))))
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class GridRow:
    theta: float
    correlation: float
    error: str | None = None


def theta_grid_search(graph, truth, grid=DEFAULT_THETA_GRID):
    """Pick the theta whose SoF density correlates best (Spearman) with `truth`.

    Returns ``(best_theta, rows)``, rows in grid order.  Ties go to the
    smaller theta.  A theta whose evaluation fails is kept in the table
    with ``correlation = nan`` and the error message.
    """
    grid = [float(t) for t in grid]
    if not grid:
        raise ValueError("empty theta grid")
    graph = check_graph(graph)
    rows = []
    for theta in grid:
        try:
            r = spearman(sof_density(graph, theta).density, truth)
            rows.append(GridRow(theta, r))
        except (SofError, ValueError) as exc:
            rows.append(GridRow(theta, math.nan, f"{type(exc).__name__}: {exc}"))
    ok = [row for row in rows if row.error is None]
    if not ok:
        raise DegenerateInputError("every theta in the grid failed: " + "; ".join(r.error for r in rows))
    best = min(ok, key=lambda row: (-row.correlation, row.theta))
    return best.theta, rows


def compute_measures(graph, measures=MEASURES, theta: float = 5.0) -> dict[str, np.ndarray]:
    """Evaluate the named node indices on `graph` (a CostGraph or affinity matrix)."""
    graph = check_graph(graph)
    a = affinity_matrix(graph)
    out = {}
    for m in measures:
        if m == "sof":
            out[m] = sof_density(graph, theta).density
        elif m == "strength":
            out[m] = strength(a).values
        elif m == "degree":
            out[m] = degree(a).values
        elif m == "cc_unweighted":
            out[m] = clustering_coefficient(a, weighted=False).values
        elif m == "cc_weighted":
            out[m] = clustering_coefficient(a, weighted=True).values
        else:
            raise ValueError(f"unknown measure {m!r}; choose from {', '.join(MEASURES)}")
    return out


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Per-node table plus correlations and run configuration.

    `columns` maps measure names (and ``true_density``) to length-n arrays;
    `coordinates` is ``(n, 2)`` or None.
    """

    n: int
    coordinates: np.ndarray | None = None
    columns: dict = field(default_factory=dict)
    spearman: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    grid: tuple[GridRow, ...] = ()

    def __post_init__(self):
        for name, col in self.columns.items():
            if len(col) != self.n:
                raise ValueError(f"column {name!r} has {len(col)} rows, expected {self.n}")
        if self.coordinates is not None and len(self.coordinates) != self.n:
            raise ValueError("coordinates do not match the node count")

    def ordered_columns(self):
        names = [c for c in CSV_COLUMNS if c in self.columns]
        return names + sorted(c for c in self.columns if c not in CSV_COLUMNS)


def evaluate(cloud: PointCloud | None, graph: CostGraph, theta: float, measures=MEASURES,
             truth: bool = True, config: dict | None = None, grid=None) -> EvalReport:
    """Compute `measures` on `graph` and, if `truth`, their Spearman correlations
    with the generator density of `cloud`.

    When `grid` is given, theta is chosen by :func:`theta_grid_search`
    first and `theta` is ignored.
    """
    graph = check_graph(graph)
    cfg = dict(config or {})
    cols = {}
    if truth:
        if cloud is None:
            raise ValueError("true density requested but no point cloud given")
        cols["true_density"] = true_density(cloud)
    rows = ()
    if grid is not None:
        if not truth:
            raise ValueError("theta grid search needs the true density")
        theta, rows = theta_grid_search(graph, cols["true_density"], grid)
        rows = tuple(rows)
    cfg["theta"] = float(theta)
    cols.update(compute_measures(graph, measures, theta))
    corr = {}
    if truth:
        for m in measures:
            try:
                corr[m] = spearman(cols[m], cols["true_density"])
            except DegenerateInputError:
                corr[m] = math.nan
    coords = None if cloud is None else np.asarray(cloud.points)
    if coords is not None and len(coords) != graph.n:
        raise ValueError(f"point cloud has {len(coords)} points but the graph has {graph.n} nodes")
    return EvalReport(graph.n, coords, cols, corr, cfg, rows)


def _num(v):
    v = float(v)
    return None if math.isnan(v) else v


def report_to_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = report.ordered_columns()
    coords = report.coordinates is not None
    w.writerow(["node"] + (["x", "y"] if coords else []) + names)
    for i in range(report.n):
        row = [str(i + 1)]
        if coords:
            row += [repr(float(report.coordinates[i, 0])), repr(float(report.coordinates[i, 1]))]
        row += [repr(float(report.columns[c][i])) for c in names]
        w.writerow(row)
    return buf.getvalue()


def parse_report_csv(text: str) -> dict[str, np.ndarray]:
    """Columns of a report CSV as float arrays (``node`` as integers)."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in body]
        out[name] = np.array(vals, dtype=np.intp if name == "node" else np.float64)
    return out


def report_to_json(report: EvalReport) -> str:
    names = report.ordered_columns()
    nodes = []
    for i in range(report.n):
        row = {"node": i + 1}
        if report.coordinates is not None:
            row["x"] = float(report.coordinates[i, 0])
            row["y"] = float(report.coordinates[i, 1])
        for c in names:
            row[c] = _num(report.columns[c][i])
        nodes.append(row)
    doc = {
        "config": report.config,
        "spearman": {k: _num(v) for k, v in report.spearman.items()},
        "theta_grid": [
            {"theta": r.theta, "correlation": _num(r.correlation), "error": r.error} for r in report.grid
        ],
        "nodes": nodes,
    }
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


_LOW = np.array([0.0, 0.0, 139.0])   # dark blue
_HIGH = np.array([139.0, 0.0, 0.0])  # dark red


def colormap(values) -> list[str]:
    """Linear dark-blue to dark-red hex colours over the min-max range.

    A constant input maps every node to the midpoint colour.
    """
    v = np.asarray(values, dtype=np.float64)
    lo, hi = (float(v.min()), float(v.max())) if len(v) else (0.0, 0.0)
    t = np.full(len(v), 0.5) if hi == lo else (v - lo) / (hi - lo)
    rgb = np.rint(_LOW[None, :] * (1 - t[:, None]) + _HIGH[None, :] * t[:, None]).astype(int)
    return ["#%02x%02x%02x" % tuple(c) for c in rgb]


def report_to_svg(report: EvalReport, measure: str, size: int = 800, margin: int = 40) -> str:
    """Scatter of the node coordinates coloured by `measure` (800x800 viewport)."""
    if report.coordinates is None:
        raise ValueError("SVG scatter needs node coordinates")
    if measure not in report.columns:
        raise KeyError(f"measure {measure!r} not in report")
    xy = np.asarray(report.coordinates, dtype=np.float64)
    lo = xy.min(axis=0) if len(xy) else np.zeros(2)
    span = float((xy.max(axis=0) - lo).max()) if len(xy) else 0.0
    scale = (size - 2 * margin) / span if span > 0 else 0.0
    colours = colormap(report.columns[measure])
    title = measure
    if measure in report.spearman and not math.isnan(report.spearman[measure]):
        title += f" (Spearman {report.spearman[measure]:.4f})"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<text x="{margin}" y="{margin // 2 + 5}" font-family="sans-serif" font-size="14">{title}</text>',
    ]
    for (x, y), col in zip(xy, colours):
        px = margin + (x - lo[0]) * scale
        py = size - margin - (y - lo[1]) * scale
        out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2.5" fill="{col}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export_report(report: EvalReport, fmt: str, stem: str = "report") -> dict[str, bytes]:
    """Serialize `report` as files: ``{filename: content}``.

    ``csv`` and ``json`` give one file each; ``svg`` gives one scatter per
    measure column (``<stem>-<measure>.svg``).
    """
    if fmt == "csv":
        return {f"{stem}.csv": report_to_csv(report).encode()}
    if fmt == "json":
        return {f"{stem}.json": report_to_json(report).encode()}
    if fmt in ("svg", "svg-scatter"):
        names = [c for c in report.ordered_columns()]
        return {f"{stem}-{m}.svg": report_to_svg(report, m).encode() for m in names}
    raise ValueError(f"unknown format {fmt!r}; choose csv, json or svg")
