"""Synthetic Gaussian communities and similarity-graph construction."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .exceptions import DegenerateInputError
from .graph import CostGraph

__all__ = [
    "Component",
    "PointCloud",
    "AffinityGraph",
    "PRESETS",
    "preset",
    "generate_communities",
    "pairwise_affinity",
    "percentile_threshold",
    "epsilon_graph",
    "knn_graph",
    "to_cost_graph",
    "format_points_csv",
    "parse_points_csv",
    "read_points",
    "write_points",
    "format_affinity_triplets",
]


@dataclass(frozen=True)
class Component:
    """Axis-aligned Gaussian: mean, per-axis standard deviations, sample size."""

    mean: tuple[float, float]
    sigma_x: float
    sigma_y: float
    count: int

    def __post_init__(self):
        object.__setattr__(self, "mean", (float(self.mean[0]), float(self.mean[1])))
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ValueError(f"standard deviations must be positive, got {(self.sigma_x, self.sigma_y)}")
        if int(self.count) != self.count or self.count <= 0:
            raise ValueError(f"count must be a positive integer, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    def to_dict(self):
        return {"mean": list(self.mean), "sigma": [self.sigma_x, self.sigma_y], "count": self.count}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["mean"]), d["sigma"][0], d["sigma"][1], d["count"])


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    labels: np.ndarray | None = None
    components: tuple[Component, ...] | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.array(self.labels, dtype=np.intp).reshape(-1)
            if len(lab) != len(pts):
                raise ValueError("labels and points differ in length")
            if self.components is not None and len(lab) and (lab.min() < 0 or lab.max() >= len(self.components)):
                raise ValueError("labels must index the generator components")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)
        if self.components is not None:
            object.__setattr__(self, "components", tuple(self.components))

    def __len__(self):
        return len(self.points)


# Component means for the built-in presets.  Only the standard deviations
# and sizes of the communities are fixed by the experimental protocol; the
# centres below are our choice and are part of the preset definition.
_TRIANGLE = ((0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2))
_GRID10 = (
    (0.0, 0.3), (4.6, -0.4), (9.5, 0.2), (14.3, -0.3), (19.1, 0.4),
    (0.4, 5.2), (5.1, 4.6), (9.7, 5.4), (14.8, 4.7), (19.4, 5.1),
)
_S1 = ((0.8, 0.8), (0.5, 0.5), (0.5, 0.5), (0.8, 0.5), (1, 1), (1, 0.5), (0.5, 1), (0.5, 1), (0.5, 1), (1, 0.5))
_S2 = ((1.8, 1.6), (1.5, 1), (1, 2.5), (1.8, 3), (2, 2), (1, 1), (2.5, 2), (1.5, 2), (1, 3), (3, 1.5))


def _isotropic(sigma):
    return tuple(Component(m, sigma, sigma, 500) for m in _TRIANGLE)


def _ten(sigmas):
    return tuple(Component(m, sx, sy, 500) for m, (sx, sy) in zip(_GRID10, sigmas))


PRESETS: dict[str, tuple[Component, ...]] = {
    "3comm-0.05": _isotropic(0.05),
    "3comm-0.1": _isotropic(0.1),
    "3comm-0.5": _isotropic(0.5),
    "10comm-S1": _ten(_S1),
    "10comm-S2": _ten(_S2),
}


def preset(name: str) -> tuple[Component, ...]:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}") from None


def generate_communities(components, seed: int) -> PointCloud:
    """Draw ``count`` points from each axis-aligned Gaussian, in order.

    `components` is a preset name or a sequence of :class:`Component`
    (or ``(mean, sigma_x, sigma_y, count)`` tuples).  Output depends only
    on `components` and `seed`.
    """
    if isinstance(components, str):
        components = preset(components)
    comps = tuple(c if isinstance(c, Component) else Component(*c) for c in components)
    if not comps:
        raise ValueError("at least one component is required")
    rng = np.random.default_rng(seed)
    pts, labels = [], []
    for i, c in enumerate(comps):
        pts.append(rng.normal(c.mean, (c.sigma_x, c.sigma_y), size=(c.count, 2)))
        labels.append(np.full(c.count, i))
    return PointCloud(np.vstack(pts), np.concatenate(labels), comps)


def _as_points(cloud):
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError(f"points must be a 2-D array, got shape {pts.shape}")
    return pts


def pairwise_affinity(cloud) -> np.ndarray:
    """Gaussian kernel ``exp(-d_ij^2 / s2)`` on Euclidean distances.

    ``s2`` is the population variance of the distances over all unordered
    pairs ``i < j``.  The diagonal is 0.

    Raises
    ------
    DegenerateInputError
        Fewer than two points, or all pair distances equal (``s2 == 0``).
    """
    pts = _as_points(cloud)
    if len(pts) < 2:
        raise DegenerateInputError("need at least two points")
    d = pdist(pts)
    s2 = float(np.var(d))
    if s2 == 0:
        raise DegenerateInputError("all pairwise distances are equal; the kernel bandwidth is zero")
    a = squareform(np.exp(-(d**2) / s2))
    return a


@dataclass(frozen=True, eq=False)
class AffinityGraph:
    affinity: np.ndarray
    weighted: bool
    construction: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.affinity.shape[0]


def percentile_threshold(values, percentile: float) -> float:
    """Nearest-rank percentile: the ``ceil(p/100 * N)``-th smallest value."""
    v = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    if len(v) == 0:
        raise ValueError("no values")
    if not 0 <= percentile <= 100:
        raise ValueError(f"percentile must lie in [0, 100], got {percentile}")
    rank = max(1, math.ceil(percentile / 100 * len(v)))
    return float(v[rank - 1])


def _check_symmetric_affinity(affinity):
    a = np.asarray(affinity, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"affinity must be square, got shape {a.shape}")
    return a


def epsilon_graph(affinity, percentile: float = 95, weighted: bool = True) -> AffinityGraph:
    """Keep pairs whose affinity is strictly above the given percentile.

    The threshold is the nearest-rank percentile of the upper-triangle
    (off-diagonal) affinities.  Kept entries carry their affinity, or 1
    when `weighted` is false.
    """
    a = _check_symmetric_affinity(affinity)
    if not np.allclose(a, a.T, rtol=0, atol=0):
        raise ValueError("epsilon_graph expects a symmetric affinity matrix")
    iu = np.triu_indices(len(a), 1)
    thr = percentile_threshold(a[iu], percentile)
    keep = a > thr
    np.fill_diagonal(keep, False)
    out = np.where(keep, a if weighted else 1.0, 0.0)
    return AffinityGraph(out, bool(weighted), {
        "method": "epsilon", "percentile": percentile, "threshold": thr, "weighted": bool(weighted),
    })


def knn_graph(affinity, k: int, weighted: bool = True) -> AffinityGraph:
    """Link every node to its `k` most affine neighbours, then ``max(A, A^T)``.

    Ties in affinity go to the lower node index.
    """
    a = _check_symmetric_affinity(affinity)
    n = len(a)
    if int(k) != k or not 0 < k < n:
        raise ValueError(f"k must be an integer in [1, {n - 1}], got {k}")
    k = int(k)
    scores = a.copy()
    np.fill_diagonal(scores, -np.inf)
    # stable sort on negated scores: equal affinities keep index order
    nbrs = np.argsort(-scores, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    directed = np.zeros_like(a)
    directed[rows, nbrs.ravel()] = a[rows, nbrs.ravel()] if weighted else 1.0
    out = np.maximum(directed, directed.T)
    return AffinityGraph(out, bool(weighted), {"method": "knn", "k": k, "weighted": bool(weighted)})


def to_cost_graph(g) -> CostGraph:
    """Arcs in both directions with cost ``1 / a_ij`` for every nonzero affinity."""
    a = g.affinity if isinstance(g, AffinityGraph) else g
    return CostGraph.from_affinity(a)


def format_points_csv(cloud: PointCloud) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    has_labels = cloud.labels is not None
    w.writerow(["x", "y", "label"] if has_labels else ["x", "y"])
    for i, (x, y) in enumerate(cloud.points):
        row = [repr(float(x)), repr(float(y))]
        if has_labels:
            row.append(str(int(cloud.labels[i])))
        w.writerow(row)
    return buf.getvalue()


def parse_points_csv(text: str, components=None) -> PointCloud:
    """Read ``x,y[,label]`` rows; a header line is optional."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    pts, labels = [], []
    for i, r in enumerate(rows):
        if len(r) not in (2, 3):
            raise ValueError(f"row {i + 1}: expected x,y[,label], got {r}")
        pts.append((float(r[0]), float(r[1])))
        if len(r) == 3 and r[2].strip() != "":
            labels.append(int(r[2]))
    if labels and len(labels) != len(pts):
        raise ValueError("labels must be given for all rows or none")
    return PointCloud(np.array(pts).reshape(-1, 2), labels or None, components)


def _sidecar(path):
    return f"{os.fspath(path)}.meta.json"


def write_points(cloud: PointCloud, path, meta: dict | None = None) -> None:
    """Write the CSV and a ``<path>.meta.json`` sidecar with the generator parameters."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_points_csv(cloud))
    side = dict(meta or {})
    if cloud.components is not None:
        side["components"] = [c.to_dict() for c in cloud.components]
    with open(_sidecar(path), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(side, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_points(path) -> PointCloud:
    """Read a point CSV, picking up generator parameters from its sidecar if present."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    comps = None
    if os.path.exists(_sidecar(path)):
        with open(_sidecar(path), encoding="utf-8") as fh:
            side = json.load(fh)
        if "components" in side:
            comps = tuple(Component.from_dict(d) for d in side["components"])
    return parse_points_csv(text, comps)


def format_affinity_triplets(g: AffinityGraph) -> str:
    """1-based ``i j affinity`` lines for the upper triangle."""
    a = g.affinity
    i, j = np.nonzero(np.triu(a, 1))
    return "".join(f"{p + 1} {q + 1} {float(a[p, q])!r}\n" for p, q in zip(i, j))
