"""Directed cost graphs, their weight matrices and Laplacians.

Nodes are 0-based inside the library.  The text edge-list format used on
disk is 1-based::

    # comment lines are ignored
    n 4            # optional header, otherwise n = max node index
    1 2 0.5        # tail head cost
    2 1 0.5
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InvalidGraphError

__all__ = [
    "CostGraph",
    "Violation",
    "ValidationReport",
    "validate",
    "weight_matrix",
    "laplacian",
    "affinity_matrix",
    "check_graph",
    "read_edge_list",
    "write_edge_list",
    "parse_edge_list",
    "format_edge_list",
]


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CostGraph:
    """Directed graph with a positive cost on every arc.

    Parameters
    ----------
    n : int
        Number of nodes.
    tails, heads : array-like of int
        0-based endpoints of each arc ``tails[i] -> heads[i]``.
    costs : array-like of float
        Cost of each arc.

    Absent arcs are simply not listed.  Construction does not enforce the
    invariants; use :func:`validate` (or :func:`check_graph`) for that.
    """

    n: int
    tails: np.ndarray = field(repr=False)
    heads: np.ndarray = field(repr=False)
    costs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "tails", _frozen(self.tails, np.intp))
        object.__setattr__(self, "heads", _frozen(self.heads, np.intp))
        object.__setattr__(self, "costs", _frozen(self.costs, np.float64))
        if not (len(self.tails) == len(self.heads) == len(self.costs)):
            raise ValueError("tails, heads and costs must have equal length")

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[Sequence]) -> "CostGraph":
        """Build from ``(tail, head, cost)`` triples (0-based)."""
        arcs = list(arcs)
        if not arcs:
            return cls(n, [], [], [])
        t, h, c = zip(*arcs)
        return cls(n, t, h, c)

    @classmethod
    def from_affinity(cls, affinity) -> "CostGraph":
        """One arc ``i -> j`` of cost ``1 / a_ij`` per nonzero off-diagonal entry."""
        a = np.asarray(affinity, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"affinity must be square, got shape {a.shape}")
        mask = a != 0
        np.fill_diagonal(mask, False)
        t, h = np.nonzero(mask)
        return cls(a.shape[0], t, h, 1.0 / a[t, h])

    @property
    def n_arcs(self) -> int:
        return len(self.costs)

    @property
    def arcs(self) -> list[tuple[int, int, float]]:
        return [(int(t), int(h), float(c)) for t, h, c in zip(self.tails, self.heads, self.costs)]

    def with_costs(self, costs) -> "CostGraph":
        """Same topology, new per-arc costs."""
        return CostGraph(self.n, self.tails, self.heads, costs)

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.tails, minlength=self.n)

    def __eq__(self, other):
        if not isinstance(other, CostGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.tails, other.tails)
            and np.array_equal(self.heads, other.heads)
            and np.array_equal(self.costs, other.costs)
        )

    __hash__ = None


@dataclass(frozen=True)
class Violation:
    kind: str
    arc: int | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        return "; ".join(v.message for v in self.violations)


def validate(graph: CostGraph) -> ValidationReport:
    """Report every invariant violation of `graph`.

    Checked: positive node count, endpoints in range, no self-loops,
    finite strictly positive costs, at most one arc per ordered pair.
    Arc indices in the report are 0-based positions in the arc arrays,
    node numbers in messages are 1-based.
    """
    out = []
    if graph.n < 1:
        out.append(Violation("node-count", None, f"node count must be positive, got {graph.n}"))
    t, h, c = graph.tails, graph.heads, graph.costs
    for i in np.flatnonzero((t < 0) | (t >= graph.n) | (h < 0) | (h >= graph.n)):
        out.append(Violation("node-range", int(i), f"arc {i}: endpoint out of range 1..{graph.n}"))
    for i in np.flatnonzero(t == h):
        out.append(Violation("self-loop", int(i), f"arc {i}: self-loop at node {t[i] + 1}"))
    for i in np.flatnonzero(~np.isfinite(c)):
        out.append(Violation("nonfinite-cost", int(i), f"arc {i}: non-finite cost {c[i]}"))
    for i in np.flatnonzero(np.isfinite(c) & (c <= 0)):
        out.append(Violation("nonpositive-cost", int(i), f"arc {i}: nonpositive cost {c[i]}"))
    if len(t):
        keys = t.astype(np.int64) * max(graph.n, 1) + h
        order = np.argsort(keys, kind="stable")
        dup = order[1:][keys[order[1:]] == keys[order[:-1]]]
        for i in np.sort(dup):
            out.append(
                Violation("duplicate-arc", int(i), f"arc {i}: duplicate arc {t[i] + 1} -> {h[i] + 1}")
            )
    return ValidationReport(tuple(out))


def check_graph(X) -> CostGraph:
    """Coerce `X` to a valid :class:`CostGraph` or raise.

    A :class:`CostGraph` is validated as is.  A square array is read as an
    affinity matrix (costs are reciprocal affinities, zero means no arc).
    """
    if isinstance(X, CostGraph):
        graph = X
    else:
        a = np.asarray(X, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a CostGraph or a square affinity matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise ValueError("affinity matrix entries must be finite and nonnegative")
        graph = CostGraph.from_affinity(a)
    report = validate(graph)
    if not report.ok:
        raise InvalidGraphError(f"invalid graph: {report}", report.violations)
    return graph


def weight_matrix(graph: CostGraph, theta: float) -> np.ndarray:
    """Dense matrix with ``exp(-theta * c)`` on arcs and exact zeros elsewhere."""
    theta = float(theta)
    if not math.isfinite(theta) or theta <= 0:
        raise ValueError(f"theta must be a positive finite number, got {theta}")
    if np.any(np.isnan(graph.costs)):
        raise ValueError("graph has NaN costs")
    w = np.zeros((graph.n, graph.n))
    w[graph.tails, graph.heads] = np.exp(-theta * graph.costs)
    return w


def laplacian(w) -> np.ndarray:
    """``Diag(W^T e) - W``: in-weights (column sums) on the diagonal."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"weight matrix must be square, got shape {w.shape}")
    return np.diag(w.sum(axis=0)) - w


def affinity_matrix(graph: CostGraph) -> np.ndarray:
    """Dense reciprocal-cost affinity matrix (0 where there is no arc)."""
    a = np.zeros((graph.n, graph.n))
    a[graph.tails, graph.heads] = 1.0 / graph.costs
    return a


def parse_edge_list(text: str) -> CostGraph:
    """Parse the 1-based ``tail head cost`` text format."""
    n_header = None
    arcs = []
    max_index = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "n":
            if len(tok) != 2 or n_header is not None:
                raise InvalidGraphError(f"line {lineno}: malformed node-count header {raw!r}")
            n_header = int(tok[1])
            continue
        if len(tok) != 3:
            raise InvalidGraphError(f"line {lineno}: expected 'tail head cost', got {raw!r}")
        try:
            t, h, c = int(tok[0]), int(tok[1]), float(tok[2])
        except ValueError as exc:
            raise InvalidGraphError(f"line {lineno}: {exc}") from None
        if t < 1 or h < 1:
            raise InvalidGraphError(f"line {lineno}: node indices are 1-based")
        max_index = max(max_index, t, h)
        arcs.append((t - 1, h - 1, c))
    n = n_header if n_header is not None else max_index
    if n_header is not None and max_index > n_header:
        raise InvalidGraphError(f"node index {max_index} exceeds header n {n_header}")
    graph = CostGraph.from_arcs(n, arcs)
    report = validate(graph)
    if not report.ok:
        raise InvalidGraphError(f"invalid edge list: {report}", report.violations)
    return graph


def format_edge_list(graph: CostGraph, comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write(f"n {graph.n}\n")
    for t, h, c in zip(graph.tails, graph.heads, graph.costs):
        buf.write(f"{t + 1} {h + 1} {float(c)!r}\n")
    return buf.getvalue()


def read_edge_list(path: str | os.PathLike) -> CostGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def write_edge_list(graph: CostGraph, path: str | os.PathLike, comments: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_edge_list(graph, comments))
