"""Exhaustive enumeration of diverging rooted forests on small graphs.

A diverging forest here is an arc subset in which every node has
in-degree at most 1 and there is no directed cycle.  Summing Boltzmann
weights over all such subsets gives the partition function, arc
expectations and expected out-degrees directly, with no linear algebra.
This is the ground truth the closed-form engine is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import EdgeExpectation, density_from_z, edge_expectations, log_partition_function, solve_z
from .exceptions import InconsistencyError, OracleCapError
from .graph import CostGraph, check_graph, weight_matrix

__all__ = [
    "DEFAULT_ARC_CAP",
    "Forest",
    "ForestDistribution",
    "OracleComparison",
    "compare_with_engine",
    "enumerate_forests",
    "is_diverging_forest",
    "oracle_density",
    "oracle_distribution",
    "oracle_edge_expectation",
    "random_graph",
]

DEFAULT_ARC_CAP = 20


@dataclass(frozen=True)
class Forest:
    """An arc subset of a graph.

    `mask` has bit ``i`` set when arc ``i`` of the source graph belongs to
    the forest; `arcs` lists the member ``(tail, head)`` pairs.
    """

    mask: int
    arcs: tuple[tuple[int, int], ...]
    total_cost: float

    def out_degree(self, n: int) -> np.ndarray:
        d = np.zeros(n, dtype=np.intp)
        for t, _ in self.arcs:
            d[t] += 1
        return d

    def __len__(self):
        return len(self.arcs)


@dataclass(frozen=True)
class ForestDistribution:
    forests: tuple[Forest, ...]
    probabilities: np.ndarray
    partition_value: float
    theta: float

    def probability_of(self, mask: int) -> float:
        for f, p in zip(self.forests, self.probabilities):
            if f.mask == mask:
                return float(p)
        raise KeyError(mask)

    def __len__(self):
        return len(self.forests)


def is_diverging_forest(n: int, arcs) -> bool:
    """In-degree <= 1 everywhere and a topological order exists (Kahn)."""
    indeg = [0] * n
    succ = [[] for _ in range(n)]
    for t, h in arcs:
        indeg[h] += 1
        succ[t].append(h)
    if any(d > 1 for d in indeg):
        return False
    stack = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for u in succ[v]:
            indeg[u] -= 1
            if indeg[u] == 0:
                stack.append(u)
    return seen == n


def enumerate_forests(graph: CostGraph, arc_cap: int = DEFAULT_ARC_CAP) -> list[Forest]:
    """All diverging forests of `graph`, ordered by arc-set bitmask.

    Arcs are decided one at a time (include / exclude).  Including an arc
    whose head already has a parent, or whose head is an ancestor of its
    tail, is pruned together with every superset.

    Raises
    ------
    OracleCapError
        If the graph has more than `arc_cap` arcs.
    """
    graph = check_graph(graph)
    m = graph.n_arcs
    if m > arc_cap:
        raise OracleCapError(
            f"graph has {m} arcs; exhaustive enumeration is capped at {arc_cap} (2^{arc_cap} subsets)"
        )
    tails = [int(t) for t in graph.tails]
    heads = [int(h) for h in graph.heads]
    costs = [float(c) for c in graph.costs]
    parent = [-1] * graph.n
    chosen: list[int] = []
    out: list[Forest] = []

    def creates_cycle(t, h):
        v = t
        while v != -1:
            if v == h:
                return True
            v = parent[v]
        return False

    def visit(i, mask):
        if i == m:
            arcs = tuple((tails[j], heads[j]) for j in chosen)
            out.append(Forest(mask, arcs, math.fsum(costs[j] for j in chosen)))
            return
        visit(i + 1, mask)
        t, h = tails[i], heads[i]
        if parent[h] == -1 and not creates_cycle(t, h):
            parent[h] = t
            chosen.append(i)
            visit(i + 1, mask | (1 << i))
            chosen.pop()
            parent[h] = -1

    visit(0, 0)
    out.sort(key=lambda f: f.mask)
    return out


def oracle_distribution(
    graph: CostGraph, theta: float, arc_cap: int = DEFAULT_ARC_CAP
) -> ForestDistribution:
    """Boltzmann distribution ``exp(-theta C(phi)) / Z`` over all forests."""
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    forests = enumerate_forests(graph, arc_cap)
    weights = [math.exp(-theta * f.total_cost) for f in forests]
    z = math.fsum(weights)
    probs = np.array(weights) / z
    return ForestDistribution(tuple(forests), probs, z, float(theta))


def _density_from(dist: ForestDistribution, n: int) -> np.ndarray:
    acc = [[] for _ in range(n)]
    for f, p in zip(dist.forests, dist.probabilities):
        for t, _ in f.arcs:
            acc[t].append(p)
    return np.array([math.fsum(a) for a in acc])


def _edges_from(dist: ForestDistribution, graph: CostGraph) -> EdgeExpectation:
    acc = [[] for _ in range(graph.n_arcs)]
    for f, p in zip(dist.forests, dist.probabilities):
        mask, i = f.mask, 0
        while mask:
            if mask & 1:
                acc[i].append(p)
            mask >>= 1
            i += 1
    vals = np.array([math.fsum(a) for a in acc])
    return EdgeExpectation(graph.n, graph.tails.copy(), graph.heads.copy(), vals)


def oracle_density(graph: CostGraph, theta: float, arc_cap: int = DEFAULT_ARC_CAP) -> np.ndarray:
    """Expected out-degree per node by direct summation over forests."""
    graph = check_graph(graph)
    return _density_from(oracle_distribution(graph, theta, arc_cap), graph.n)


def oracle_edge_expectation(
    graph: CostGraph, theta: float, arc_cap: int = DEFAULT_ARC_CAP
) -> EdgeExpectation:
    """Probability that each arc belongs to a forest, by direct summation."""
    graph = check_graph(graph)
    return _edges_from(oracle_distribution(graph, theta, arc_cap), graph)


def random_graph(
    rng: np.random.Generator, n: int, arc_prob: float = 0.5, cost_range=(0.1, 3.0)
) -> CostGraph:
    """Each ordered pair ``i != j`` becomes an arc with probability `arc_prob`."""
    arcs = []
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < arc_prob:
                arcs.append((i, j, rng.uniform(*cost_range)))
    return CostGraph.from_arcs(n, arcs)


@dataclass(frozen=True)
class OracleComparison:
    n: int
    n_arcs: int
    theta: float
    n_forests: int
    partition_engine: float
    partition_oracle: float
    partition_rel_dev: float
    edge_abs_dev: float
    density_abs_dev: float
    error: str | None = None

    def passed(self, tol: float = 1e-10) -> bool:
        return (
            self.error is None
            and self.partition_rel_dev < tol
            and self.edge_abs_dev < tol
            and self.density_abs_dev < tol
        )


def compare_with_engine(
    graph: CostGraph, theta: float, arc_cap: int = DEFAULT_ARC_CAP, z_hook=None
) -> OracleComparison:
    """Deviations between the closed-form engine and direct summation.

    `z_hook(z, graph)`, if given, edits a copy of ``Z`` in place before arc
    expectations and densities are derived from it; it exists so the
    harness can be checked against a deliberately broken engine.
    """
    graph = check_graph(graph)
    dist = oracle_distribution(graph, theta, arc_cap)
    dens_o = _density_from(dist, graph.n)
    eta_o = _edges_from(dist, graph).values

    w = weight_matrix(graph, theta)
    z_e = math.exp(log_partition_function(w))
    z = solve_z(w)
    if z_hook is not None:
        z = np.array(z)
        z_hook(z, graph)
    error = None
    try:
        eta_e = edge_expectations(graph, w, z).values
        dens_e = density_from_z(w, z)
    except InconsistencyError as exc:
        error = str(exc)
        eta_e = np.full_like(eta_o, np.nan)
        dens_e = np.full_like(dens_o, np.nan)

    def maxdev(a, b):
        if len(a) == 0:
            return 0.0
        dev = np.abs(a - b)
        return float(np.inf) if np.any(np.isnan(dev)) else float(dev.max())

    return OracleComparison(
        n=graph.n,
        n_arcs=graph.n_arcs,
        theta=float(theta),
        n_forests=len(dist),
        partition_engine=z_e,
        partition_oracle=dist.partition_value,
        partition_rel_dev=abs(z_e - dist.partition_value) / dist.partition_value,
        edge_abs_dev=maxdev(eta_e, eta_o),
        density_abs_dev=maxdev(dens_e, dens_o),
        error=error,
    )
