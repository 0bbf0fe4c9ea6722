"""Local density baselines: degree, strength and clustering coefficient.

All functions take either a :class:`~sofdensity.graph.CostGraph` (turned
into reciprocal-cost affinities) or a dense nonnegative affinity matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .graph import CostGraph, affinity_matrix

__all__ = ["NodeIndexVector", "degree", "strength", "clustering_coefficient"]

_DIRECTIONS = ("in", "out", "total")


@dataclass(frozen=True, eq=False)
class NodeIndexVector:
    name: str
    values: np.ndarray

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _affinity(X) -> np.ndarray:
    if isinstance(X, CostGraph):
        return affinity_matrix(X)
    a = np.array(X, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"affinity must be a square matrix, got shape {a.shape}")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError("affinity entries must be finite and nonnegative")
    np.fill_diagonal(a, 0.0)
    return a


def _directed(a, direction):
    if direction == "out":
        return a
    if direction == "in":
        return a.T
    if direction == "total":
        # undirected view: a neighbour in either direction counts once
        return np.maximum(a, a.T)
    raise ValueError(f"direction must be one of {_DIRECTIONS}, got {direction!r}")


def degree(X, direction: str = "total") -> NodeIndexVector:
    """Number of neighbours of each node.

    ``"total"`` counts a node joined in either direction once, so on an
    undirected (symmetric) graph it equals the out-degree.
    """
    a = _directed(_affinity(X), direction)
    return NodeIndexVector(f"degree-{direction}", np.count_nonzero(a, axis=1).astype(np.float64))


def strength(X, direction: str = "total") -> NodeIndexVector:
    """Sum of the affinities of each node's arcs (same direction rules as :func:`degree`)."""
    a = _directed(_affinity(X), direction)
    return NodeIndexVector(f"strength-{direction}", a.sum(axis=1))


def clustering_coefficient(X, weighted: bool = False) -> NodeIndexVector:
    """Watts-Strogatz clustering, or its Barrat et al. weighted extension.

    Unweighted: ``2 t_i / (d_i (d_i - 1))`` with ``t_i`` the number of
    edges among the neighbours of ``i``.  Weighted::

        C_i = 1 / (s_i (d_i - 1)) * sum_{j,h} (a_ij + a_ih) / 2 * [ij, ih, jh edges]

    with ``s_i`` the strength.  Nodes of degree < 2 get 0.  Asymmetric
    input is symmetrized with an elementwise max (and a warning).
    """
    a = _affinity(X)
    if not np.array_equal(a, a.T):
        warnings.warn("clustering coefficient needs an undirected graph; symmetrizing with max(A, A^T)",
                      RuntimeWarning, stacklevel=2)
        a = np.maximum(a, a.T)
    b = (a > 0).astype(np.float64)
    d = b.sum(axis=1)
    cc = np.zeros(len(a))
    ok = d >= 2
    if weighted:
        s = a.sum(axis=1)
        # sum over ordered pairs (j, h) of the two half-weights is symmetric
        # in j <-> h, so it collapses to sum_j a_ij * #common(i, j)
        num = (a * (b @ b)).sum(axis=1)
        cc[ok] = num[ok] / (s[ok] * (d[ok] - 1))
        name = "cc-weighted"
    else:
        tri2 = (b * (b @ b)).sum(axis=1)  # 2 t_i
        cc[ok] = tri2[ok] / (d[ok] * (d[ok] - 1))
        name = "cc-unweighted"
    return NodeIndexVector(name, np.clip(cc, 0.0, 1.0))
