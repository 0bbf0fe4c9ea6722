"""Closed-form Sum-over-Forests quantities.

Everything is derived from one LU factorization of ``M = I + L(W)`` with
``W = exp(-theta * C)`` on the arcs:

* ``log Z = log det M`` (sum of log pivot magnitudes),
* ``Z = M^{-1}`` (n solves against the factors),
* ``eta(k, k') = w_kk' * (z_k'k' - z_k'k)`` for every arc,
* ``dens = W diag(Z) - diag(W Z)``, the expected out-degree of each node
  under the Boltzmann distribution over diverging forests.

``M`` is strictly column diagonally dominant (its column sums are all 1),
so partial pivoting never swaps rows and ``det M >= 1``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy.linalg import lapack

from .exceptions import IllConditionedWarning, InconsistencyError, NumericalError
from .graph import CostGraph, check_graph, laplacian, weight_matrix

__all__ = [
    "BOUND_TOL",
    "DEFAULT_COND_BOUND",
    "EdgeExpectation",
    "density_from_z",
    "SofResult",
    "edge_expectations",
    "free_energy",
    "log_partition_function",
    "sof_density",
    "solve_z",
]

BOUND_TOL = 1e-9
DEFAULT_COND_BOUND = 1e12


@dataclass(frozen=True)
class _Factor:
    lu: np.ndarray
    piv: np.ndarray
    log_det: float
    condition: float


def _factorize(w) -> _Factor:
    w = np.asarray(w, dtype=np.float64)
    m = np.eye(w.shape[0]) + laplacian(w)
    if not np.all(np.isfinite(m)):
        raise NumericalError("I + L(W) has non-finite entries")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", la.LinAlgWarning)
        lu, piv = la.lu_factor(m, check_finite=False)
    pivots = np.diag(lu)
    mags = np.abs(pivots)
    if np.any(mags == 0) or not np.all(np.isfinite(mags)):
        raise NumericalError("zero or non-finite pivot in the LU factorization of I + L(W)")
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    negative = np.count_nonzero(pivots < 0) + swaps
    if negative % 2:
        raise NumericalError("det(I + L(W)) came out negative; the factorization is unreliable")
    anorm = np.abs(m).sum(axis=0).max() if m.size else 0.0
    if m.size:
        rcond, info = lapack.dgecon(lu, anorm, norm="1")
        condition = np.inf if rcond == 0 else 1.0 / rcond
    else:
        condition = 1.0
    return _Factor(lu, piv, float(np.log(mags).sum()), float(condition))


def log_partition_function(w) -> float:
    """Log of the forest partition function, ``log det(I + L(W))``.

    Examples
    --------
    >>> import numpy as np
    >>> round(log_partition_function(np.array([[0.0, 0.5], [0.0, 0.0]])), 12) == round(np.log(1.5), 12)
    True
    """
    return _factorize(w).log_det


def free_energy(w, theta: float) -> float:
    """``-log Z / theta``."""
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    return -log_partition_function(w) / float(theta)


def _solve(factor: _Factor, cond_bound: float) -> np.ndarray:
    if factor.condition > cond_bound:
        warnings.warn(
            f"condition estimate {factor.condition:.3g} of I + L(W) exceeds {cond_bound:.3g}",
            IllConditionedWarning,
            stacklevel=3,
        )
    n = factor.lu.shape[0]
    return la.lu_solve((factor.lu, factor.piv), np.eye(n), check_finite=False)


def solve_z(w, cond_bound: float = DEFAULT_COND_BOUND) -> np.ndarray:
    """``(I + L(W))^{-1}`` by LU factorization and n triangular solves.

    Emits :class:`IllConditionedWarning` (and still returns) when the
    1-norm condition estimate exceeds `cond_bound`.
    """
    return _solve(_factorize(w), cond_bound)


@dataclass(frozen=True, eq=False)
class EdgeExpectation:
    """Expected presence of each arc in a Boltzmann-sampled forest.

    ``values[i]`` belongs to the arc ``tails[i] -> heads[i]``; non-arcs are
    implicitly zero.
    """

    n: int
    tails: np.ndarray
    heads: np.ndarray
    values: np.ndarray

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(int(t), int(h)): float(v) for t, h, v in zip(self.tails, self.heads, self.values)}

    def as_matrix(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.tails, self.heads] = self.values
        return out

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.tails, weights=self.values, minlength=self.n)

    def __len__(self):
        return len(self.values)


def _check_bounds(values, upper, what):
    low = values < -BOUND_TOL
    high = values > upper + BOUND_TOL
    if np.any(low) or np.any(high):
        worst = values[low | high]
        raise InconsistencyError(f"{what} outside its admissible range: {worst[:5]}")
    return np.clip(values, 0.0, upper)


def edge_expectations(graph: CostGraph, w, z) -> EdgeExpectation:
    """``eta(k, k') = w_kk' (z_k'k' - z_k'k)`` on every arc of `graph`.

    Values within ``BOUND_TOL`` of [0, 1] are clamped; anything further
    out raises :class:`InconsistencyError`.
    """
    w = np.asarray(w)
    z = np.asarray(z)
    t, h = graph.tails, graph.heads
    eta = w[t, h] * (z[h, h] - z[h, t])
    eta = _check_bounds(eta, 1.0, "edge expectation")
    return EdgeExpectation(graph.n, t.copy(), h.copy(), eta)


@dataclass(frozen=True, eq=False)
class SofResult:
    """Output of :func:`sof_density`.

    Attributes
    ----------
    density : ndarray of shape (n,)
        Expected out-degree of every node.
    log_partition : float
        ``log Z``; always >= 0 because the empty forest has weight 1.
    free_energy : float
        ``-log Z / theta``.
    theta : float
    z_matrix : ndarray of shape (n, n)
        ``(I + L(W))^{-1}``.
    weights : ndarray of shape (n, n)
        The weight matrix ``W`` the result was computed from.
    underflowed_arcs : int
        Arcs whose weight ``exp(-theta c)`` rounded to exactly 0.
    condition : float
        1-norm condition estimate of ``I + L(W)``.
    ill_conditioned : bool
    """

    density: np.ndarray
    log_partition: float
    free_energy: float
    theta: float
    z_matrix: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    underflowed_arcs: int = 0
    condition: float = 1.0
    ill_conditioned: bool = False

    @property
    def partition(self) -> float:
        return float(np.exp(self.log_partition))

    def edge_expectations(self, graph: CostGraph) -> EdgeExpectation:
        return edge_expectations(graph, self.weights, self.z_matrix)


def density_from_z(w, z) -> np.ndarray:
    """``W diag(Z) - diag(W Z)``, clamped at 0 within ``BOUND_TOL``."""
    w = np.asarray(w)
    z = np.asarray(z)
    # diag(W Z)_k = sum_k' w_kk' z_k'k, without forming W Z
    d = w @ np.diag(z) - np.einsum("ij,ji->i", w, z)
    return _check_bounds(d, np.inf, "SoF density")


def sof_density(graph, theta: float, cond_bound: float = DEFAULT_COND_BOUND) -> SofResult:
    """SoF density index of every node of `graph` at inverse temperature `theta`.

    `graph` is a :class:`CostGraph` or a square affinity matrix (see
    :func:`~sofdensity.graph.check_graph`).
    """
    graph = check_graph(graph)
    w = weight_matrix(graph, theta)
    underflow = int(np.count_nonzero(w[graph.tails, graph.heads] == 0.0))
    factor = _factorize(w)
    z = _solve(factor, cond_bound)
    d = density_from_z(w, z)
    log_z = factor.log_det
    if log_z < 0:
        if log_z < -BOUND_TOL:
            raise InconsistencyError(f"log partition {log_z} is negative")
        log_z = 0.0
    return SofResult(
        density=d,
        log_partition=log_z,
        free_energy=-log_z / float(theta),
        theta=float(theta),
        z_matrix=z,
        weights=w,
        underflowed_arcs=underflow,
        condition=factor.condition,
        ill_conditioned=factor.condition > cond_bound,
    )
