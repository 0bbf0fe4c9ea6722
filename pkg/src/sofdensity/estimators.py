"""scikit-learn compatible wrappers.

Graph builders are stateless transformers from a ``(n, 2)`` point array to
a symmetric ``(n, n)`` affinity matrix; :class:`SofDensity` consumes an
affinity matrix (or a :class:`~sofdensity.graph.CostGraph`) and yields
one density per node, so they chain in a :class:`sklearn.pipeline.Pipeline`::

    Pipeline([("graph", EpsilonGraph(percentile=95)), ("sof", SofDensity(theta=5))])
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .datasets import epsilon_graph, knn_graph, pairwise_affinity
from .engine import DEFAULT_COND_BOUND, sof_density
from .evaluation import spearman
from .graph import check_graph

__all__ = ["EpsilonGraph", "KNNGraph", "SofDensity"]


def _check_points(X):
    return check_array(X, dtype="float64", ensure_min_samples=2)


class _GraphBuilder(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = _check_points(X)
        self._validate_params_local(len(X))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = _check_points(X)
        self._validate_params_local(len(X))
        g = self._build(pairwise_affinity(X))
        return g.affinity

    def _validate_params_local(self, n):
        pass


class EpsilonGraph(_GraphBuilder):
    """Gaussian-kernel affinities thresholded at a percentile.

    Parameters
    ----------
    percentile : float, default=95
        Pairs with affinity strictly above this nearest-rank percentile of
        all pair affinities are linked.
    weighted : bool, default=True
        Keep affinities as edge weights; otherwise edges weigh 1.
    """

    def __init__(self, percentile=95, weighted=True):
        self.percentile = percentile
        self.weighted = weighted

    def _validate_params_local(self, n):
        if not 0 <= self.percentile <= 100:
            raise ValueError(f"percentile must lie in [0, 100], got {self.percentile}")

    def _build(self, affinity):
        return epsilon_graph(affinity, self.percentile, self.weighted)


class KNNGraph(_GraphBuilder):
    """Gaussian-kernel k-nearest-neighbour graph, symmetrized by ``max(A, A^T)``."""

    def __init__(self, n_neighbors=10, weighted=True):
        self.n_neighbors = n_neighbors
        self.weighted = weighted

    def _validate_params_local(self, n):
        if not 0 < self.n_neighbors < n:
            raise ValueError(f"n_neighbors must be in [1, {n - 1}], got {self.n_neighbors}")

    def _build(self, affinity):
        return knn_graph(affinity, self.n_neighbors, self.weighted)


class SofDensity(BaseEstimator):
    """Sum-over-Forests density index.

    The model is transductive: :meth:`fit` computes the index of every
    node of the given graph, there is no out-of-sample ``transform``.

    Parameters
    ----------
    theta : float, default=5.0
        Inverse temperature. Small values weight all forests alike, large
        values concentrate on the cheapest ones.
    cond_bound : float, default=1e12
        Condition estimate above which an ``IllConditionedWarning`` is raised.

    Attributes
    ----------
    density_ : ndarray of shape (n_nodes,)
    log_partition_ : float
    free_energy_ : float
    result_ : SofResult
    """

    def __init__(self, theta=5.0, cond_bound=DEFAULT_COND_BOUND):
        self.theta = theta
        self.cond_bound = cond_bound

    def fit(self, X, y=None):
        """`X` is a CostGraph or a square affinity matrix (zero = no arc)."""
        graph = check_graph(X)
        res = sof_density(graph, self.theta, self.cond_bound)
        self.result_ = res
        self.density_ = res.density
        self.log_partition_ = res.log_partition
        self.free_energy_ = res.free_energy
        self.n_nodes_ = graph.n
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).density_

    def score(self, X, y):
        """Spearman correlation between the density of `X` and a reference `y`."""
        return spearman(sof_density(X, self.theta, self.cond_bound).density, y)
