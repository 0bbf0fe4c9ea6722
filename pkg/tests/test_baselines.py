import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sofdensity.baselines import clustering_coefficient, degree, strength
from sofdensity.graph import CostGraph


def _sym(a):
    a = np.triu(a, 1)
    return a + a.T


def barrat_loop(a):
    """Weighted clustering evaluated term by term."""
    n = len(a)
    out = np.zeros(n)
    for i in range(n):
        nb = [j for j in range(n) if a[i, j] > 0]
        k = len(nb)
        if k < 2:
            continue
        s = sum(a[i, j] for j in nb)
        tot = 0.0
        for j, h in itertools.product(nb, nb):
            if j != h and a[j, h] > 0:
                tot += (a[i, j] + a[i, h]) / 2
        out[i] = tot / (s * (k - 1))
    return out


sym_affinities = arrays(np.float64, (6, 6), elements=st.sampled_from([0.0, 0.0, 0.3, 0.7, 1.0, 2.5])).map(_sym)


def test_degree_two_cycle():
    a = np.array([[0, 1.0], [1.0, 0]])
    np.testing.assert_array_equal(degree(a, "out").values, [1, 1])


def test_degree_empty():
    np.testing.assert_array_equal(degree(np.zeros((4, 4))).values, np.zeros(4))


def test_degree_star():
    a = np.zeros((5, 5))
    a[0, 1:] = a[1:, 0] = 1
    np.testing.assert_array_equal(degree(a, "total").values, [4, 1, 1, 1, 1])


def test_directions():
    a = np.array([[0, 0.5, 0], [0, 0, 0.2], [0, 0, 0]])
    np.testing.assert_allclose(strength(a, "out").values, [0.5, 0.2, 0])
    np.testing.assert_allclose(strength(a, "in").values, [0, 0.5, 0.2])
    np.testing.assert_allclose(strength(a, "total").values, [0.5, 0.7, 0.2])
    np.testing.assert_array_equal(degree(a, "in").values, [0, 1, 1])
    with pytest.raises(ValueError):
        degree(a, "sideways")


def test_strength_single_arc():
    np.testing.assert_allclose(strength(np.array([[0, 0.5], [0, 0]]), "out").values, [0.5, 0])


def test_strength_from_cost_graph():
    g = CostGraph.from_arcs(2, [(0, 1, 4.0), (1, 0, 4.0)])
    np.testing.assert_allclose(strength(g).values, [0.25, 0.25])


@given(arrays(np.float64, (5, 5), elements=st.sampled_from([0.0, 1.0])))
def test_strength_equals_degree_on_unit_weights(a):
    for direction in ("in", "out", "total"):
        assert np.array_equal(strength(a, direction).values, degree(a, direction).values)


def test_cc_triangle():
    a = _sym(np.ones((3, 3)))
    np.testing.assert_array_equal(clustering_coefficient(a).values, [1, 1, 1])


def test_cc_path():
    a = np.zeros((3, 3))
    a[0, 1] = a[1, 0] = a[1, 2] = a[2, 1] = 1
    np.testing.assert_array_equal(clustering_coefficient(a).values, [0, 0, 0])


def test_cc_four_clique_weighted_equals_unweighted():
    a = _sym(np.ones((4, 4)))
    np.testing.assert_allclose(clustering_coefficient(a, weighted=True).values, 1.0, rtol=1e-15)
    np.testing.assert_allclose(clustering_coefficient(a, weighted=False).values, 1.0, rtol=1e-15)


def test_cc_symmetrizes_with_warning():
    a = np.zeros((3, 3))
    a[0, 1] = a[1, 2] = a[2, 0] = 1.0
    with pytest.warns(RuntimeWarning, match="symmetrizing"):
        cc = clustering_coefficient(a)
    np.testing.assert_array_equal(cc.values, [1, 1, 1])


@settings(max_examples=60)
@given(sym_affinities)
def test_cc_matches_networkx_unweighted(a):
    ours = clustering_coefficient(a).values
    g = nx.from_numpy_array((a > 0).astype(int))
    ref = nx.clustering(g)
    np.testing.assert_allclose(ours, [ref[i] for i in range(len(a))], atol=1e-14)


@settings(max_examples=60)
@given(sym_affinities)
def test_cc_weighted_matches_loop(a):
    np.testing.assert_allclose(clustering_coefficient(a, weighted=True).values, barrat_loop(a), atol=1e-14)


@settings(max_examples=60)
@given(sym_affinities, st.sampled_from([0.1, 1.0, 3.0]))
def test_cc_bounds_and_barrat_reduction(a, c):
    cw = clustering_coefficient(a, weighted=True).values
    cu = clustering_coefficient(a, weighted=False).values
    assert np.all((cw >= 0) & (cw <= 1)) and np.all((cu >= 0) & (cu <= 1))
    equal = np.where(a > 0, c, 0.0)
    np.testing.assert_allclose(clustering_coefficient(equal, weighted=True).values, cu, atol=1e-14)
