import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_graphs
from sofdensity.engine import (
    density_from_z,
    edge_expectations,
    free_energy,
    log_partition_function,
    sof_density,
    solve_z,
)
from sofdensity.exceptions import IllConditionedWarning, InconsistencyError, InvalidGraphError
from sofdensity.graph import CostGraph, weight_matrix
from sofdensity.oracle import oracle_density, oracle_distribution, oracle_edge_expectation

W = 0.37


class TestPartitionFunction:
    def test_no_arcs(self):
        assert log_partition_function(np.zeros((4, 4))) == 0.0

    def test_single_arc(self):
        assert log_partition_function([[0, W], [0, 0]]) == pytest.approx(math.log1p(W), rel=1e-14)

    def test_two_cycle(self):
        assert log_partition_function([[0, W], [W, 0]]) == pytest.approx(math.log(1 + 2 * W), rel=1e-14)

    def test_matches_oracle_on_examples(self, single_arc, two_cycle):
        for g, expected in [(single_arc, 1 + math.exp(-1)), (two_cycle, 1 + 2 * math.exp(-1))]:
            assert oracle_distribution(g, 1.0).partition_value == pytest.approx(expected, rel=1e-15)
            assert math.exp(log_partition_function(weight_matrix(g, 1.0))) == pytest.approx(expected, rel=1e-14)

    def test_large_graph_does_not_overflow(self):
        # det(I + L) grows like (1 + d)^n; the log stays finite
        n = 400
        w = np.full((n, n), 0.9)
        np.fill_diagonal(w, 0)
        lz = log_partition_function(w)
        assert math.isfinite(lz) and lz > 700


class TestFreeEnergy:
    def test_empty(self):
        assert free_energy(np.zeros((3, 3)), 2.0) == 0.0

    @pytest.mark.parametrize("theta", [0.5, 1.0, 5.0])
    def test_single_arc(self, theta):
        c = 1.7
        g = CostGraph.from_arcs(2, [(0, 1, c)])
        expected = -math.log1p(math.exp(-theta * c)) / theta
        assert free_energy(weight_matrix(g, theta), theta) == pytest.approx(expected, rel=1e-13)

    def test_large_theta_approaches_zero_from_below(self, triangle):
        values = [free_energy(weight_matrix(triangle, t), t) for t in (1, 10, 100, 1000)]
        assert all(v <= 0 for v in values)
        assert values == sorted(values)
        assert abs(values[-1]) < 1e-300 or values[-1] == 0

    def test_rejects_theta(self):
        with pytest.raises(ValueError):
            free_energy(np.zeros((2, 2)), 0)


class TestSolveZ:
    def test_identity(self):
        np.testing.assert_array_equal(solve_z(np.zeros((3, 3))), np.eye(3))

    def test_single_arc(self):
        z = solve_z([[0, W], [0, 0]])
        np.testing.assert_allclose(z, [[1, W / (1 + W)], [0, 1 / (1 + W)]], rtol=1e-14, atol=1e-16)

    def test_two_cycle(self):
        z = solve_z([[0, W], [W, 0]])
        np.testing.assert_allclose(z, np.array([[1 + W, W], [W, 1 + W]]) / (1 + 2 * W), rtol=1e-14)

    def test_ill_conditioned_flag(self, two_cycle):
        with pytest.warns(IllConditionedWarning):
            solve_z(weight_matrix(two_cycle, 1.0), cond_bound=1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IllConditionedWarning)
            res = sof_density(two_cycle, 1.0, cond_bound=1.0)
        assert res.ill_conditioned
        np.testing.assert_allclose(res.density, oracle_density(two_cycle, 1.0), atol=1e-14)


class TestEdgeExpectations:
    def test_single_arc(self, single_arc):
        w = weight_matrix(single_arc, 1.0)
        eta = edge_expectations(single_arc, w, solve_z(w)).as_dict()
        wv = math.exp(-1)
        assert eta == {(0, 1): pytest.approx(wv / (1 + wv), rel=1e-14)}
        assert oracle_edge_expectation(single_arc, 1.0).as_dict()[(0, 1)] == pytest.approx(wv / (1 + wv))

    def test_two_cycle(self, two_cycle):
        w = weight_matrix(two_cycle, 1.0)
        eta = edge_expectations(two_cycle, w, solve_z(w)).values
        wv = math.exp(-1)
        np.testing.assert_allclose(eta, wv / (1 + 2 * wv), rtol=1e-14)

    def test_empty(self):
        g = CostGraph.from_arcs(3, [])
        w = weight_matrix(g, 1.0)
        assert edge_expectations(g, w, solve_z(w)).as_dict() == {}

    def test_corrupt_z_detected(self, single_arc):
        w = weight_matrix(single_arc, 1.0)
        z = solve_z(w)
        z[1, 1] = -z[1, 1]
        with pytest.raises(InconsistencyError):
            edge_expectations(single_arc, w, z)
        with pytest.raises(InconsistencyError):
            density_from_z(w, z)

    def test_clamps_rounding_noise(self, single_arc):
        w = np.zeros((2, 2))
        w[0, 1] = 1.0
        z = np.array([[1.0, 0.0], [0.0, 1.0 + 5e-10]])  # eta = 1 + 5e-10
        assert edge_expectations(single_arc, w, z).values[0] == 1.0


class TestDensity:
    @pytest.mark.parametrize("theta", [0.5, 1.0, 5.0])
    def test_single_arc(self, single_arc, theta):
        wv = math.exp(-theta)
        np.testing.assert_allclose(sof_density(single_arc, theta).density, [wv / (1 + wv), 0], atol=1e-15)

    @pytest.mark.parametrize("theta", [0.5, 1.0, 5.0])
    def test_two_cycle(self, two_cycle, theta):
        wv = math.exp(-theta)
        np.testing.assert_allclose(sof_density(two_cycle, theta).density, wv / (1 + 2 * wv), rtol=1e-14)

    def test_triangle_against_oracle(self, triangle):
        res = sof_density(triangle, 1.0)
        np.testing.assert_allclose(res.density, oracle_density(triangle, 1.0), atol=1e-14)
        # vertex-transitive
        assert np.ptp(res.density) < 1e-12

    def test_accepts_affinity_matrix(self):
        res = sof_density(np.array([[0, 0.5], [0.5, 0]]), 1.0)
        wv = math.exp(-2)
        np.testing.assert_allclose(res.density, wv / (1 + 2 * wv), rtol=1e-14)

    def test_rejects_invalid(self):
        with pytest.raises(InvalidGraphError):
            sof_density(CostGraph.from_arcs(2, [(0, 1, -1.0)]), 1.0)

    def test_underflow_counter(self):
        g = CostGraph.from_arcs(3, [(0, 1, 1.0), (1, 2, 1000.0), (2, 1, 2000.0)])
        res = sof_density(g, 1.0)
        assert res.underflowed_arcs == 2
        assert res.density[1] == 0 and res.density[2] == 0
        assert res.density[0] > 0

    def test_isolated_nodes_zero(self):
        g = CostGraph.from_arcs(5, [(0, 1, 0.5), (1, 0, 0.7), (1, 2, 0.3)])
        d = sof_density(g, 1.0).density
        assert d[3] == 0.0 and d[4] == 0.0

    @pytest.mark.parametrize("n", [3, 5, 8])
    def test_directed_cycle_symmetry(self, n):
        g = CostGraph.from_arcs(n, [(i, (i + 1) % n, 1.3) for i in range(n)])
        d = sof_density(g, 0.7).density
        assert np.ptp(d) < 1e-12

    def test_complete_graph_symmetry(self):
        n = 6
        g = CostGraph.from_arcs(n, [(i, j, 0.8) for i in range(n) for j in range(n) if i != j])
        assert np.ptp(sof_density(g, 2.0).density) < 1e-12

    def test_large_theta_limit(self, triangle):
        res = sof_density(triangle, 1e3)
        assert 0 <= res.log_partition <= 1e-6
        assert np.all(res.density < 1e-6)

    def test_deterministic(self, rng):
        a = rng.random((60, 60))
        a = np.where(a > 0.7, a, 0)
        np.fill_diagonal(a, 0)
        r1, r2 = sof_density(a, 3.0), sof_density(a, 3.0)
        assert np.array_equal(r1.density, r2.density)


@settings(max_examples=150, deadline=None)
@given(small_graphs(), st.sampled_from([0.1, 1.0, 5.0]))
def test_oracle_equivalence(g, theta):
    res = sof_density(g, theta)
    z_oracle = oracle_distribution(g, theta).partition_value
    assert abs(math.exp(res.log_partition) - z_oracle) / z_oracle < 1e-10
    assert np.max(np.abs(res.density - oracle_density(g, theta)), initial=0) < 1e-10


@settings(max_examples=100, deadline=None)
@given(small_graphs(max_nodes=6, max_arcs=16), st.floats(0.05, 10))
def test_invariants(g, theta):
    res = sof_density(g, theta)
    eta = res.edge_expectations(g)
    assert np.all((eta.values >= 0) & (eta.values <= 1))
    assert np.all(res.density >= 0)
    assert np.all(res.density <= g.out_degree() + 1e-12)
    assert res.log_partition >= 0
    # both density formulas agree; total equals the expected arc count
    np.testing.assert_allclose(eta.row_sums(), res.density, atol=1e-13)
    assert res.density.sum() == pytest.approx(eta.values.sum(), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(small_graphs(max_nodes=4, max_arcs=8).filter(lambda g: g.n_arcs > 0), st.sampled_from([0.5, 1.0, 2.0]))
def test_gradient_of_free_energy(g, theta):
    h = 1e-6
    res = sof_density(g, theta)
    eta = res.edge_expectations(g).values
    for i in range(g.n_arcs):
        up, down = g.costs.copy(), g.costs.copy()
        up[i] += h
        down[i] -= h
        f_up = free_energy(weight_matrix(g.with_costs(up), theta), theta)
        f_down = free_energy(weight_matrix(g.with_costs(down), theta), theta)
        fd = (f_up - f_down) / (2 * h)
        assert fd == pytest.approx(eta[i], rel=1e-4, abs=1e-9)
