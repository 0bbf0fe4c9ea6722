import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_graphs
from sofdensity.exceptions import InvalidGraphError
from sofdensity.graph import (
    CostGraph,
    affinity_matrix,
    check_graph,
    format_edge_list,
    laplacian,
    parse_edge_list,
    read_edge_list,
    validate,
    weight_matrix,
    write_edge_list,
)


class TestValidate:
    def test_self_loop(self):
        g = CostGraph.from_arcs(2, [(0, 1, 1.0), (1, 1, 1.0)])
        rep = validate(g)
        assert not rep.ok
        assert [(v.kind, v.arc) for v in rep.violations] == [("self-loop", 1)]
        assert "self-loop at node 2" in str(rep)

    def test_zero_cost(self):
        rep = validate(CostGraph.from_arcs(2, [(0, 1, 0.0)]))
        assert [v.kind for v in rep.violations] == ["nonpositive-cost"]

    def test_negative_and_nan_cost(self):
        rep = validate(CostGraph.from_arcs(3, [(0, 1, -1.0), (1, 2, float("nan"))]))
        assert sorted(v.kind for v in rep.violations) == ["nonfinite-cost", "nonpositive-cost"]

    def test_duplicate(self):
        rep = validate(CostGraph.from_arcs(2, [(0, 1, 1.0), (1, 0, 1.0), (0, 1, 2.0)]))
        assert [(v.kind, v.arc) for v in rep.violations] == [("duplicate-arc", 2)]

    def test_out_of_range(self):
        rep = validate(CostGraph.from_arcs(2, [(0, 2, 1.0)]))
        assert rep.violations[0].kind == "node-range"

    def test_minimal_ok(self, two_cycle):
        assert validate(two_cycle).ok
        assert str(validate(two_cycle)) == "ok"

    def test_reports_every_violation(self):
        g = CostGraph.from_arcs(3, [(0, 0, 1.0), (1, 2, 0.0), (1, 2, 1.0)])
        assert len(validate(g).violations) == 3

    def test_check_graph_raises(self):
        with pytest.raises(InvalidGraphError) as exc:
            check_graph(CostGraph.from_arcs(2, [(0, 0, 1.0)]))
        assert exc.value.violations[0].kind == "self-loop"


class TestWeightMatrix:
    def test_unit_cost(self, single_arc):
        w = weight_matrix(single_arc, 1.0)
        assert w[0, 1] == pytest.approx(0.367879441171, abs=1e-12)
        assert w[1, 0] == 0 and w[0, 0] == 0

    def test_scaled(self):
        w = weight_matrix(CostGraph.from_arcs(2, [(0, 1, 2.0)]), 0.5)
        assert w[0, 1] == pytest.approx(math.exp(-1))

    @pytest.mark.parametrize("theta", [0, -1, float("nan"), float("inf")])
    def test_rejects_bad_theta(self, single_arc, theta):
        with pytest.raises(ValueError):
            weight_matrix(single_arc, theta)

    def test_rejects_nan_cost(self):
        with pytest.raises(ValueError):
            weight_matrix(CostGraph.from_arcs(2, [(0, 1, float("nan"))]), 1.0)

    @given(small_graphs(), st.floats(0.01, 10))
    def test_range_and_pattern(self, g, theta):
        w = weight_matrix(g, theta)
        assert w.min() >= 0 and w.max() < 1
        assert np.all(np.diag(w) == 0)
        expected = np.zeros((g.n, g.n), dtype=bool)
        expected[g.tails, g.heads] = True
        assert np.array_equal(w > 0, expected)

    @given(small_graphs(), st.floats(0.01, 5), st.floats(1.01, 3))
    def test_monotone_in_theta(self, g, theta, factor):
        w1, w2 = weight_matrix(g, theta), weight_matrix(g, theta * factor)
        # equality only where there is no arc
        assert np.all((w1 > w2) | (w1 == 0))


class TestLaplacian:
    def test_single_arc(self):
        w = 0.3
        np.testing.assert_array_equal(laplacian([[0, w], [0, 0]]), [[0, -w], [0, w]])

    def test_zero(self):
        np.testing.assert_array_equal(laplacian(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_symmetric_pair(self):
        w = 0.3
        np.testing.assert_array_equal(laplacian([[0, w], [w, 0]]), [[w, -w], [-w, w]])

    @given(small_graphs(), st.floats(0.01, 10))
    def test_columns_sum_to_zero(self, g, theta):
        lap = laplacian(weight_matrix(g, theta))
        scale = max(np.abs(lap).max(), 1.0)
        assert np.all(np.abs(lap.sum(axis=0)) <= 1e-12 * scale)
        off = lap - np.diag(np.diag(lap))
        assert np.all(off <= 0) and np.all(np.diag(lap) >= 0)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            laplacian(np.zeros((2, 3)))


class TestAffinityConversion:
    def test_reciprocal(self):
        g = CostGraph.from_affinity([[0, 0.5], [0.5, 0]])
        assert sorted(g.arcs) == [(0, 1, 2.0), (1, 0, 2.0)]
        np.testing.assert_array_equal(affinity_matrix(g), [[0, 0.5], [0.5, 0]])

    def test_check_graph_accepts_matrix(self):
        g = check_graph(np.array([[0, 1.0, 0], [1.0, 0, 0], [0, 0, 0]]))
        assert g.n == 3 and g.n_arcs == 2

    def test_check_graph_rejects_negative(self):
        with pytest.raises(ValueError):
            check_graph(np.array([[0, -1.0], [0, 0]]))

    def test_immutable(self, single_arc):
        with pytest.raises(ValueError):
            single_arc.costs[0] = 5.0


class TestEdgeList:
    def test_parse_with_header_and_comments(self):
        g = parse_edge_list("# demo\nn 4\n1 2 0.5  # trailing\n\n2 1 0.25\n")
        assert g.n == 4
        assert g.arcs == [(0, 1, 0.5), (1, 0, 0.25)]

    def test_infer_n(self):
        assert parse_edge_list("1 3 1.0\n").n == 3

    def test_duplicate_is_error(self):
        with pytest.raises(InvalidGraphError, match="duplicate"):
            parse_edge_list("1 2 1.0\n1 2 2.0\n")

    @pytest.mark.parametrize("text", ["0 1 1.0\n", "1 2\n", "1 2 x\n", "n 2\n1 3 1.0\n", "1 1 1.0\n"])
    def test_malformed(self, text):
        with pytest.raises(InvalidGraphError):
            parse_edge_list(text)

    @settings(max_examples=50)
    @given(small_graphs(max_nodes=6, max_arcs=15, cost_min=1e-3, cost_max=1e3))
    def test_round_trip(self, g):
        back = parse_edge_list(format_edge_list(g, ["provenance line"]))
        assert back == g

    def test_files(self, tmp_path, two_cycle):
        p = tmp_path / "g.txt"
        write_edge_list(two_cycle, p)
        assert read_edge_list(p) == two_cycle
