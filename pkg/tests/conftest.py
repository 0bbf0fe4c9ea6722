import numpy as np
import pytest
from hypothesis import strategies as st

from sofdensity.graph import CostGraph


@st.composite
def small_graphs(draw, max_nodes=5, max_arcs=10, cost_min=0.1, cost_max=3.0):
    """Random directed graphs, no self-loops, at most `max_arcs` arcs."""
    n = draw(st.integers(1, max_nodes))
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=max_arcs)) if pairs else []
    costs = draw(st.lists(st.floats(cost_min, cost_max), min_size=len(chosen), max_size=len(chosen)))
    return CostGraph.from_arcs(n, [(i, j, c) for (i, j), c in zip(chosen, costs)])


@pytest.fixture
def single_arc():
    return CostGraph.from_arcs(2, [(0, 1, 1.0)])


@pytest.fixture
def two_cycle():
    return CostGraph.from_arcs(2, [(0, 1, 1.0), (1, 0, 1.0)])


@pytest.fixture
def triangle():
    return CostGraph.from_arcs(3, [(i, j, 1.0) for i in range(3) for j in range(3) if i != j])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash[_VERDICTS]

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
