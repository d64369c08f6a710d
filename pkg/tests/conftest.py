import time

import pytest

from dictplan.mdp import build_graph
from dictplan.scenarios import first_batch
from dictplan.solver import solve

# Lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES = []
SOLVE_SECONDS = {}


@pytest.fixture(scope="session")
def first_batch_solution():
    """The five-language graph with its values and policy (built once)."""
    t0 = time.perf_counter()
    graph = build_graph(first_batch())
    values, policy = solve(graph)
    SOLVE_SECONDS["first_batch"] = time.perf_counter() - t0
    return graph, values, policy


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
