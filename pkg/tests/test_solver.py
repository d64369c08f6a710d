import json

import numpy as np
import pytest

from dictplan.lexicon import ScenarioConfig, SimilarityMatrix
from dictplan.mdp import PlanAction, Target, Transition, TransitionGraph, build_graph, start_state
from dictplan.scenarios import first_batch, second_batch
from dictplan.solver import (
    GraphCycleError,
    baseline_all_investment,
    extract_policy,
    policy_value,
    rollout_expected_plan,
    solve,
    value_iteration,
)

from oracles import (
    brute_force_best,
    hand_two_branch_value,
    micro_two_branch,
    policy_value_recursive,
    random_micro_config,
)


def test_two_branch_matches_hand_computation():
    cfg = micro_two_branch()
    graph = build_graph(cfg)
    values, policy = solve(graph)
    invest, pivot = hand_two_branch_value(cfg)
    assert values[graph.start] == pytest.approx(min(invest, pivot), rel=1e-9)
    chosen = policy[graph.start]
    assert chosen.is_pivot == (pivot < invest)
    assert chosen.is_pivot  # pivoting is the cheaper option here
    q = {t.action: t.expected_cost(values) for t in graph.transitions[graph.start]}
    assert q[PlanAction.invest(("b", "c"))] == pytest.approx(invest)
    assert q[PlanAction.pivot_via(("b", "c"), "a")] == pytest.approx(pivot, rel=1e-9)


def test_single_pivot_unsat_dict_costs_one_investment():
    from dictplan.lexicon import DictState, Status
    cfg = micro_two_branch()
    start = start_state(cfg).replace(DictState(("b", "c"), Status.PIVOT_UNSAT, 1200, "a"))
    graph = build_graph(cfg, start=start)
    values, policy = solve(graph)
    assert len(graph) == 2 and graph.terminals == [1]
    assert policy[0] == PlanAction.invest(("b", "c"))
    assert values[0] == 800 * 3 + 800 / 0.8 * 8
    assert values[1] == 0.0


def _micro_cases(count=50, max_states=10):
    rng = np.random.default_rng(20190101)
    out = []
    while len(out) < count:
        cfg = random_micro_config(rng)
        g = build_graph(cfg)
        if 2 <= len(g) <= max_states:
            out.append(g)
    return out


MICRO_GRAPHS = _micro_cases()


@pytest.mark.parametrize("idx", range(len(MICRO_GRAPHS)))
def test_brute_force_policy_enumeration(idx):
    graph = MICRO_GRAPHS[idx]
    values, policy = solve(graph)
    best = brute_force_best(graph)
    assert values[graph.start] == pytest.approx(best, rel=1e-9, abs=1e-9)
    assert policy_value_recursive(graph, policy, graph.start) == pytest.approx(best, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("idx", range(0, len(MICRO_GRAPHS), 5))
def test_sweep_agrees_with_backward(idx):
    graph = MICRO_GRAPHS[idx]
    back = value_iteration(graph)
    sweep = value_iteration(graph, method="sweep", tol=1e-9)
    assert np.allclose(back, sweep, rtol=0, atol=1e-6)


def test_bellman_consistency_and_bounds(first_batch_solution):
    graph, values, policy = first_batch_solution
    for sid, trans in graph.transitions.items():
        v = graph.transition(sid, policy[sid]).expected_cost(values)
        assert v == pytest.approx(values[sid], abs=1e-6)
        assert values[sid] >= 0.0
    assert all(values[t] == 0.0 for t in graph.terminals)
    assert policy_value(graph, policy) == pytest.approx(values[graph.start], abs=1e-6)
    assert values[graph.start] <= baseline_all_investment(graph.config).expected_total


def test_policy_actions_are_legal(first_batch_solution):
    from dictplan.mdp import enumerate_actions
    graph, _, policy = first_batch_solution
    for sid in list(policy)[:2000]:
        assert policy[sid] in enumerate_actions(graph.states[sid], graph.config)


def test_tie_break_prefers_invest_then_label():
    # Two identical-cost actions in a hand-built graph.
    cfg = micro_two_branch()
    s0 = start_state(cfg)
    a1 = PlanAction.pivot_via(("a", "c"), "b")
    a2 = PlanAction.invest(("a", "c"))
    g = TransitionGraph(cfg, [s0, s0], {0: [Transition(a1, (Target(1, 1.0, 5.0, 0, "sat"),)),
                                            Transition(a2, (Target(1, 1.0, 5.0, 0, "sat"),))]})
    assert extract_policy(g, [0.0, 0.0])[0] == a2
    b1 = PlanAction.invest(("b", "c"))
    g2 = TransitionGraph(cfg, [s0, s0], {0: [Transition(b1, (Target(1, 1.0, 5.0, 0, "sat"),)),
                                             Transition(a2, (Target(1, 1.0, 5.0, 0, "sat"),))]})
    assert extract_policy(g2, [0.0, 0.0])[0] == a2       # "Invest(a,c)" < "Invest(b,c)"


def test_cycle_detected():
    cfg = micro_two_branch()
    s0 = start_state(cfg)
    a = PlanAction.invest(("a", "c"))
    g = TransitionGraph(cfg, [s0, s0], {0: [Transition(a, (Target(1, 1.0, 1.0, 0, "sat"),))],
                                        1: [Transition(a, (Target(0, 1.0, 1.0, 0, "sat"),))]})
    with pytest.raises(GraphCycleError):
        value_iteration(g)
    with pytest.raises(ValueError):
        value_iteration(build_graph(cfg), method="other")


def test_baseline_first_batch_rows():
    report = baseline_all_investment(first_batch())
    assert report.total == 162280
    rows = {r.task: r for r in report.rows}
    assert rows["CT1(ind, zlm) - 711 exist"].cost == 5478
    assert rows["CT1(ind, zlm) - 711 exist"].ordered == 1611
    assert rows["CT2(zlm, min) - 1246 exist"].cost == 9802
    assert rows["CT2(jav, sun)"].cost == 26000
    assert rows["CT2(jav, sun)"].paid == 4500
    assert [r.task.startswith("CT1") for r in report.rows][:3] == [True, True, True]
    assert report.total == sum(r.cost for r in report.rows)


def test_baseline_second_batch():
    report = baseline_all_investment(second_batch())
    assert report.total == 251000
    assert len(report.rows) == 11
    assert sum(r.task.startswith("CT1") for r in report.rows) == 2


def test_baseline_nothing_to_do():
    sim = SimilarityMatrix.from_pairs({("a", "b"): .5, ("a", "c"): .5, ("b", "c"): .5})
    cfg = ScenarioConfig(("a", "b", "c"), sim, {("a", "b"): 5, ("a", "c"): 5, ("b", "c"): 5}, min_size=5)
    assert baseline_all_investment(cfg).total == 0
    graph = build_graph(cfg)
    values, policy = solve(graph)
    report = rollout_expected_plan(graph, policy, values)
    assert report.rows == [] and report.total == 0


def test_rollout_micro_sequence():
    sim = SimilarityMatrix.from_pairs({("a", "b"): .7, ("a", "c"): .6, ("b", "c"): .5})
    cfg = ScenarioConfig(("a", "b", "c"), sim, {("a", "b"): 900, ("a", "c"): 700})
    graph = build_graph(cfg)
    values, policy = solve(graph)
    report = rollout_expected_plan(graph, policy, values)
    tasks = [r.task for r in report.rows]
    assert tasks == ["CT1(a, b) - 900 exist", "CT1(a, c) - 700 exist", "P(b, a, c)", "T4(b, a, c)"]
    assert report.rows[0].cost == 4675 and report.rows[1].cost == 5525
    assert len(report.contingencies) == 1
    c = report.contingencies[0]
    assert c.branch == "unsat" and c.rows[0].task.startswith("CT2(b, c)")
    assert report.total == sum(r.cost for r in report.rows)
    doc = json.loads(report.to_json())
    assert doc["schema"] == "dictplan.report/1" and doc["total"] == report.total
    text = report.to_text()
    assert "TOTAL" in text and "if unsat" in text


def test_pivot_row_shows_branch_expectation():
    from dictplan.lexicon import DictState, Status
    from dictplan.solver import pivot_rows
    cfg = first_batch()
    s = start_state(cfg).replace(DictState(("ind", "zlm"), Status.SATISFIED, 2000))
    a = PlanAction.pivot_via(("zlm", "min"), "ind")
    piv, t4 = pivot_rows(s, a, cfg, "sat")
    assert (piv.precision, piv.induced) == (0.6981, 2792)
    assert t4.cost == 11168                               # charged on the prior mean
    assert pivot_rows(s, a, cfg)[0].precision == 0.6980
    assert pivot_rows(s, a, cfg, "unsat")[0].precision < 0.1885
