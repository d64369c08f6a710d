import io
import json
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dictplan import beta
from dictplan.beta import BetaParams
from dictplan.lexicon import DictState, ScenarioConfig, ScenarioError, SimilarityMatrix, Status
from dictplan.mdp import SAT, UNSAT, build_graph, invest_cost, start_state
from dictplan.scenarios import (
    FIRST_BATCH_OBSERVED,
    SECOND_BATCH_OBSERVED,
    first_batch,
    second_batch,
)
from dictplan.sim import (
    ActorModel,
    Observation,
    PolicyGapError,
    monte_carlo,
    read_observations,
    replan_loop,
    simulate_execution,
    update_posteriors,
)
from dictplan.lexicon import prior_for_pivot
from dictplan.solver import solve


def micro():
    sim = SimilarityMatrix.from_pairs({("a", "b"): .7, ("a", "c"): .6, ("b", "c"): .5})
    return ScenarioConfig(("a", "b", "c"), sim, {("a", "b"): 900, ("a", "c"): 700})


def four_languages():
    langs = ("a", "b", "c", "d")
    sim = SimilarityMatrix.from_pairs({("a", "b"): .8, ("a", "c"): .7, ("a", "d"): .6,
                                       ("b", "c"): .7, ("b", "d"): .6, ("c", "d"): .75})
    return ScenarioConfig(langs, sim, {("a", "b"): 2000, ("a", "c"): 2000, ("a", "d"): 1500},
                          merge_pivot_tags=True, size_quantum=100)


@pytest.fixture(scope="module")
def micro_plan():
    cfg = micro()
    graph = build_graph(cfg)
    values, policy = solve(graph)
    return cfg, graph, values, policy


def test_point_mass_one_always_satisfies(micro_plan):
    cfg, graph, _, policy = micro_plan
    trace = simulate_execution(graph, policy, ActorModel(default_precision=1.0), cfg, seed=1)
    pivots = [r for r in trace.records if r.action.is_pivot]
    assert pivots and all(r.branch == SAT for r in pivots)
    assert trace.final.terminal


def test_point_mass_zero_forces_investment(micro_plan):
    cfg, graph, _, policy = micro_plan
    trace = simulate_execution(graph, policy, ActorModel(default_precision=0.0), cfg, seed=1)
    recs = trace.records
    for i, r in enumerate(recs):
        if r.action.is_pivot:
            assert r.branch == UNSAT and r.produced == 0
            assert not recs[i + 1].action.is_pivot and recs[i + 1].action.key == r.action.key
    assert trace.final.terminal


def test_seed_determinism(micro_plan):
    cfg, graph, _, policy = micro_plan
    actors = ActorModel(accuracy=BetaParams(8, 2), polysemy=(2.0, 6.0))
    a = simulate_execution(graph, policy, actors, cfg, seed=99).to_dict()
    b = simulate_execution(graph, policy, actors, cfg, seed=99).to_dict()
    c = simulate_execution(graph, policy, actors, cfg, seed=100).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert a != c


def test_trace_follows_graph_edges(micro_plan):
    cfg, graph, _, policy = micro_plan
    for seed in range(30):
        trace = simulate_execution(graph, policy, ActorModel.matching(cfg), cfg, seed=seed)
        sids = [r.state for r in trace.records]
        assert sids[0] == graph.start
        for r, nxt in zip(trace.records, sids[1:]):
            assert nxt in {t.state for t in graph.transition(r.state, r.action).targets}
            # Branch agrees with the realized size.
            assert (r.branch == SAT) == (r.size >= cfg.min_size)
        assert trace.total == pytest.approx(sum(r.cost for r in trace.records))


def test_invest_uses_realized_accuracy(micro_plan):
    cfg, graph, _, policy = micro_plan
    trace = simulate_execution(graph, policy, ActorModel(accuracy=0.5), cfg, seed=0)
    r = trace.records[0]
    assert not r.action.is_pivot and r.accuracy == 0.5
    assert r.cost == invest_cost(r.produced, "CT1", cfg.cost_model, 0.5)
    assert r.cost == 1100 * 3 + 2200 * 1


def test_policy_gap(micro_plan):
    cfg, graph, _, policy = micro_plan
    partial = {graph.start: policy[graph.start]}
    with pytest.raises(PolicyGapError):
        simulate_execution(graph, partial, ActorModel.matching(cfg), cfg, seed=0)


def test_monte_carlo_matches_value(micro_plan):
    cfg, graph, values, policy = micro_plan
    t0 = time.perf_counter()
    summary, _ = monte_carlo(cfg, ActorModel.matching(cfg), 10_000, seed=2019, graph=graph,
                             policy=policy)
    assert time.perf_counter() - t0 < 60
    assert summary.mean == pytest.approx(values[graph.start], rel=0.02)


def test_replan_equals_static_for_point_masses(micro_plan):
    cfg, graph, _, policy = micro_plan
    for p in (0.0, 1.0):
        actors = ActorModel(default_precision=p, accuracy=0.8)
        static = simulate_execution(graph, policy, actors, cfg, seed=5)
        replan = replan_loop(cfg, actors, seed=5)
        assert [r.action for r in static.records] == [r.action for r in replan.records]
        assert [r.cost for r in static.records] == [r.cost for r in replan.records]


def test_replan_helps_when_actors_underperform():
    cfg = four_languages()
    actors = ActorModel(default_precision=BetaParams(2, 6))
    static, _ = monte_carlo(cfg, actors, 1000, seed=11, mode="static")
    replan, _ = monte_carlo(cfg, actors, 1000, seed=11, mode="replan")
    assert replan.mean <= static.mean


def test_single_dictionary_scenario_runs_one_action():
    cfg = micro()
    start = start_state(cfg).replace(DictState(("a", "b"), Status.SATISFIED, 2000)).replace(
        DictState(("a", "c"), Status.SATISFIED, 2000)).replace(
        DictState(("b", "c"), Status.PIVOT_UNSAT, 1200, "a"))
    trace = replan_loop(cfg, ActorModel(default_precision=0.0), seed=0, start=start)
    assert len(trace.records) == 1 and not trace.records[0].action.is_pivot
    assert trace.records[0].produced == 800 and trace.final.terminal


def test_realized_polysemy_changes_precision_draw():
    cfg = first_batch()
    rng = np.random.default_rng(0)
    hi = [ActorModel(polysemy=10.0).draw_precision(cfg, "zlm", "ind", "min", rng)[0] for _ in range(2000)]
    lo = [ActorModel(polysemy=2.0).draw_precision(cfg, "zlm", "ind", "min", rng)[0] for _ in range(2000)]
    assert np.mean(lo) > np.mean(hi)
    p, poly = ActorModel().draw_precision(cfg, "zlm", "ind", "min", rng)
    assert poly == 3.0 and 0 < p < 1


def test_actor_validation():
    with pytest.raises(ScenarioError):
        ActorModel(accuracy=0.0)
    with pytest.raises(ScenarioError):
        ActorModel(default_precision=1.5)
    with pytest.raises(ScenarioError):
        ActorModel(polysemy=(1.0, 3.0))
    with pytest.raises(ScenarioError):
        ActorModel(precision={("a", "b"): 0.5})


def test_trace_text_and_dict(micro_plan):
    cfg, graph, _, policy = micro_plan
    trace = simulate_execution(graph, policy, ActorModel.matching(cfg), cfg, seed=3)
    text = trace.to_text(cfg)
    assert "CT1(a, b) - 900 exist" in text and "TOTAL" in text
    doc = trace.to_dict()
    assert doc["schema"] == "dictplan.trace/1" and len(doc["records"]) == len(trace.records)


# Posterior updating.
def first_batch_priors():
    cfg = first_batch()
    return {t: prior_for_pivot(cfg, *t) for t in FIRST_BATCH_OBSERVED}


FIRST_POSTERIORS = {
    ("zlm", "ind", "min"): (15.783, 4.15), ("zlm", "ind", "jav"): (11.719, 4.99),
    ("zlm", "ind", "sun"): (13.62, 4.67), ("min", "zlm", "jav"): (11.391, 5.61),
    ("min", "ind", "sun"): (12.485, 4.98), ("jav", "ind", "sun"): (11.986, 4.76),
}

SECOND_POSTERIORS = {
    ("plm", "ind", "zlm"): (94.786, 32.400), ("bjn", "ind", "plm"): (94.366, 32.200),
    ("bjn", "ind", "min"): (93.835, 32.470), ("bjn", "ind", "zlm"): (94.233, 32.980),
    ("plm", "bjn", "min"): (93.095, 33.050), ("bjn", "zlm", "sun"): (92.695, 32.470),
    ("plm", "ind", "sun"): (91.473, 33.580), ("bjn", "ind", "jav"): (91.332, 33.230),
    ("plm", "bjn", "jav"): (92.064, 32.490),
}


def test_first_batch_posteriors():
    obs = [Observation(t, p) for t, p in FIRST_BATCH_OBSERVED.items()]
    posts, combined = update_posteriors(first_batch_priors(), obs)
    for t, expected in FIRST_POSTERIORS.items():
        assert posts[t].as_tuple() == pytest.approx(expected, abs=0.01)
    assert combined.as_tuple() == pytest.approx((76.984, 29.16), abs=0.01)


def test_second_batch_posteriors():
    cfg = second_batch()
    priors = {t: prior_for_pivot(cfg, *t) for t in SECOND_BATCH_OBSERVED}
    obs = [Observation(t, p) for t, p in SECOND_BATCH_OBSERVED.items()]
    posts, _ = update_posteriors(priors, obs)
    for t, expected in SECOND_POSTERIORS.items():
        assert posts[t].as_tuple() == pytest.approx(expected, abs=0.01)


def test_empty_batch_keeps_priors():
    priors = first_batch_priors()
    posts, combined = update_posteriors(priors, [])
    assert posts == priors
    assert update_posteriors({}, []) == ({}, None)


def test_unknown_triple_rejected():
    with pytest.raises(ScenarioError):
        update_posteriors(first_batch_priors(), [Observation(("a", "b", "c"), 0.5)])


@settings(max_examples=100, deadline=None)
@given(st.permutations(list(FIRST_BATCH_OBSERVED.items())),
       st.lists(st.floats(0.0, 1.0), min_size=0, max_size=4))
def test_update_order_does_not_matter(perm, extra):
    base = [Observation(t, p) for t, p in FIRST_BATCH_OBSERVED.items()]
    more = [Observation(("zlm", "ind", "min"), p) for p in extra]
    a, ca = update_posteriors(first_batch_priors(), base + more)
    b, cb = update_posteriors(first_batch_priors(), more + [Observation(t, p) for t, p in perm])
    for t in a:
        assert a[t].as_tuple() == pytest.approx(b[t].as_tuple(), abs=1e-12)
    assert ca.as_tuple() == pytest.approx(cb.as_tuple(), abs=1e-12)


def test_read_observations_formats():
    a = read_observations(io.StringIO("triple,precision\nzlm-ind-min,0.885\n# note\njav-ind-sun,0.824\n"))
    b = read_observations(io.StringIO("zlm\tind\tmin\t0.885\njav\tind\tsun\t0.824\n"))
    assert a == b == [Observation(("zlm", "ind", "min"), 0.885), Observation(("jav", "ind", "sun"), 0.824)]


@pytest.mark.parametrize("text,line", [
    ("zlm-ind-min,0.8\nzlm-ind,0.5\n", "line 2"),
    ("zlm-ind-min,0.8\njav-ind-sun,abc\n", "line 2"),
    ("zlm-ind-min,1.4\n", "line 1"),
    ("a,b,c\n", "line 1"),
])
def test_read_observations_errors(text, line):
    with pytest.raises(ScenarioError, match=line):
        read_observations(io.StringIO(text))


def test_realized_sizes_tracked_separately(micro_plan):
    cfg, graph, _, policy = micro_plan
    trace = simulate_execution(graph, policy, ActorModel(default_precision=0.3), cfg, seed=0)
    piv = next(r for r in trace.records if r.action.is_pivot)
    assert piv.candidates == 4000 and piv.produced == 1200
    follow = trace.records[trace.records.index(piv) + 1]
    assert follow.produced == 800 and trace.final[("b", "c")] == DictState(("b", "c"), Status.SATISFIED, 2000)
    assert start_state(cfg)[("b", "c")].status is Status.NOT_EXISTING
    assert beta.mean(BetaParams(1, 1)) == 0.5
