"""Compare the all-investment baseline with the optimal pivot-aware plan for five languages.

Building and solving the graph takes roughly 15 to 30 seconds.

Run: python demos/02_plan_first_batch.py
"""
import time

from dictplan import baseline_all_investment, build_graph, rollout_expected_plan, solve
from dictplan.scenarios import first_batch

config = first_batch()

baseline = baseline_all_investment(config)
print(baseline.to_text())

t0 = time.perf_counter()
graph = build_graph(config)
values, policy = solve(graph)
print(f"\n{len(graph)} states, solved in {time.perf_counter() - t0:.1f} s\n")

report = rollout_expected_plan(graph, policy, values)
print(report.to_text())

saving = 1 - values[graph.start] / baseline.total
print(f"\nexpected saving over investing in everything: {saving:.1%}")
