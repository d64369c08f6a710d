"""Execute a plan against sampled actors, then see what re-planning buys when actors disappoint.

Run: python demos/03_simulate_and_replan.py
"""
from dictplan import ActorModel, BetaParams, ScenarioConfig, SimilarityMatrix
from dictplan import build_graph, monte_carlo, simulate_execution, solve

sim = SimilarityMatrix.from_pairs({("a", "b"): .8, ("a", "c"): .7, ("a", "d"): .6,
                                   ("b", "c"): .7, ("b", "d"): .6, ("c", "d"): .75})
config = ScenarioConfig(("a", "b", "c", "d"), sim,
                        {("a", "b"): 2000, ("a", "c"): 2000, ("a", "d"): 1500},
                        merge_pivot_tags=True, size_quantum=100)
graph = build_graph(config)
values, policy = solve(graph)
print(f"planned expected cost: {values[graph.start]:.0f}\n")

# One execution where actors behave exactly as the planner believes.
honest = ActorModel.matching(config)
trace = simulate_execution(graph, policy, honest, config, seed=42)
print(trace.to_text(config))

summary, _ = monte_carlo(config, honest, 2000, seed=1, graph=graph, policy=policy)
print(f"\nrealized mean over 2000 runs: {summary.mean:.0f} (std {summary.std:.0f})")

# Pivot precision is far worse than the priors suggest.
poor = ActorModel(default_precision=BetaParams(2, 6))
static, _ = monte_carlo(config, poor, 300, seed=3, mode="static")
replan, _ = monte_carlo(config, poor, 300, seed=3, mode="replan")
print(f"\npoor pivots, static policy: {static.mean:.0f}")
print(f"poor pivots, re-planning:   {replan.mean:.0f}")
