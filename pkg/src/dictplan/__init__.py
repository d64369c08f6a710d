"""Cost-aware planning of bilingual dictionary creation via pivot induction."""

from dictplan.beta import BetaParams
from dictplan.lexicon import CostModel, ScenarioConfig, ScenarioError, SimilarityMatrix
from dictplan.mdp import PlanAction, StateBudgetExceeded, build_graph, start_state
from dictplan.sim import ActorModel, monte_carlo, replan_loop, simulate_execution, update_posteriors
from dictplan.solver import baseline_all_investment, rollout_expected_plan, solve

__version__ = "0.1.0"

__all__ = [
    "ActorModel", "BetaParams", "CostModel", "PlanAction", "ScenarioConfig", "ScenarioError",
    "SimilarityMatrix", "StateBudgetExceeded", "baseline_all_investment", "build_graph",
    "monte_carlo", "replan_loop", "rollout_expected_plan", "simulate_execution", "solve",
    "start_state", "update_posteriors",
]
