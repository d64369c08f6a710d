"""Dictionary-creation planning as a finite acyclic MDP.

A state assigns a :class:`~dictplan.lexicon.DictState` to every language
pair. Actions either invest human effort in one dictionary or induce it
through a pivot language; a pivot succeeds when the induced precision beats
the threshold ``k`` and otherwise leaves a pivot-tagged, still too small
dictionary that can only be finished by investment.
"""

import functools
import json
import math
from collections import deque
from dataclasses import dataclass

from . import beta
from .lexicon import (
    PIVOT_INPUT,
    CostModel,
    DictState,
    ScenarioError,
    Status,
    candidate_size,
    min_precision_k,
    prior_for_pivot,
    required_size,
    round_half_up,
)

__all__ = [
    "CostModel", "PlanAction", "PlanState", "Target", "Transition", "TransitionGraph",
    "PivotGeometry", "StateBudgetExceeded", "enumerate_actions", "pivot_geometry",
    "target_states", "transition_prob", "estimate_result_sizes", "action_cost", "invest_cost",
    "build_graph", "start_state",
]

SAT = "sat"
UNSAT = "unsat"

_NEGLIGIBLE = 1e-12

INVEST = "invest"
PIVOT = "pivot"


class StateBudgetExceeded(RuntimeError):
    """The reachable state space is larger than the configured cap."""


@dataclass(frozen=True, slots=True)
class PlanAction:
    kind: str
    key: tuple
    pivot: str = None

    def __post_init__(self):
        if self.kind == PIVOT:
            if self.pivot is None or self.pivot in self.key:
                raise ValueError(f"pivot language must differ from {self.key}")
        elif self.kind == INVEST:
            if self.pivot is not None:
                raise ValueError("investment actions take no pivot")
        else:
            raise ValueError(f"unknown action kind {self.kind!r}")

    @classmethod
    def invest(cls, key):
        return cls(INVEST, tuple(key))

    @classmethod
    def pivot_via(cls, key, pivot):
        return cls(PIVOT, tuple(key), pivot)

    @property
    def is_pivot(self):
        return self.kind == PIVOT

    @property
    def label(self):
        x, y = self.key
        if self.is_pivot:
            return f"Pivot({x},{self.pivot},{y})"
        return f"Invest({x},{y})"

    def __str__(self):
        return self.label

    def to_dict(self):
        out = {"kind": self.kind, "key": list(self.key)}
        if self.is_pivot:
            out["pivot"] = self.pivot
        return out

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["kind"], tuple(doc["key"]), doc.get("pivot"))


class PlanState:
    """Status and size of every dictionary, in dictionary-list order.

    Equality and hashing go by content only; the hash is computed once.
    """

    __slots__ = ("dicts", "index", "_hash")

    def __init__(self, dicts, index=None):
        self.dicts = tuple(dicts)
        self.index = index if index is not None else {d.key: i for i, d in enumerate(self.dicts)}
        self._hash = hash(self.dicts)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if not isinstance(other, PlanState):
            return NotImplemented
        return self._hash == other._hash and self.dicts == other.dicts

    def __repr__(self):
        return f"PlanState({self.describe()})"

    def __getitem__(self, key):
        return self.dicts[self.index[key]]

    def __iter__(self):
        return iter(self.dicts)

    @property
    def terminal(self):
        return all(d.status is Status.SATISFIED for d in self.dicts)

    def replace(self, new):
        i = self.index[new.key]
        dicts = self.dicts[:i] + (new,) + self.dicts[i + 1:]
        return PlanState(dicts, self.index)

    def progress(self):
        # Strictly increases along every action: n/eu -> pu is +1, -> s is +2, pu -> s is +1.
        score = 0
        for d in self.dicts:
            if d.status is Status.SATISFIED:
                score += 2
            elif d.status is Status.PIVOT_UNSAT:
                score += 1
        return score

    def describe(self):
        return ", ".join(str(d) for d in self.dicts)

    def to_dict(self):
        return [
            {"key": list(d.key), "status": d.status.value, "size": d.size,
             **({"pivot": d.pivot} if d.status is Status.PIVOT_UNSAT else {})}
            for d in self.dicts
        ]


def start_state(config):
    return PlanState(tuple(config.dictionary_list()))


@dataclass(frozen=True)
class PivotGeometry:
    candidates: int
    required: int
    k: float
    prior: beta.BetaParams
    existing: int


@functools.lru_cache(maxsize=None)
def _branch_stats(alpha, beta_, k):
    p = beta.BetaParams(alpha, beta_)
    unsat = beta.cdf(k, p)
    # Branches this unlikely would only carry truncated means lost to round-off.
    if unsat < _NEGLIGIBLE:
        unsat = 0.0
    elif unsat > 1.0 - _NEGLIGIBLE:
        unsat = 1.0
    sat = 1.0 - unsat
    lower = beta.lower_truncated_mean(k, p) if unsat > 0.0 and k > 0.0 else None
    upper = beta.upper_truncated_mean(k, p) if sat > 0.0 and k < 1.0 else None
    return unsat, sat, lower, upper


def pivot_geometry(state, action, config, prior=None):
    x, y = action.key
    z = action.pivot
    cand = candidate_size(state[config.key(x, z)].size, state[config.key(z, y)].size)
    target = state[action.key]
    req = required_size(target, config.min_size)
    k = min_precision_k(req, cand) if cand > 0 else 1.0
    if prior is None:
        prior = prior_for_pivot(config, x, z, y)
    return PivotGeometry(cand, req, k, prior, target.size)


def enumerate_actions(state, config):
    """Legal actions in ``state``.

    Satisfied dictionaries take no action. Every unsatisfied dictionary may
    be invested in. A dictionary that has not been pivot-induced yet may
    also be induced through any third language whose two input dictionaries
    exist (satisfied, existing or pivot-tagged) and yield candidates.
    """
    actions = []
    for d in state.dicts:
        if d.status is Status.SATISFIED:
            continue
        actions.append(PlanAction.invest(d.key))
        if d.status is Status.PIVOT_UNSAT:
            continue
        x, y = d.key
        for z in config.languages:
            if z == x or z == y:
                continue
            dxz = state[config.key(x, z)]
            dzy = state[config.key(z, y)]
            if dxz.status in PIVOT_INPUT and dzy.status in PIVOT_INPUT \
                    and candidate_size(dxz.size, dzy.size) > 0:
                actions.append(PlanAction.pivot_via(d.key, z))
    return actions


def transition_prob(state, action, branch, config):
    if not action.is_pivot:
        return 1.0 if branch == SAT else 0.0
    geo = pivot_geometry(state, action, config)
    unsat, sat, _, _ = _branch_stats(geo.prior.alpha, geo.prior.beta, geo.k)
    return sat if branch == SAT else unsat


def estimate_result_sizes(state, action, config):
    """Expected dictionary size after a pivot, on the (sat, unsat) branch.

    A branch with zero probability has no size and is reported as None.
    """
    geo = pivot_geometry(state, action, config)
    if geo.candidates == 0:
        return geo.existing, geo.existing
    _, _, lower, upper = _branch_stats(geo.prior.alpha, geo.prior.beta, geo.k)
    sat = None if upper is None else round_half_up(upper * geo.candidates) + geo.existing
    unsat = None if lower is None else round_half_up(lower * geo.candidates) + geo.existing
    return sat, unsat


def invest_cost(required, task, costs, accuracy=None):
    """Price of ``required`` correct pairs; ``accuracy`` defaults to the model's."""
    ordered = required / (costs.human_accuracy if accuracy is None else accuracy)
    if costs.invest_formula == "itemized":
        return required * costs.creation(task) + ordered * costs.evaluation(task)
    return ordered * (costs.creation(task) + costs.evaluation(task))


def action_cost(state, action, branch, config):
    """Unit-time cost of ``action``; pivot creation itself is free.

    Neither action's cost depends on the branch: investment always pays for
    the full shortfall, and pivot evaluation is priced on the expected
    induced set (or on all candidates under ``pivot_charge="candidates"``).
    """
    costs = config.cost_model
    if not action.is_pivot:
        req = required_size(state[action.key], config.min_size)
        return invest_cost(req, config.task_class(action.key), costs)
    geo = pivot_geometry(state, action, config)
    evaluated = geo.candidates
    if costs.pivot_charge == "induced":
        evaluated = beta.mean(geo.prior) * geo.candidates
    return evaluated * costs.evaluation("T4")


def target_states(state, action, config):
    """Successor states of ``action`` tagged with their branch."""
    return [(succ, branch) for succ, branch, _, _ in _outcomes(state, action, config)]


def _outcomes(state, action, config, prior=None):
    # (successor, branch, probability, cost) for every branch of positive probability.
    d = state[action.key]
    if not action.is_pivot:
        succ = state.replace(DictState(d.key, Status.SATISFIED, config.min_size))
        return [(succ, SAT, 1.0, action_cost(state, action, SAT, config))]
    geo = pivot_geometry(state, action, config, prior)
    unsat_p, sat_p, lower, upper = _branch_stats(geo.prior.alpha, geo.prior.beta, geo.k)
    costs = config.cost_model
    evaluated = geo.candidates
    if costs.pivot_charge == "induced":
        evaluated = beta.mean(geo.prior) * geo.candidates
    cost = evaluated * costs.evaluation("T4")
    out = []
    if upper is not None:
        size = round_half_up(upper * geo.candidates) + geo.existing
        size = config.min_size if config.cap_satisfied_size else max(config.min_size, size)
        out.append((state.replace(DictState(d.key, Status.SATISFIED, size)), SAT, sat_p, cost))
    if lower is not None:
        size = round_half_up(lower * geo.candidates) + geo.existing
        if config.size_quantum:
            size = config.size_quantum * round_half_up(size / config.size_quantum)
        size = min(config.min_size - 1, size)
        tag = None if config.merge_pivot_tags else action.pivot
        out.append((state.replace(DictState(d.key, Status.PIVOT_UNSAT, size, tag)), UNSAT, unsat_p, cost))
    return out


@dataclass(frozen=True)
class Target:
    state: int
    probability: float
    cost: float
    size: int
    branch: str


@dataclass(frozen=True)
class Transition:
    action: PlanAction
    targets: tuple

    def expected_cost(self, values):
        return sum(t.probability * (t.cost + values[t.state]) for t in self.targets)

    def target(self, branch):
        for t in self.targets:
            if t.branch == branch:
                return t
        return None


@dataclass
class TransitionGraph:
    config: object
    states: list
    transitions: dict
    start: int = 0

    @property
    def terminals(self):
        return [i for i, s in enumerate(self.states) if s.terminal]

    def __len__(self):
        return len(self.states)

    def id_of(self, state):
        return self._ids[state]

    def __post_init__(self):
        self._ids = {s: i for i, s in enumerate(self.states)}

    def actions(self, sid):
        return [t.action for t in self.transitions.get(sid, ())]

    def transition(self, sid, action):
        for t in self.transitions.get(sid, ()):
            if t.action == action:
                return t
        raise KeyError(f"state {sid} has no action {action}")

    def edges(self):
        for sid, trans in self.transitions.items():
            for t in trans:
                for tgt in t.targets:
                    yield sid, t.action, tgt

    def to_dict(self):
        return {
            "schema": "dictplan.graph/1",
            "languages": list(self.config.languages),
            "min_size": self.config.min_size,
            "start": self.start,
            "terminals": self.terminals,
            "states": [{"id": i, "dicts": s.to_dict()} for i, s in enumerate(self.states)],
            "transitions": [
                {"state": sid, "action": t.action.to_dict(),
                 "targets": [{"state": g.state, "branch": g.branch, "probability": g.probability,
                              "cost": g.cost, "size": g.size} for g in t.targets]}
                for sid in sorted(self.transitions) for t in self.transitions[sid]
            ],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_dot(self):
        lines = ["digraph plan {", "  rankdir=LR;", "  node [shape=box, fontsize=9];"]
        for i, s in enumerate(self.states):
            label = "\\n".join(str(d) for d in s.dicts if not d.satisfied) or "all satisfied"
            style = ", peripheries=2" if s.terminal else ""
            lines.append(f'  s{i} [label="S{i}\\n{label}"{style}];')
        for sid, action, tgt in self.edges():
            lines.append(
                f'  s{sid} -> s{tgt.state} [label="{action.label} {tgt.branch} '
                f'p={tgt.probability:.3f} c={tgt.cost:.1f}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_graph(config, start=None, max_states=None):
    """Expand every reachable state breadth-first from ``start``.

    States are identified by content, so converging action orders share a
    node. Ids follow discovery order, and the lowest unexpanded id is always
    expanded next, which makes the graph fully deterministic.
    """
    if max_states is None:
        max_states = config.max_states
    if start is None:
        start = start_state(config)
    states = [start]
    ids = {start: 0}
    transitions = {}
    queue = deque([0])
    priors = {}
    while queue:
        sid = queue.popleft()
        state = states[sid]
        if state.terminal:
            continue
        trans = []
        for action in enumerate_actions(state, config):
            prior = None
            if action.is_pivot:
                triple = (action.key[0], action.pivot, action.key[1])
                prior = priors.get(triple)
                if prior is None:
                    prior = priors[triple] = prior_for_pivot(config, *triple)
            targets = []
            for succ, branch, prob, cost in _outcomes(state, action, config, prior):
                tid = ids.get(succ)
                if tid is None:
                    if len(states) >= max_states:
                        raise StateBudgetExceeded(
                            f"more than {max_states} reachable states; scenario too large")
                    tid = len(states)
                    ids[succ] = tid
                    states.append(succ)
                    queue.append(tid)
                targets.append(Target(tid, prob, cost, succ[action.key].size, branch))
            trans.append(Transition(action, tuple(targets)))
        if not trans:
            raise ScenarioError(f"non-terminal state without actions: {state.describe()}")
        transitions[sid] = trans
    return TransitionGraph(config, states, transitions, 0)


def probability_defect(transition):
    return abs(math.fsum(t.probability for t in transition.targets) - 1.0)
