"""Value iteration, policy extraction and plan reports."""

import graphlib
import json
from dataclasses import asdict, dataclass, field

from . import beta
from .lexicon import Status, required_size, round_half_up
from .mdp import SAT, UNSAT, PlanAction, action_cost, pivot_geometry, start_state

# Relative slack under which two expected costs count as a tie.
TIE_RTOL = 1e-9


class GraphCycleError(ValueError):
    """The transition graph is not acyclic."""


def _successors(graph, sid):
    return {t.state for tr in graph.transitions.get(sid, ()) for t in tr.targets}


def topological_order(graph):
    """State ids ordered so every successor precedes its predecessors."""
    sorter = graphlib.TopologicalSorter()
    for sid in range(len(graph.states)):
        sorter.add(sid, *_successors(graph, sid))
    try:
        return list(sorter.static_order())
    except graphlib.CycleError as exc:
        raise GraphCycleError(f"transition graph has a cycle: {exc.args[1]}") from None


def value_iteration(graph, method="backward", tol=1e-6, max_sweeps=10_000):
    """Minimal expected remaining cost of every state.

    ``method="backward"`` solves the acyclic graph exactly in one pass over
    a reverse topological order. ``method="sweep"`` runs the textbook
    synchronous recursion from V = 0 until successive sweeps differ by less
    than ``tol``; on a DAG it converges after at most depth + 1 sweeps.
    """
    n = len(graph.states)
    if method == "backward":
        values = [0.0] * n
        for sid in topological_order(graph):
            trans = graph.transitions.get(sid)
            if trans:
                values[sid] = min(t.expected_cost(values) for t in trans)
        return values
    if method != "sweep":
        raise ValueError(f"unknown method {method!r}")
    topological_order(graph)
    values = [0.0] * n
    for _ in range(max_sweeps):
        new = [0.0] * n
        for sid, trans in graph.transitions.items():
            new[sid] = min(t.expected_cost(values) for t in trans)
        delta = max(abs(a - b) for a, b in zip(new, values))
        values = new
        if delta < tol:
            return values
    raise ArithmeticError(f"value iteration did not converge in {max_sweeps} sweeps")


def _tie_key(action):
    # Investments first, then lexicographic label.
    return (action.is_pivot, action.label)


def extract_policy(graph, values):
    """Cost-minimizing action for every non-terminal state, ties broken deterministically."""
    policy = {}
    for sid, trans in graph.transitions.items():
        scored = [(t.expected_cost(values), t.action) for t in trans]
        best = min(q for q, _ in scored)
        slack = TIE_RTOL * max(1.0, abs(best))
        tied = [a for q, a in scored if q <= best + slack]
        policy[sid] = min(tied, key=_tie_key)
    return policy


def policy_value(graph, policy, sid=None):
    """Expected cost of following ``policy`` from ``sid`` (default: start)."""
    order = topological_order(graph)
    values = [0.0] * len(graph.states)
    for s in order:
        if s in graph.transitions:
            values[s] = graph.transition(s, policy[s]).expected_cost(values)
    return values[graph.start if sid is None else sid]


@dataclass
class ReportRow:
    task: str
    induced: int = None
    precision: float = None
    accuracy: float = None
    ordered: int = None
    paid: int = None
    cost: int = 0
    polysemy: float = None


@dataclass
class Contingency:
    after: int
    probability: float
    rows: list
    branch: str = UNSAT


@dataclass
class PlanReport:
    """Table of planned (or baseline) tasks; costs are whole unit-time."""

    title: str
    rows: list = field(default_factory=list)
    contingencies: list = field(default_factory=list)
    expected_total: float = None

    @property
    def total(self):
        return sum(r.cost for r in self.rows)

    def to_dict(self):
        return {
            "schema": "dictplan.report/1",
            "title": self.title,
            "rows": [asdict(r) for r in self.rows],
            "contingencies": [
                {"after": c.after, "branch": c.branch, "probability": c.probability,
                 "rows": [asdict(r) for r in c.rows]}
                for c in self.contingencies
            ],
            "total": self.total,
            "expected_total": self.expected_total,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_text(self):
        return render_table(self.title, self.rows, self.total, self.contingencies,
                            self.expected_total)


_COLUMNS = (
    ("task", "Task", "<"),
    ("polysemy", "Polysemy", ">"),
    ("induced", "#Induced", ">"),
    ("precision", "Precision", ">"),
    ("accuracy", "Accuracy", ">"),
    ("ordered", "#Ordered", ">"),
    ("paid", "#Paid", ">"),
    ("cost", "Cost", ">"),
)


def _fmt(name, value):
    if value is None:
        return ""
    if name == "precision":
        return f"{value:.4f}"
    if name in ("accuracy", "polysemy"):
        return f"{value:.3f}".rstrip("0").rstrip(".")
    return str(value)


def render_table(title, rows, total, contingencies=(), expected_total=None):
    """Column-aligned plain-text table; empty columns are dropped."""
    extra = {c.after: c for c in contingencies}
    lines = []
    for i, r in enumerate(rows):
        lines.append((r, ""))
        c = extra.get(i)
        if c is not None:
            for cr in c.rows:
                lines.append((cr, f"  if {c.branch} (p={c.probability:.3f}): "))
    all_rows = [r for r, _ in lines]
    cols = [c for c in _COLUMNS if c[0] == "task" or c[0] == "cost"
            or any(getattr(r, c[0]) is not None for r in all_rows)]
    cells = [[(prefix + _fmt(n, getattr(r, n))) if n == "task" else _fmt(n, getattr(r, n))
              for n, _, _ in cols] for r, prefix in lines]
    footer = ["TOTAL"] + [""] * (len(cols) - 2) + [str(total)]
    widths = [max(len(h), *(len(row[i]) for row in cells + [footer])) for i, (_, h, _) in enumerate(cols)]

    def line(values):
        return "  ".join(f"{v:{a}{w}}" for v, (_, _, a), w in zip(values, cols, widths)).rstrip()

    rule = "-" * len(line([h for _, h, _ in cols]))
    out = [title, rule, line([h for _, h, _ in cols]), rule]
    out += [line(row) for row in cells]
    out += [rule, line(footer)]
    if expected_total is not None:
        out.append(f"expected total cost: {expected_total:.2f}")
    return "\n".join(out) + "\n"


def _exist_suffix(d):
    return f" - {d.size} exist" if d.size > 0 else ""


def invest_rows(state, action, config):
    d = state[action.key]
    x, y = action.key
    costs = config.cost_model
    req = required_size(d, config.min_size)
    ordered = round_half_up(req / costs.human_accuracy)
    cost = action_cost(state, action, SAT, config)
    task = f"{config.task_class(action.key)}({x}, {y}){_exist_suffix(d)}"
    return [ReportRow(task, accuracy=costs.human_accuracy, ordered=ordered, paid=req + ordered,
                      cost=round_half_up(cost))]


def _branch_precision(geo, branch):
    """Expected precision given the branch taken; the prior mean when no branch is known."""
    if branch is None or not 0.0 < geo.k < 1.0:
        return beta.mean(geo.prior)
    try:
        if branch == SAT:
            return beta.upper_truncated_mean(geo.k, geo.prior)
        return beta.lower_truncated_mean(geo.k, geo.prior)
    except beta.DegenerateTruncationError:
        return beta.mean(geo.prior)


def pivot_rows(state, action, config, branch=None):
    x, y = action.key
    z = action.pivot
    geo = pivot_geometry(state, action, config)
    precision = _branch_precision(geo, branch)
    induced = round_half_up(precision * geo.candidates)
    evaluated = induced if config.cost_model.pivot_charge == "induced" else geo.candidates
    cost = action_cost(state, action, SAT, config)
    return [
        ReportRow(f"P({x}, {z}, {y}){_exist_suffix(state[action.key])}", induced=induced,
                  precision=round(precision, 4), cost=0),
        ReportRow(f"T4({x}, {z}, {y})", accuracy=1.0, paid=evaluated, cost=round_half_up(cost)),
    ]


def action_rows(state, action, config, branch=None):
    if action.is_pivot:
        return pivot_rows(state, action, config, branch)
    return invest_rows(state, action, config)


def rollout_expected_plan(graph, policy, values=None, title=None):
    """Follow ``policy`` along the most probable branch from the start state.

    Pivot rows on the main path show the precision and induced size expected
    on the branch followed. After each pivot whose other branch has positive
    probability, the policy's next action on that branch is attached as a
    contingency.
    """
    config = graph.config
    report = PlanReport(title or "Estimated cost of actions following the optimal plan")
    if values is not None:
        report.expected_total = values[graph.start]
    sid = graph.start
    while sid in graph.transitions:
        state = graph.states[sid]
        action = policy[sid]
        trans = graph.transition(sid, action)
        main = max(trans.targets, key=lambda t: (t.probability, t.branch == SAT))
        report.rows.extend(action_rows(state, action, config, main.branch))
        for other in trans.targets:
            if other is main or other.state not in graph.transitions:
                continue
            alt = graph.states[other.state]
            report.contingencies.append(Contingency(
                len(report.rows) - 1, other.probability,
                action_rows(alt, policy[other.state], config), other.branch))
        sid = main.state
    return report


def baseline_all_investment(config, state=None):
    """Invest in every unsatisfied dictionary: common-language pairs first."""
    if state is None:
        state = start_state(config)
    report = PlanReport("Estimated cost of actions following the all-investment plan")
    pending = [d for d in state.dicts if d.status is not Status.SATISFIED]
    pending.sort(key=lambda d: config.task_class(d.key) != "CT1")
    for d in pending:
        report.rows.extend(invest_rows(state, PlanAction.invest(d.key), config))
    report.expected_total = float(sum(
        action_cost(state, PlanAction.invest(d.key), SAT, config) for d in pending))
    return report


def solve(graph, method="backward"):
    values = value_iteration(graph, method=method)
    return values, extract_policy(graph, values)
