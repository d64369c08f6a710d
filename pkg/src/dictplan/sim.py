"""Simulated plan execution, posterior updating and re-planning.

Human work and pivot induction are replaced by sampled actors: every
investment draws a human accuracy, every pivot draws a true induction
precision. Realized sizes are tracked separately from the planner's
estimates, and the branch taken is decided by the realized size alone.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import beta
from .lexicon import (
    DictState,
    ScenarioError,
    Status,
    candidate_size,
    prior_for_pivot,
    required_size,
    round_half_up,
)
from .mdp import SAT, UNSAT, PlanState, build_graph, invest_cost, start_state
from .solver import ReportRow, render_table, solve


class PolicyGapError(LookupError):
    """Execution reached a state (or branch) the policy does not cover."""


def _check_unit(value, what, allow_zero=True):
    lo_ok = value >= 0.0 if allow_zero else value > 0.0
    if not (lo_ok and value <= 1.0):
        raise ScenarioError(f"{what} must lie in {'[0' if allow_zero else '(0'}, 1], got {value}")


@dataclass(frozen=True)
class ActorModel:
    """How the simulated world really behaves.

    ``precision`` maps pivot triples ``(x, z, y)`` to a :class:`BetaParams`
    or a fixed float. Triples without an entry use ``default_precision``
    when set, otherwise the scenario prior rebuilt at a sampled topology
    polysemy. ``polysemy`` is ``None`` (the scenario default), a fixed
    float, or a ``(low, high)`` uniform range inside [2, 10]. ``accuracy``
    is a fixed float or a :class:`BetaParams`.
    """

    precision: dict = field(default_factory=dict)
    default_precision: object = None
    polysemy: object = None
    accuracy: object = 0.8

    def __post_init__(self):
        for triple, dist in self.precision.items():
            if len(triple) != 3:
                raise ScenarioError(f"precision key must be a (x, z, y) triple, got {triple}")
            if not isinstance(dist, beta.BetaParams):
                _check_unit(float(dist), f"precision for {triple}")
        if self.default_precision is not None and not isinstance(self.default_precision, beta.BetaParams):
            _check_unit(float(self.default_precision), "default precision")
        if not isinstance(self.accuracy, beta.BetaParams):
            _check_unit(float(self.accuracy), "accuracy", allow_zero=False)
        if self.polysemy is not None:
            bounds = self.polysemy if isinstance(self.polysemy, (tuple, list)) else (self.polysemy,)
            for v in bounds:
                if not beta.PRIOR_PARAM_MIN <= v <= beta.PRIOR_PARAM_MAX:
                    raise ScenarioError(f"polysemy must lie in [2, 10], got {self.polysemy}")

    def _precision_dist(self, x, z, y):
        dist = self.precision.get((x, z, y))
        if dist is None:
            dist = self.precision.get((y, z, x))
        if dist is None:
            dist = self.default_precision
        return dist

    def draw_polysemy(self, config, rng):
        if self.polysemy is None:
            return float(config.default_polysemy)
        if isinstance(self.polysemy, (tuple, list)):
            lo, hi = self.polysemy
            return float(rng.uniform(lo, hi))
        return float(self.polysemy)

    def draw_precision(self, config, x, z, y, rng):
        """True precision of one pivot run, plus the polysemy behind it (or None)."""
        dist = self._precision_dist(x, z, y)
        poly = None
        if dist is None:
            poly = self.draw_polysemy(config, rng)
            dist = prior_for_pivot(config, x, z, y, polysemy=poly)
        if isinstance(dist, beta.BetaParams):
            return beta.sample(dist, rng), poly
        return float(dist), poly

    def draw_accuracy(self, rng):
        if isinstance(self.accuracy, beta.BetaParams):
            # Zero accuracy would mean infinite ordering; keep it strictly positive.
            return max(beta.sample(self.accuracy, rng), 1e-6)
        return float(self.accuracy)

    @classmethod
    def matching(cls, config):
        """Actors whose distributions are exactly the planner's beliefs."""
        return cls(accuracy=config.cost_model.human_accuracy)


@dataclass(frozen=True)
class TraceRecord:
    state: int
    action: object
    branch: str
    cost: float
    size: int
    produced: int
    candidates: int = None
    precision: float = None
    accuracy: float = None
    polysemy: float = None
    existing: int = 0

    def to_dict(self):
        return {
            "state": self.state, "action": self.action.to_dict(), "branch": self.branch,
            "cost": self.cost, "size": self.size, "produced": self.produced,
            "candidates": self.candidates, "precision": self.precision,
            "accuracy": self.accuracy, "polysemy": self.polysemy, "existing": self.existing,
        }


@dataclass
class ExecutionTrace:
    records: list = field(default_factory=list)
    mode: str = "static"
    final: PlanState = None

    @property
    def total(self):
        return math.fsum(r.cost for r in self.records)

    @property
    def actions(self):
        return [r.action for r in self.records]

    def to_dict(self):
        return {
            "schema": "dictplan.trace/1",
            "mode": self.mode,
            "records": [r.to_dict() for r in self.records],
            "total": self.total,
        }

    def rows(self, config):
        costs = config.cost_model
        out = []
        for r in self.records:
            x, y = r.action.key
            exist = f" - {r.existing} exist" if r.existing else ""
            if r.action.is_pivot:
                z = r.action.pivot
                evaluated = r.produced if costs.pivot_charge == "induced" else r.candidates
                out.append(ReportRow(f"P({x}, {z}, {y}){exist}", induced=r.produced,
                                     precision=round(r.precision, 4), polysemy=r.polysemy, cost=0))
                out.append(ReportRow(f"T4({x}, {z}, {y})", accuracy=1.0, paid=evaluated,
                                     cost=round_half_up(r.cost)))
            else:
                ordered = round_half_up(r.produced / r.accuracy)
                out.append(ReportRow(f"{config.task_class(r.action.key)}({x}, {y}){exist}",
                                     accuracy=round(r.accuracy, 3), ordered=ordered,
                                     paid=r.produced + ordered, cost=round_half_up(r.cost)))
        return out

    def to_text(self, config, title="Simulated cost of actions"):
        rows = self.rows(config)
        return render_table(title, rows, sum(r.cost for r in rows))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def execute_action(real, action, actors, config, rng, sid=None):
    """Carry out ``action`` on the realized state; returns (new state, record)."""
    d = real[action.key]
    costs = config.cost_model
    if not action.is_pivot:
        req = required_size(d, config.min_size)
        acc = actors.draw_accuracy(rng)
        cost = invest_cost(req, config.task_class(action.key), costs, acc)
        new = DictState(d.key, Status.SATISFIED, d.size + req)
        return real.replace(new), TraceRecord(sid, action, SAT, cost, new.size, req,
                                              accuracy=acc, existing=d.size)
    x, y = action.key
    z = action.pivot
    cand = candidate_size(real[config.key(x, z)].size, real[config.key(z, y)].size)
    precision, poly = actors.draw_precision(config, x, z, y, rng)
    induced = round_half_up(precision * cand)
    evaluated = induced if costs.pivot_charge == "induced" else cand
    cost = evaluated * costs.evaluation("T4")
    size = d.size + induced
    if size >= config.min_size:
        new, branch = DictState(d.key, Status.SATISFIED, size), SAT
    else:
        tag = None if config.merge_pivot_tags else z
        new, branch = DictState(d.key, Status.PIVOT_UNSAT, size, tag), UNSAT
    return real.replace(new), TraceRecord(sid, action, branch, cost, size, induced, cand,
                                          precision, polysemy=poly, existing=d.size)


def simulate_execution(graph, policy, actors, config=None, seed=None):
    """Run ``policy`` once against sampled actors, starting at the graph's start.

    The walk follows the graph by branch label; realized sizes feed the
    next action's candidates and shortfalls. Deterministic for a fixed seed.
    """
    config = config or graph.config
    rng = _rng(seed)
    sid = graph.start
    real = graph.states[sid]
    trace = ExecutionTrace(mode="static")
    while sid in graph.transitions:
        action = policy.get(sid)
        if action is None:
            raise PolicyGapError(f"no policy action for state {sid}: {graph.states[sid].describe()}")
        real, record = execute_action(real, action, actors, config, rng, sid)
        trace.records.append(record)
        target = graph.transition(sid, action).target(record.branch)
        if target is None:
            raise PolicyGapError(
                f"{action.label} at state {sid} ended {record.branch}, a branch the planner "
                "considered impossible")
        sid = target.state
    trace.final = real
    return trace


def replan_loop(config, actors, seed=None, max_states=None, start=None):
    """Plan, execute one action, re-plan from the realized state, until done.

    ``start`` resumes from a realized state instead of the scenario's start.
    """
    rng = _rng(seed)
    real = start_state(config) if start is None else start
    trace = ExecutionTrace(mode="replan")
    while not real.terminal:
        graph = build_graph(config, start=real, max_states=max_states)
        _, policy = solve(graph)
        real, record = execute_action(real, policy[graph.start], actors, config, rng, graph.start)
        trace.records.append(record)
    trace.final = real
    return trace


@dataclass
class RunSummary:
    totals: np.ndarray

    @property
    def mean(self):
        return float(np.mean(self.totals))

    @property
    def std(self):
        return float(np.std(self.totals, ddof=1)) if len(self.totals) > 1 else 0.0

    def quantiles(self, qs=(0.05, 0.25, 0.5, 0.75, 0.95)):
        return {f"q{round(q * 100):02d}": float(np.quantile(self.totals, q)) for q in qs}

    def to_dict(self):
        return {"runs": int(len(self.totals)), "mean": self.mean, "std": self.std,
                "min": float(np.min(self.totals)), "max": float(np.max(self.totals)),
                **self.quantiles()}


def run_seeds(seed, runs):
    """Independent child generators, one per run, from a single seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(runs)]


def monte_carlo(config, actors, runs, seed=0, mode="static", graph=None, policy=None,
                keep_traces=False):
    """Realized totals over ``runs`` seeded executions.

    Returns ``(summary, traces)``; ``traces`` is empty unless requested.
    """
    if mode not in ("static", "replan"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "static" and (graph is None or policy is None):
        graph = graph or build_graph(config)
        if policy is None:
            _, policy = solve(graph)
    totals, traces = [], []
    for rng in run_seeds(seed, runs):
        if mode == "static":
            trace = simulate_execution(graph, policy, actors, config, rng)
        else:
            trace = replan_loop(config, actors, rng)
        totals.append(trace.total)
        if keep_traces:
            traces.append(trace)
    return RunSummary(np.asarray(totals)), traces


def compare_modes(config, actors, runs, seed=0):
    """Static policy vs. re-planning on identical seed streams."""
    static, _ = monte_carlo(config, actors, runs, seed, "static")
    replan, _ = monte_carlo(config, actors, runs, seed, "replan")
    diff = RunSummary(replan.totals - static.totals)
    return {"static": static.to_dict(), "replan": replan.to_dict(),
            "replan_minus_static": diff.to_dict()}


@dataclass(frozen=True)
class Observation:
    triple: tuple
    precision: float

    def __post_init__(self):
        if len(self.triple) != 3:
            raise ScenarioError(f"observation needs an (x, z, y) triple, got {self.triple}")
        _check_unit(self.precision, "observed precision")


def update_posteriors(priors, observations):
    """Fold observed precisions into per-triple priors.

    Returns ``(posteriors, combined)``. Triples without observations keep
    their prior; several observations of one triple are applied in turn.
    ``combined`` sums every posterior, or is None when there are none.
    """
    posts = dict(priors)
    for obs in observations:
        key = obs.triple
        if key not in posts and key[::-1] in posts:
            key = key[::-1]
        if key not in posts:
            raise ScenarioError(f"no prior for observed triple {'-'.join(obs.triple)}")
        posts[key] = beta.posterior(posts[key], beta.likelihood_from_precision(obs.precision))
    combined = beta.combine_posteriors(posts.values()) if posts else None
    return posts, combined


def read_observations(source):
    """Parse ``x,z,y,precision`` or ``x-z-y,precision`` rows.

    A header row and ``#`` comment lines are skipped. ``source`` is a path
    or an open text stream.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="") as fh:
            text = fh.read()
    else:
        text = source.read()
    lines = text.splitlines()
    sample = next((ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")), "")
    try:
        dialect = csv.Sniffer().sniff(sample, delimiters=",;\t|")
    except csv.Error:
        dialect = csv.excel
    out = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text), dialect), start=1):
        cells = [c.strip() for c in row]
        if not any(cells) or cells[0].startswith("#"):
            continue
        if len(cells) == 2:
            triple = tuple(cells[0].split("-"))
        elif len(cells) == 4:
            triple = tuple(cells[:3])
        else:
            raise ScenarioError(f"line {lineno}: expected 2 or 4 fields, got {len(cells)}")
        try:
            value = float(cells[-1])
        except ValueError:
            if not out:
                continue  # header
            raise ScenarioError(f"line {lineno}: bad precision {cells[-1]!r}") from None
        if len(triple) != 3 or not all(triple):
            raise ScenarioError(f"line {lineno}: bad triple {cells[0]!r}")
        try:
            out.append(Observation(triple, value))
        except ScenarioError as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from None
    return out
