"""``dictplan`` command-line front end.

A scenario is one YAML document; flags only pick the command, paths,
run counts, seeds and output format. Exit codes: 0 success, 2 bad input,
3 state budget exceeded.
"""

import argparse
import hashlib
import json
import sys

import yaml

from . import beta
from .lexicon import CostModel, ScenarioConfig, ScenarioError, SimilarityMatrix, prior_for_pivot
from .mdp import PlanAction, StateBudgetExceeded, build_graph
from .scenarios import first_batch, second_batch
from .sim import (
    ActorModel,
    PolicyGapError,
    compare_modes,
    monte_carlo,
    read_observations,
    update_posteriors,
)
from .solver import baseline_all_investment, rollout_expected_plan, solve

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BUDGET = 3

COST_PRESETS = {"indonesia-2019": CostModel()}
SCENARIO_PRESETS = {"first-batch": first_batch, "second-batch": second_batch}

_TOP_FIELDS = {"preset", "languages", "common_language", "similarity", "existing", "min_size",
               "polysemy", "costs", "priors", "planner", "actors", "seed"}
_COST_FIELDS = {"preset", "creation", "evaluation", "human_accuracy", "invest_formula",
                "pivot_charge"}
_PRIOR_FIELDS = {"alpha_basis", "offset", "overrides"}
_PLANNER_FIELDS = {"merge_pivot_tags", "cap_satisfied_size", "size_quantum", "max_states"}
_ACTOR_FIELDS = {"accuracy", "polysemy", "default_precision", "precision"}


class DocumentError(ValueError):
    """Input document problem, anchored to a line when one is known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = source or "<input>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")


class _Doc:
    """A parsed YAML value together with the node it came from (for line numbers)."""

    def __init__(self, node, value, source):
        self.node = node
        self.value = value
        self.source = source

    @property
    def line(self):
        return self.node.start_mark.line + 1

    def error(self, message):
        return DocumentError(message, self.line, self.source)

    def get(self, key):
        for knode, vnode in self.node.value:
            if knode.value == key:
                return _Doc(vnode, self.value[key], self.source)
        return None

    def items(self):
        # Constructed dicts keep node order, so the two sequences line up.
        if len(self.node.value) != len(self.value):
            raise self.error("duplicate key in mapping")
        for (knode, vnode), (key, value) in zip(self.node.value, self.value.items()):
            yield _Doc(knode, key, self.source), _Doc(vnode, value, self.source)

    def check_fields(self, allowed, what):
        if not isinstance(self.value, dict):
            raise self.error(f"{what} must be a mapping")
        for knode, _ in self.node.value:
            if knode.value not in allowed:
                raise DocumentError(f"unknown field {knode.value!r} in {what}",
                                    knode.start_mark.line + 1, self.source)


def load_document(text, source=None):
    """Parse YAML text into a :class:`_Doc`; syntax errors carry their line."""
    loader = yaml.SafeLoader(text)
    try:
        node = loader.get_single_node()
        if node is None:
            raise DocumentError("empty document", None, source)
        value = loader.construct_document(node)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise DocumentError(f"YAML syntax error: {exc.problem}", line, source) from None
    finally:
        loader.dispose()
    return _Doc(node, value, source)


def _read_text(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DocumentError(f"cannot read file: {exc.strerror}", None, str(path)) from None


def _pair(text, doc, n=2):
    parts = tuple(str(text).split("-"))
    if len(parts) != n or not all(parts):
        raise doc.error(f"expected {'x-y' if n == 2 else 'x-z-y'} key, got {text!r}")
    return parts


def _beta_value(doc, what, allow_float=True):
    v = doc.value
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise doc.error(f"{what} must be [alpha, beta]")
        try:
            return beta.BetaParams(float(v[0]), float(v[1]))
        except (TypeError, ValueError) as exc:
            raise doc.error(f"{what}: {exc}") from None
    if allow_float and isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    raise doc.error(f"{what} must be {'a number or ' if allow_float else ''}[alpha, beta]")


def _similarity(doc):
    v = doc.value
    pairs = {}
    if isinstance(v, dict):
        for k, val in doc.items():
            if isinstance(val.value, dict):  # nested matrix rows
                for k2, cell in val.items():
                    pairs[(str(k.value), str(k2.value))] = (cell.value, cell)
            else:
                pairs[_pair(k.value, k)] = (val.value, val)
    elif isinstance(v, list):
        for i, item in enumerate(v):
            sub = _Doc(doc.node.value[i], item, doc.source)
            if not (isinstance(item, list) and len(item) == 3):
                raise sub.error("similarity list entries must be [x, y, value]")
            pairs[(str(item[0]), str(item[1]))] = (item[2], sub)
    else:
        raise doc.error("similarity must be a mapping or a list")
    clean = {}
    for key, (value, where) in pairs.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise where.error(f"similarity for {'-'.join(key)} must be a number")
        clean[key] = value
    try:
        return SimilarityMatrix.from_pairs(clean)
    except ScenarioError as exc:
        raise doc.error(str(exc)) from None


def _costs(doc):
    if isinstance(doc.value, str):
        if doc.value not in COST_PRESETS:
            raise doc.error(f"unknown cost preset {doc.value!r}")
        return COST_PRESETS[doc.value]
    doc.check_fields(_COST_FIELDS, "costs")
    base = COST_PRESETS["indonesia-2019"]
    preset = doc.get("preset")
    if preset is not None:
        if preset.value not in COST_PRESETS:
            raise preset.error(f"unknown cost preset {preset.value!r}")
        base = COST_PRESETS[preset.value]
    kwargs = dict(creation_cost=dict(base.creation_cost), evaluation_cost=dict(base.evaluation_cost),
                  human_accuracy=base.human_accuracy, invest_formula=base.invest_formula,
                  pivot_charge=base.pivot_charge)
    for name, field_name in (("creation", "creation_cost"), ("evaluation", "evaluation_cost")):
        sub = doc.get(name)
        if sub is not None:
            if not isinstance(sub.value, dict):
                raise sub.error(f"costs.{name} must map task classes to unit costs")
            kwargs[field_name].update({str(k): float(v) for k, v in sub.value.items()})
    for name in ("human_accuracy", "invest_formula", "pivot_charge"):
        sub = doc.get(name)
        if sub is not None:
            kwargs[name] = sub.value
    try:
        return CostModel(**kwargs)
    except (ScenarioError, TypeError) as exc:
        raise doc.error(str(exc)) from None


def _actors(doc):
    if doc is None:
        return None
    doc.check_fields(_ACTOR_FIELDS, "actors")
    kwargs = {}
    sub = doc.get("accuracy")
    if sub is not None:
        kwargs["accuracy"] = _beta_value(sub, "actors.accuracy")
    sub = doc.get("default_precision")
    if sub is not None:
        kwargs["default_precision"] = _beta_value(sub, "actors.default_precision")
    sub = doc.get("polysemy")
    if sub is not None:
        v = sub.value
        kwargs["polysemy"] = tuple(float(x) for x in v) if isinstance(v, list) else float(v)
    sub = doc.get("precision")
    if sub is not None:
        if not isinstance(sub.value, dict):
            raise sub.error("actors.precision must map x-z-y triples to distributions")
        kwargs["precision"] = {_pair(k.value, k, 3): _beta_value(v, f"precision {k.value}")
                               for k, v in sub.items()}
    try:
        return ActorModel(**kwargs)
    except ScenarioError as exc:
        raise doc.error(str(exc)) from None


class Scenario:
    """A validated scenario document."""

    def __init__(self, config, actors=None, seed=0):
        self.config = config
        self.actors = actors if actors is not None else ActorModel.matching(config)
        self.seed = seed

    @property
    def fingerprint(self):
        blob = json.dumps(describe_scenario(self.config), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def parse_scenario(text, source=None):
    doc = load_document(text, source)
    doc.check_fields(_TOP_FIELDS, "scenario")
    kwargs = {}
    sub = doc.get("languages")
    if sub is not None:
        if not isinstance(sub.value, list):
            raise sub.error("languages must be a list")
        kwargs["languages"] = tuple(str(x) for x in sub.value)
    for name, key in (("common_language", "common_language"), ("min_size", "min_size"),
                      ("polysemy", "default_polysemy")):
        sub = doc.get(name)
        if sub is not None:
            kwargs[key] = sub.value
    sub = doc.get("similarity")
    if sub is not None:
        kwargs["similarity"] = _similarity(sub)
    sub = doc.get("existing")
    if sub is not None:
        if not isinstance(sub.value, dict):
            raise sub.error("existing must map x-y pairs to sizes")
        existing = {}
        for k, v in sub.items():
            if not isinstance(v.value, int) or isinstance(v.value, bool):
                raise v.error(f"existing size for {k.value} must be an integer")
            existing[_pair(k.value, k)] = v.value
        kwargs["existing"] = existing
    sub = doc.get("costs")
    if sub is not None:
        kwargs["cost_model"] = _costs(sub)
    sub = doc.get("priors")
    if sub is not None:
        sub.check_fields(_PRIOR_FIELDS, "priors")
        if sub.get("alpha_basis") is not None:
            kwargs["alpha_basis"] = sub.get("alpha_basis").value
        if sub.get("offset") is not None:
            kwargs["prior_offset"] = _beta_value(sub.get("offset"), "priors.offset", False)
        ov = sub.get("overrides")
        if ov is not None:
            if not isinstance(ov.value, dict):
                raise ov.error("priors.overrides must map x-z-y triples to [alpha, beta]")
            kwargs["prior_overrides"] = {_pair(k.value, k, 3): _beta_value(v, k.value, False)
                                         for k, v in ov.items()}
    sub = doc.get("planner")
    if sub is not None:
        sub.check_fields(_PLANNER_FIELDS, "planner")
        for k, v in sub.items():
            kwargs[k.value] = v.value
    preset = doc.get("preset")
    try:
        if preset is not None:
            if preset.value not in SCENARIO_PRESETS:
                raise preset.error(f"unknown scenario preset {preset.value!r}")
            config = SCENARIO_PRESETS[preset.value](**kwargs)
        else:
            for required in ("languages", "similarity"):
                if required not in kwargs:
                    raise DocumentError(f"missing required field {required!r}", None, source)
            config = ScenarioConfig(**kwargs)
    except (ScenarioError, beta.BetaDomainError, TypeError) as exc:
        raise doc.error(f"invalid scenario: {exc}") from None
    seed = doc.get("seed")
    if seed is not None and (not isinstance(seed.value, int) or isinstance(seed.value, bool)):
        raise seed.error("seed must be an integer")
    return Scenario(config, _actors(doc.get("actors")), seed.value if seed is not None else 0)


def load_scenario(path):
    return parse_scenario(_read_text(path), str(path))


def describe_scenario(config):
    """Plain, canonical description of a scenario (used for fingerprints)."""
    costs = config.cost_model
    return {
        "languages": list(config.languages),
        "common_language": config.common_language,
        "similarity": {"-".join(k): v for k, v in sorted(config.similarity.restrict(config.languages).pairs().items())},
        "existing": {"-".join(k): v for k, v in sorted(config.existing.items())},
        "min_size": config.min_size,
        "polysemy": config.default_polysemy,
        "costs": {"creation": costs.creation_cost, "evaluation": costs.evaluation_cost,
                  "human_accuracy": costs.human_accuracy, "invest_formula": costs.invest_formula,
                  "pivot_charge": costs.pivot_charge},
        "priors": {"alpha_basis": config.alpha_basis,
                   "offset": None if config.prior_offset is None else list(config.prior_offset.as_tuple()),
                   "overrides": {"-".join(k): list(v.as_tuple())
                                 for k, v in sorted(config.prior_overrides.items())}},
        "planner": {"merge_pivot_tags": config.merge_pivot_tags,
                    "cap_satisfied_size": config.cap_satisfied_size,
                    "size_quantum": config.size_quantum},
    }


def _state_code(state):
    return "|".join(f"{d.tag}:{d.size}" for d in state.dicts)


def policy_document(graph, policy, scenario):
    """Policy restricted to the states reachable from the start under it."""
    seen, stack, entries = set(), [graph.start], []
    while stack:
        sid = stack.pop()
        if sid in seen or sid not in graph.transitions:
            continue
        seen.add(sid)
        action = policy[sid]
        entries.append((sid, action))
        stack.extend(t.state for t in graph.transition(sid, action).targets)
    entries.sort()
    return {
        "schema": "dictplan.policy/1",
        "scenario": scenario.fingerprint,
        "dictionaries": ["-".join(d.key) for d in graph.states[graph.start].dicts],
        "states": [{"state": _state_code(graph.states[sid]), "action": a.to_dict()}
                   for sid, a in entries],
    }


def policy_from_document(doc, graph, scenario, source=None):
    if not isinstance(doc, dict) or doc.get("schema") != "dictplan.policy/1":
        raise DocumentError("not a dictplan policy document", None, source)
    if doc.get("scenario") != scenario.fingerprint:
        raise DocumentError("policy fingerprint does not match this scenario", None, source)
    ids = {_state_code(s): i for i, s in enumerate(graph.states)}
    policy = {}
    for entry in doc["states"]:
        sid = ids.get(entry["state"])
        if sid is None:
            raise DocumentError(f"policy state {entry['state']!r} is not in the scenario graph",
                                None, source)
        policy[sid] = PlanAction.from_dict(entry["action"])
    return policy


def _dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text, path=None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_plan(args):
    scenario = load_scenario(args.scenario)
    graph = build_graph(scenario.config)
    values, policy = solve(graph)
    report = rollout_expected_plan(graph, policy, values)
    if args.format == "json":
        doc = report.to_dict()
        doc["states"] = len(graph)
        _emit(_dump_json(doc), args.output)
    else:
        _emit(report.to_text(), args.output)
    if args.policy:
        _emit(_dump_json(policy_document(graph, policy, scenario)), args.policy)
    return EXIT_OK


def cmd_baseline(args):
    scenario = load_scenario(args.scenario)
    report = baseline_all_investment(scenario.config)
    _emit(_dump_json(report.to_dict()) if args.format == "json" else report.to_text(), args.output)
    return EXIT_OK


def _summary_text(title, summary):
    lines = [title]
    for key, value in summary.items():
        lines.append(f"  {key:<10} {value:.2f}" if isinstance(value, float) else f"  {key:<10} {value}")
    return "\n".join(lines) + "\n"


def cmd_simulate(args):
    scenario = load_scenario(args.scenario)
    config = scenario.config
    seed = scenario.seed if args.seed is None else args.seed
    if args.runs < 1:
        raise DocumentError("--runs must be at least 1")
    if args.mode == "compare":
        result = compare_modes(config, scenario.actors, args.runs, seed)
        doc = {"schema": "dictplan.simulation/1", "mode": "compare", "seed": seed, **result}
        if args.format == "json":
            _emit(_dump_json(doc), args.output)
        else:
            _emit("".join(_summary_text(f"{k}:", v) for k, v in result.items()), args.output)
        return EXIT_OK
    graph = policy = values = None
    if args.mode == "static":
        graph = build_graph(config)
        values, policy = solve(graph)
        if args.policy:
            try:
                pdoc = json.loads(_read_text(args.policy))
            except json.JSONDecodeError as exc:
                raise DocumentError(f"invalid JSON: {exc.msg}", exc.lineno, args.policy) from None
            policy = policy_from_document(pdoc, graph, scenario, args.policy)
    summary, traces = monte_carlo(config, scenario.actors, args.runs, seed, args.mode,
                                  graph, policy, keep_traces=bool(args.traces) or args.runs == 1)
    doc = {"schema": "dictplan.simulation/1", "mode": args.mode, "seed": seed,
           "summary": summary.to_dict()}
    if values is not None:
        doc["planned_expected_cost"] = values[graph.start]
    if args.traces:
        _emit(_dump_json({"schema": "dictplan.traces/1", "traces": [t.to_dict() for t in traces]}),
              args.traces)
    if args.format == "json":
        _emit(_dump_json(doc), args.output)
    else:
        text = ""
        if args.runs == 1:
            text += traces[0].to_text(config) + "\n"
        text += _summary_text(f"{args.mode} simulation, {args.runs} run(s), seed {seed}", doc["summary"])
        if values is not None:
            text += f"  planned    {values[graph.start]:.2f}\n"
        _emit(text, args.output)
    return EXIT_OK


def _load_priors(path, triples):
    text = _read_text(path)
    doc = load_document(text, str(path))
    if not isinstance(doc.value, dict):
        raise doc.error("priors must map x-z-y triples to [alpha, beta]")
    if "languages" in doc.value or "preset" in doc.value:
        config = parse_scenario(text, str(path)).config
        return {t: prior_for_pivot(config, *t) for t in triples}
    return {_pair(k.value, k, 3): _beta_value(v, k.value, False) for k, v in doc.items()}


def cmd_posterior(args):
    try:
        observations = read_observations(args.observations)
    except OSError as exc:
        raise DocumentError(f"cannot read file: {exc.strerror}", None, args.observations) from None
    except ScenarioError as exc:
        raise DocumentError(str(exc), None, args.observations) from None
    triples = list(dict.fromkeys(o.triple for o in observations))
    priors = _load_priors(args.priors, triples)
    posts, combined = update_posteriors(priors, observations)
    rows = []
    for triple, prior in priors.items():
        post = posts[triple]
        rows.append({"triple": "-".join(triple), "prior": list(prior.as_tuple()),
                     "prior_mean": beta.mean(prior), "posterior": list(post.as_tuple()),
                     "posterior_mean": beta.mean(post)})
    doc = {"schema": "dictplan.posterior/1", "rows": rows,
           "combined": None if combined is None else list(combined.as_tuple()),
           "observations": [{"triple": "-".join(o.triple), "precision": o.precision}
                            for o in observations]}
    if args.format == "json":
        _emit(_dump_json(doc), args.output)
    else:
        lines = [f"{'Triple':<14}{'prior a':>10}{'prior b':>10}{'E':>8}{'post a':>10}{'post b':>10}{'E':>8}"]
        for r in rows:
            lines.append(f"{r['triple']:<14}{r['prior'][0]:>10.3f}{r['prior'][1]:>10.3f}"
                         f"{r['prior_mean']:>8.3f}{r['posterior'][0]:>10.3f}"
                         f"{r['posterior'][1]:>10.3f}{r['posterior_mean']:>8.3f}")
        if combined is not None:
            lines.append(f"combined: Beta({combined.alpha:.3f}, {combined.beta:.3f}), "
                         f"mean {combined.mean:.3f}")
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_graph(args):
    scenario = load_scenario(args.scenario)
    graph = build_graph(scenario.config)
    if args.format == "dot":
        _emit(graph.to_dot(), args.output)
    else:
        _emit(json.dumps(graph.to_dict(), sort_keys=True) + "\n", args.output)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="dictplan",
                                     description="Plan bilingual dictionary creation under uncertainty.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("text", "json")):
        p.add_argument("--format", choices=formats, default=formats[0])
        p.add_argument("-o", "--output", help="write the main output here instead of stdout")

    p = sub.add_parser("plan", help="optimal plan report (and policy document)")
    p.add_argument("scenario")
    p.add_argument("--policy", help="write the policy document to this path")
    common(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("baseline", help="all-investment cost estimate")
    p.add_argument("scenario")
    common(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("simulate", help="Monte Carlo execution with sampled actors")
    p.add_argument("scenario")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--mode", choices=("static", "replan", "compare"), default="static")
    p.add_argument("--seed", type=int, help="overrides the scenario seed")
    p.add_argument("--policy", help="policy document written by 'plan --policy'")
    p.add_argument("--traces", help="write every run's trace to this path")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("posterior", help="update precision priors from observations")
    p.add_argument("--priors", required=True, help="x-z-y: [alpha, beta] mapping or a scenario")
    p.add_argument("--observations", required=True, help="delimited file of triple, precision")
    common(p)
    p.set_defaults(func=cmd_posterior)

    p = sub.add_parser("graph", help="export the state transition graph")
    p.add_argument("scenario")
    common(p, ("json", "dot"))
    p.set_defaults(func=cmd_graph)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StateBudgetExceeded as exc:
        print(f"dictplan: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (DocumentError, ScenarioError, PolicyGapError, beta.BetaDomainError) as exc:
        print(f"dictplan: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
