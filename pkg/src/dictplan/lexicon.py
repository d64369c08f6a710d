"""Languages, dictionary inventory and the size arithmetic behind pivot induction."""

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import NamedTuple

from .beta import BetaParams, PRIOR_PARAM_MIN, PRIOR_PARAM_MAX, prior_from_similarity


class ScenarioError(ValueError):
    """Invalid scenario input (languages, sizes, similarities, costs)."""


def round_half_up(x):
    return int(math.floor(x + 0.5))


class Status(enum.Enum):
    NOT_EXISTING = "n"
    EXISTING_UNSAT = "eu"
    PIVOT_UNSAT = "pu"
    SATISFIED = "s"

    # Members are singletons; identity hashing keeps state lookups cheap.
    __hash__ = object.__hash__


UNSATISFIED = (Status.NOT_EXISTING, Status.EXISTING_UNSAT, Status.PIVOT_UNSAT)
# Statuses a dictionary may have to serve as pivot input.
PIVOT_INPUT = frozenset((Status.SATISFIED, Status.EXISTING_UNSAT, Status.PIVOT_UNSAT))


class DictState(NamedTuple):
    key: tuple
    status: Status
    size: int = 0
    pivot: str = None

    @property
    def satisfied(self):
        return self.status is Status.SATISFIED

    @property
    def tag(self):
        if self.status is Status.PIVOT_UNSAT:
            return f"pu({self.pivot})"
        return self.status.value

    def __str__(self):
        x, y = self.key
        return f"d({x},{y}):{self.tag}[{self.size}]"


def pair_key(x, y, languages):
    """Canonical unordered key: the language listed first in ``languages`` leads."""
    if x == y:
        raise ScenarioError(f"a dictionary needs two distinct languages, got {x!r} twice")
    order = {lang: i for i, lang in enumerate(languages)}
    try:
        return (x, y) if order[x] < order[y] else (y, x)
    except KeyError as exc:
        raise ScenarioError(f"unknown language {exc.args[0]!r}") from None


def generate_dictionary_list(languages):
    languages = list(languages)
    if len(set(languages)) != len(languages):
        raise ScenarioError(f"duplicate language in {languages}")
    if any(not lang for lang in languages):
        raise ScenarioError("language codes must be non-empty")
    if len(languages) < 3:
        raise ScenarioError("pivot induction needs at least three languages")
    return [DictState((x, y), Status.NOT_EXISTING, 0) for x, y in combinations(languages, 2)]


def status_for_size(size, min_size):
    if size >= min_size:
        return Status.SATISFIED
    if size > 0:
        return Status.EXISTING_UNSAT
    return Status.NOT_EXISTING


def apply_existing(dicts, existing, min_size):
    """Map known dictionary sizes onto statuses.

    ``existing`` is keyed by unordered pair; either orientation is accepted.
    Entries already tagged by a pivot attempt are left alone.
    """
    sizes = {frozenset(k): int(v) for k, v in existing.items()}
    out = []
    for d in dicts:
        if d.status is Status.PIVOT_UNSAT:
            out.append(d)
            continue
        size = sizes.get(frozenset(d.key), d.size)
        out.append(DictState(d.key, status_for_size(size, min_size), size))
    return out


def candidate_size(size_xz, size_zy):
    return 2 * min(size_xz, size_zy)


def induced_size(precision, candidates):
    return round_half_up(precision * candidates)


def required_size(current, min_size):
    if current.status is Status.NOT_EXISTING:
        return min_size
    return max(0, min_size - current.size)


def min_precision_k(required, candidates):
    """Smallest precision that lets the pivot output reach ``required`` pairs.

    Clamped to [0, 1]; a value of 1 means the pivot cannot satisfy the
    dictionary, or can only with a perfect induction.
    """
    if candidates <= 0:
        raise ZeroDivisionError("minimum precision undefined for zero candidates")
    return min(1.0, max(0.0, required / candidates))


class SimilarityMatrix:
    """Symmetric language-similarity table with values in [0, 1]."""

    def __init__(self, values):
        self._values = {}
        for pair, value in values.items():
            x, y = tuple(pair)
            value = float(value)
            if not 0.0 <= value <= 1.0:
                raise ScenarioError(f"similarity {x}-{y} = {value} is outside [0, 1]")
            previous = self._values.get(frozenset((x, y)))
            if previous is not None and not math.isclose(previous, value):
                raise ScenarioError(f"asymmetric similarity for {x}-{y}")
            self._values[frozenset((x, y))] = value

    @classmethod
    def from_pairs(cls, pairs):
        """Build from ``{(x, y): value}``; values above 1 are read as percents."""
        return cls({frozenset(k): _as_fraction(v) for k, v in pairs.items()})

    def __call__(self, x, y):
        try:
            return self._values[frozenset((x, y))]
        except KeyError:
            raise ScenarioError(f"no similarity for {x}-{y}") from None

    def __contains__(self, pair):
        return frozenset(pair) in self._values

    def pairs(self):
        return {tuple(sorted(k)): v for k, v in self._values.items()}

    def restrict(self, languages):
        return SimilarityMatrix({frozenset(p): self(*p) for p in combinations(languages, 2)})


def _as_fraction(value):
    value = float(str(value).strip().rstrip("%"))
    return value / 100.0 if value > 1.0 else value


def read_similarity_table(source):
    """Parse a delimited similarity table.

    Row and column headers are language codes; the first header cell is
    ignored. Either triangle (or both) may be filled; blank cells are
    skipped. Cells may be fractions or percents (``61.66`` or ``61.66%``).
    ``source`` is a path or an open text stream.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="") as fh:
            text = fh.read()
    else:
        text = source.read()
    if not text.strip():
        raise ScenarioError("empty similarity table")
    try:
        dialect = csv.Sniffer().sniff(text.splitlines()[0], delimiters=",;\t|")
    except csv.Error:
        dialect = csv.excel
    rows = [r for r in csv.reader(io.StringIO(text), dialect) if any(c.strip() for c in r)]
    if not rows:
        raise ScenarioError("empty similarity table")
    header = [c.strip() for c in rows[0][1:]]
    pairs = {}
    for lineno, row in enumerate(rows[1:], start=2):
        lang = row[0].strip()
        for col, cell in zip(header, row[1:]):
            cell = cell.strip()
            if not cell or col == lang:
                continue
            try:
                value = _as_fraction(cell)
            except ValueError:
                raise ScenarioError(f"line {lineno}: bad similarity cell {cell!r}") from None
            key = frozenset((lang, col))
            if key in pairs and not math.isclose(pairs[key], value):
                raise ScenarioError(f"line {lineno}: asymmetric similarity for {lang}-{col}")
            pairs[key] = value
    return SimilarityMatrix(pairs)


@dataclass(frozen=True)
class CostModel:
    """Unit-time prices per translation pair for each human task class.

    Task classes: ``CT1`` (common-ethnic creation and evaluation), ``CT2``
    (ethnic-ethnic creation and evaluation), ``T4`` (evaluation of pivot
    output). ``invest_formula`` is ``"itemized"`` (creation paid per correct
    pair, evaluation per ordered pair) or ``"ordered"`` (ordered pairs
    times the summed unit costs). ``pivot_charge`` is ``"induced"`` (evaluate
    the expected induced set) or ``"candidates"`` (evaluate every candidate).
    """

    creation_cost: dict = field(default_factory=lambda: {"CT1": 3.0, "CT2": 3.0})
    evaluation_cost: dict = field(default_factory=lambda: {"CT1": 1.0, "CT2": 8.0, "T4": 4.0})
    human_accuracy: float = 0.8
    invest_formula: str = "itemized"
    pivot_charge: str = "induced"

    def __post_init__(self):
        for table in (self.creation_cost, self.evaluation_cost):
            for name, value in table.items():
                if value < 0:
                    raise ScenarioError(f"negative unit cost for {name}")
        if not 0.0 < self.human_accuracy <= 1.0:
            raise ScenarioError(f"human accuracy must lie in (0, 1], got {self.human_accuracy}")
        if self.invest_formula not in ("itemized", "ordered"):
            raise ScenarioError(f"unknown invest formula {self.invest_formula!r}")
        if self.pivot_charge not in ("induced", "candidates"):
            raise ScenarioError(f"unknown pivot charge {self.pivot_charge!r}")

    def creation(self, task):
        try:
            return self.creation_cost[task]
        except KeyError:
            raise ScenarioError(f"no creation cost for task class {task!r}") from None

    def evaluation(self, task):
        try:
            return self.evaluation_cost[task]
        except KeyError:
            raise ScenarioError(f"no evaluation cost for task class {task!r}") from None


INDONESIA_2019_COSTS = CostModel()

ALPHA_BASES = ("output-pair", "triple-average")


@dataclass(frozen=True)
class ScenarioConfig:
    languages: tuple
    similarity: SimilarityMatrix
    existing: dict = field(default_factory=dict)
    min_size: int = 2000
    default_polysemy: float = 3.0
    cost_model: CostModel = INDONESIA_2019_COSTS
    alpha_basis: str = "output-pair"
    # Added to every similarity-derived prior (e.g. a combined posterior).
    prior_offset: BetaParams = None
    # Replace the prior outright for a given (x, z, y) triple.
    prior_overrides: dict = field(default_factory=dict)
    common_language: str = None
    merge_pivot_tags: bool = False
    # Pivot-satisfied dictionaries count as exactly min_size downstream.
    cap_satisfied_size: bool = True
    # Estimated pivot-unsat sizes snap to this grid (0 keeps exact estimates).
    size_quantum: int = 0
    max_states: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "languages", tuple(self.languages))
        generate_dictionary_list(self.languages)
        if self.common_language is None:
            object.__setattr__(self, "common_language", self.languages[0])
        elif self.common_language not in self.languages:
            raise ScenarioError(f"common language {self.common_language!r} not in scenario")
        if int(self.min_size) != self.min_size or self.min_size <= 0:
            raise ScenarioError(f"min_size must be a positive integer, got {self.min_size}")
        if not PRIOR_PARAM_MIN <= self.default_polysemy <= PRIOR_PARAM_MAX:
            raise ScenarioError(f"default polysemy must lie in [2, 10], got {self.default_polysemy}")
        if int(self.size_quantum) != self.size_quantum or self.size_quantum < 0:
            raise ScenarioError("size_quantum must be a non-negative integer")
        if self.alpha_basis not in ALPHA_BASES:
            raise ScenarioError(f"alpha_basis must be one of {ALPHA_BASES}")
        for x, y in combinations(self.languages, 2):
            if (x, y) not in self.similarity:
                raise ScenarioError(f"similarity matrix lacks pair {x}-{y}")
        existing = {}
        for k, size in self.existing.items():
            x, y = tuple(k)
            if int(size) != size or size < 0:
                raise ScenarioError(f"existing size for {x}-{y} must be a non-negative integer")
            existing[pair_key(x, y, self.languages)] = int(size)
        object.__setattr__(self, "existing", existing)
        overrides = {}
        for triple, params in self.prior_overrides.items():
            x, z, y = triple
            a, b = pair_key(x, y, self.languages)
            if z in (a, b) or z not in self.languages:
                raise ScenarioError(f"bad pivot triple {triple}")
            overrides[(a, z, b)] = params
        object.__setattr__(self, "prior_overrides", overrides)
        keys = {}
        for x, y in combinations(self.languages, 2):
            keys[(x, y)] = keys[(y, x)] = (x, y)
        object.__setattr__(self, "_keys", keys)

    def key(self, x, y):
        try:
            return self._keys[(x, y)]
        except KeyError:
            return pair_key(x, y, self.languages)

    def dictionary_list(self):
        return apply_existing(generate_dictionary_list(self.languages), self.existing, self.min_size)

    def task_class(self, key):
        return "CT1" if self.common_language in key else "CT2"

    def with_existing(self, existing):
        return replace(self, existing=dict(existing))


def prior_for_pivot(config, x, z, y, polysemy=None):
    """Prior precision distribution for inducing d(x, y) through pivot ``z``.

    ``polysemy`` replaces the scenario default (used by simulated actors
    whose realized topology differs from the planning assumption).
    """
    a, b = config.key(x, y)
    override = config.prior_overrides.get((a, z, b))
    if override is not None:
        return override
    sim = config.similarity
    if config.alpha_basis == "output-pair":
        basis = sim(x, y)
    else:
        basis = (sim(x, z) + sim(z, y) + sim(x, y)) / 3.0
    if polysemy is None:
        polysemy = config.default_polysemy
    prior = prior_from_similarity(basis, polysemy)
    if config.prior_offset is not None:
        prior = prior + config.prior_offset
    return prior
