"""Built-in scenario data: the Indonesian language-sphere case study.

Similarities are ASJP-derived percentages for seven languages; the two
batches reuse them with different dictionary inventories and prior rules.
"""

from itertools import combinations

from .beta import BetaParams
from .lexicon import INDONESIA_2019_COSTS, ScenarioConfig, SimilarityMatrix

INDONESIA_SIMILARITY_PERCENT = {
    ("ind", "jav"): 24.09, ("ind", "sun"): 39.43, ("jav", "sun"): 21.82,
    ("ind", "zlm"): 85.10, ("jav", "zlm"): 21.36, ("sun", "zlm"): 41.12,
    ("ind", "plm"): 68.24, ("jav", "plm"): 31.85, ("sun", "plm"): 38.90,
    ("zlm", "plm"): 73.23,
    ("ind", "min"): 61.59, ("jav", "min"): 25.01, ("sun", "min"): 30.81,
    ("zlm", "min"): 61.66, ("plm", "min"): 63.60,
    ("ind", "bjn"): 71.57, ("jav", "bjn"): 32.50, ("sun", "bjn"): 38.72,
    ("zlm", "bjn"): 70.93, ("plm", "bjn"): 63.53, ("min", "bjn"): 60.39,
}

INDONESIA_SIMILARITY = SimilarityMatrix.from_pairs(INDONESIA_SIMILARITY_PERCENT)

FIRST_BATCH_LANGUAGES = ("ind", "zlm", "min", "jav", "sun")
FIRST_BATCH_EXISTING = {("ind", "zlm"): 711, ("ind", "min"): 2590, ("zlm", "min"): 1246}

SECOND_BATCH_LANGUAGES = ("ind", "zlm", "min", "plm", "bjn", "jav", "sun")

MIN_SIZE = 2000

# Graph-size controls for the built-in presets: pivot tags merged and
# pivot-unsat sizes on a 200-pair grid keep the five-language graph near
# 10^5 states.
PRESET_PLANNER = {"merge_pivot_tags": True, "size_quantum": 200}

# Observed induction precision per pivot triple (x, z, y).
FIRST_BATCH_OBSERVED = {
    ("zlm", "ind", "min"): 0.885,
    ("zlm", "ind", "jav"): 0.801,
    ("zlm", "ind", "sun"): 0.833,
    ("min", "zlm", "jav"): 0.739,
    ("min", "ind", "sun"): 0.802,
    ("jav", "ind", "sun"): 0.824,
}

SECOND_BATCH_OBSERVED = {
    ("plm", "ind", "zlm"): 0.976,
    ("bjn", "ind", "plm"): 0.996,
    ("bjn", "ind", "min"): 0.969,
    ("bjn", "ind", "zlm"): 0.918,
    ("plm", "bjn", "min"): 0.911,
    ("bjn", "zlm", "sun"): 0.969,
    ("plm", "ind", "sun"): 0.858,
    ("bjn", "ind", "jav"): 0.893,
    ("plm", "bjn", "jav"): 0.967,
}

# Sum of the six first-batch posteriors.
FIRST_BATCH_COMBINED_POSTERIOR = BetaParams(76.984, 29.16)


def first_batch(**overrides):
    """Five languages, three existing dictionaries, output-pair priors."""
    kwargs = dict(
        languages=FIRST_BATCH_LANGUAGES,
        similarity=INDONESIA_SIMILARITY.restrict(FIRST_BATCH_LANGUAGES),
        existing=FIRST_BATCH_EXISTING,
        min_size=MIN_SIZE,
        default_polysemy=3.0,
        cost_model=INDONESIA_2019_COSTS,
        alpha_basis="output-pair",
        **PRESET_PLANNER,
    )
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)


def second_batch(first_batch_sizes=None, **overrides):
    """Seven languages; every first-batch dictionary is already satisfied.

    Priors average the similarity of the three languages in a pivot triple
    and are shifted by the combined first-batch posterior.
    """
    if first_batch_sizes is None:
        first_batch_sizes = {p: MIN_SIZE for p in combinations(FIRST_BATCH_LANGUAGES, 2)}
    kwargs = dict(
        languages=SECOND_BATCH_LANGUAGES,
        similarity=INDONESIA_SIMILARITY,
        existing=first_batch_sizes,
        min_size=MIN_SIZE,
        default_polysemy=3.0,
        cost_model=INDONESIA_2019_COSTS,
        alpha_basis="triple-average",
        prior_offset=FIRST_BATCH_COMBINED_POSTERIOR,
        **PRESET_PLANNER,
    )
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)
