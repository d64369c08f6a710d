"""Fold observed pivot precisions back into the priors.

Run: python demos/04_posterior_update.py
"""
from pathlib import Path

from dictplan import update_posteriors
from dictplan.lexicon import prior_for_pivot
from dictplan.scenarios import first_batch
from dictplan.sim import read_observations

here = Path(__file__).resolve().parent
observations = read_observations(here / "data" / "first_batch_observed.csv")

config = first_batch()
priors = {o.triple: prior_for_pivot(config, *o.triple) for o in observations}
posts, combined = update_posteriors(priors, observations)

print(f"{'triple':<14}{'observed':>9}{'prior mean':>12}{'posterior mean':>16}")
for o in observations:
    print(f"{'-'.join(o.triple):<14}{o.precision:>9.3f}{priors[o.triple].mean:>12.3f}"
          f"{posts[o.triple].mean:>16.3f}")
print(f"\nbatch summary: Beta({combined.alpha:.3f}, {combined.beta:.3f}), mean {combined.mean:.3f}")
