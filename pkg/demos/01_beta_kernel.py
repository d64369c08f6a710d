"""Walk through the precision model: priors from similarity, success odds, truncated means.

Run: python demos/01_beta_kernel.py
"""
from dictplan import beta
from dictplan.beta import BetaParams

# A pivot whose output languages are 61.66% similar, with polysemy 3.
prior = beta.prior_from_similarity(0.6166, 3)
print(f"prior {prior}  mean precision {beta.mean(prior):.4f}")

# Suppose we need 754 more pairs out of 4000 candidates.
k = 754 / 4000
print(f"minimum precision k = {k:.4f}")
print(f"P(success) = {beta.survival(k, prior):.4f}")
print(f"expected precision if it succeeds: {beta.upper_truncated_mean(k, prior):.4f}")
print(f"expected precision if it fails:    {beta.lower_truncated_mean(k, prior):.4f}")

# Harder target, wider prior.
wide = BetaParams(7.58, 3.5)
for k in (0.5, 0.6, 0.7, 0.8):
    print(f"k={k:.1f}  P(success)={beta.survival(k, wide):.3f}  "
          f"E[p | p>k]={beta.upper_truncated_mean(k, wide):.3f}")

# Draws for a simulator are reproducible from a seed.
print("samples:", beta.sample(prior, 1, size=5).round(3).tolist())
