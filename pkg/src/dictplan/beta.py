"""Beta-distribution kernel for pivot-induction precision.

Everything here is a pure function of its arguments. The regularized
incomplete beta is evaluated with a modified-Lentz continued fraction so the
planner has no hard dependency on scipy at run time.
"""

import math
from dataclasses import dataclass

import numpy as np

# Likelihood parameters are the observed precision rescaled onto [0, LIKELIHOOD_SCALE].
LIKELIHOOD_SCALE = 10.0

PRIOR_PARAM_MIN = 2.0
PRIOR_PARAM_MAX = 10.0

_CF_MAX_ITER = 10000
_CF_EPS = 1e-15
_TINY = 1e-300


class BetaDomainError(ValueError):
    """Argument outside the support of the requested beta function."""


class DegenerateTruncationError(ArithmeticError):
    """Truncated mean requested over a region of (numerically) zero mass."""


@dataclass(frozen=True)
class BetaParams:
    """Shape pair of a beta distribution."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise BetaDomainError(
                f"beta parameters must be positive, got ({self.alpha}, {self.beta})")
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise BetaDomainError("beta parameters must be finite")

    @property
    def mean(self):
        return mean(self)

    def __add__(self, other):
        if not isinstance(other, BetaParams):
            return NotImplemented
        return BetaParams(self.alpha + other.alpha, self.beta + other.beta)

    def as_tuple(self):
        return (self.alpha, self.beta)


def log_beta_function(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def pdf(x, p):
    """Density at ``x``; the normalizer goes through log-gamma."""
    if not 0.0 < x < 1.0:
        raise BetaDomainError(f"pdf requires 0 < x < 1, got {x}")
    a, b = p.alpha, p.beta
    log_f = (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - log_beta_function(a, b)
    return math.exp(log_f)


def _continued_fraction(x, a, b):
    # Modified Lentz evaluation of the incomplete-beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(x, a, b):
    """I_x(a, b) for 0 <= x <= 1 and a, b > 0."""
    if not 0.0 <= x <= 1.0:
        raise BetaDomainError(f"incomplete beta requires 0 <= x <= 1, got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (a * math.log(x) + b * math.log1p(-x) - log_beta_function(a, b))
    front = math.exp(log_front)
    # The fraction converges fast only below the mode-ish switch point.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _continued_fraction(x, a, b) / a
    return 1.0 - front * _continued_fraction(1.0 - x, b, a) / b


def cdf(k, p):
    if not 0.0 <= k <= 1.0:
        raise BetaDomainError(f"cdf requires 0 <= k <= 1, got {k}")
    return regularized_incomplete_beta(k, p.alpha, p.beta)


def survival(k, p):
    if not 0.0 <= k <= 1.0:
        raise BetaDomainError(f"survival requires 0 <= k <= 1, got {k}")
    return 1.0 - cdf(k, p)


def mean(p):
    return p.alpha / (p.alpha + p.beta)


def lower_truncated_mean(k, p):
    """E[X | 0 < X < k]."""
    if not 0.0 < k <= 1.0:
        raise BetaDomainError(f"lower truncated mean requires 0 < k <= 1, got {k}")
    mass = cdf(k, p)
    if mass <= 0.0:
        raise DegenerateTruncationError(f"no probability mass below k={k} for {p}")
    shifted = regularized_incomplete_beta(k, p.alpha + 1.0, p.beta)
    return mean(p) * shifted / mass


def upper_truncated_mean(k, p):
    """E[X | k < X < 1]."""
    if not 0.0 <= k < 1.0:
        raise BetaDomainError(f"upper truncated mean requires 0 <= k < 1, got {k}")
    mass = survival(k, p)
    if mass <= 0.0:
        raise DegenerateTruncationError(f"no probability mass above k={k} for {p}")
    shifted = regularized_incomplete_beta(1.0 - k, p.beta, p.alpha + 1.0)
    return mean(p) * shifted / mass


def prior_from_similarity(similarity, polysemy):
    """Prior for induction precision: similarity drives alpha, polysemy is beta."""
    if not 0.0 <= similarity <= 1.0:
        raise BetaDomainError(f"similarity must lie in [0, 1], got {similarity}")
    if not PRIOR_PARAM_MIN <= polysemy <= PRIOR_PARAM_MAX:
        raise BetaDomainError(
            f"polysemy must lie in [{PRIOR_PARAM_MIN}, {PRIOR_PARAM_MAX}], got {polysemy}")
    alpha = PRIOR_PARAM_MIN + (PRIOR_PARAM_MAX - PRIOR_PARAM_MIN) * similarity
    return BetaParams(alpha, float(polysemy))


def likelihood_from_precision(observed, scale=LIKELIHOOD_SCALE):
    """Pseudo-count likelihood for one observed precision.

    Observations of exactly 0 or 1 yield a zero count on one side, which is
    returned as :class:`PseudoCounts` since it is only usable as an update.
    """
    if not 0.0 <= observed <= 1.0:
        raise BetaDomainError(f"observed precision must lie in [0, 1], got {observed}")
    return _pseudo_counts(scale * observed, scale - scale * observed)


def _pseudo_counts(alpha, beta):
    # Additive updates may carry a zero count; BetaParams itself requires > 0.
    if alpha > 0 and beta > 0:
        return BetaParams(alpha, beta)
    return PseudoCounts(alpha, beta)


@dataclass(frozen=True)
class PseudoCounts:
    """Non-negative additive counts; may not be a proper distribution on its own."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise BetaDomainError("pseudo-counts must be non-negative")

    def as_tuple(self):
        return (self.alpha, self.beta)


def posterior(prior, likelihood):
    """Conjugate update by parameter-wise addition."""
    return BetaParams(prior.alpha + likelihood.alpha, prior.beta + likelihood.beta)


def combine_posteriors(params):
    params = list(params)
    if not params:
        raise ValueError("combine_posteriors needs at least one distribution")
    return BetaParams(sum(p.alpha for p in params), sum(p.beta for p in params))


def sample(p, rng, size=None):
    """Draw from Beta(alpha, beta).

    ``rng`` is a ``numpy.random.Generator`` or an integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    draw = rng.beta(p.alpha, p.beta, size=size)
    if size is None:
        return float(draw)
    return draw
