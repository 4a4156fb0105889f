"""Coverage probabilities: the mass of species seen exactly ``r`` times.

``r = 0`` is the missing mass.  Under a Pitman-Yor prior the posterior of each
coverage is a Beta law, so point estimates and intervals are closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaincinv, gammaln

from .combinatorics import log_rising_factorial
from .data import SampleSummary
from .pyp import PypParams

__all__ = [
    "BetaPosterior",
    "good_turing",
    "posterior",
    "estimate",
    "credible_interval",
    "smoothed_count",
    "smoothed_mass_partial",
    "smoothed_gap",
]


@dataclass(frozen=True)
class BetaPosterior:
    """Beta(shape1, shape2) law.

    ``shape1 == 0`` encodes the point mass at zero that arises for an order
    ``r >= 1`` with no observed species; ``degenerate`` is then True.
    """

    shape1: float
    shape2: float

    def __post_init__(self):
        if not (self.shape1 >= 0 and self.shape2 > 0):
            raise ValueError(f"invalid Beta shapes ({self.shape1}, {self.shape2})")

    @property
    def degenerate(self) -> bool:
        return self.shape1 == 0.0

    @property
    def mean(self) -> float:
        return self.shape1 / (self.shape1 + self.shape2)

    @property
    def var(self) -> float:
        a, b = self.shape1, self.shape2
        return a * b / ((a + b) ** 2 * (a + b + 1))

    def ppf(self, q):
        if self.degenerate:
            return np.zeros_like(np.asarray(q, dtype=float))
        return betaincinv(self.shape1, self.shape2, q)


def good_turing(summary: SampleSummary, r: int) -> float:
    """``(r + 1) m_{r+1} / n``; zero whenever ``m_{r+1} = 0``."""
    r = int(r)
    if r < 0:
        raise ValueError("r must be nonnegative")
    return (r + 1) * summary.m(r + 1) / summary.n


def posterior(params: PypParams, summary: SampleSummary, r: int) -> BetaPosterior:
    """Posterior law of the order-``r`` coverage given the sample.

    ``r = 0``: Beta(theta + k alpha, n - k alpha).
    ``r >= 1``: Beta((r - alpha) m_r, theta + n - (r - alpha) m_r), a point
    mass at zero when ``m_r = 0``.
    """
    r = int(r)
    if r < 0:
        raise ValueError("r must be nonnegative")
    a, t = params.alpha, params.theta
    n, k = summary.n, summary.k
    if r == 0:
        s1 = t + k * a
        return BetaPosterior(s1, (t + n) - s1)
    s1 = (r - a) * summary.m(r)
    return BetaPosterior(s1, (t + n) - s1)


def estimate(params: PypParams, summary: SampleSummary, r: int) -> float:
    """Posterior mean of the order-``r`` coverage."""
    a, t = params.alpha, params.theta
    if int(r) == 0:
        return (t + summary.k * a) / (t + summary.n)
    return (int(r) - a) * summary.m(r) / (t + summary.n)


def credible_interval(post: BetaPosterior, level: float = 0.95) -> tuple[float, float]:
    """Equal-tailed credible interval."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if post.degenerate:
        return 0.0, 0.0
    tail = 0.5 * (1.0 - level)
    lo, hi = post.ppf([tail, 1.0 - tail])
    return float(lo), float(hi)


def smoothed_count(params: PypParams, k: int, r: int) -> float:
    """Smoothed frequency count ``m'_{r+1} = alpha (1 - alpha)_(r) k / (r + 1)!``."""
    a = params.alpha
    if a == 0.0:
        raise ValueError("smoothed counts are degenerate for alpha = 0")
    r = int(r)
    if r < 0:
        raise ValueError("r must be nonnegative")
    return float(k * math.exp(math.log(a) + log_rising_factorial(1.0 - a, r) - math.lgamma(r + 2)))


def smoothed_mass_partial(alpha: float, r_max: int) -> float:
    """``sum_{r=0}^{r_max} alpha (1-alpha)_(r) / (r+1)!`` in closed form.

    The series telescopes to ``1 - Gamma(r_max + 2 - alpha) /
    (Gamma(1 - alpha) Gamma(r_max + 2))``, which tends to one only like
    ``r_max^-alpha``.
    """
    tail = gammaln(r_max + 2 - alpha) - gammaln(1 - alpha) - gammaln(r_max + 2)
    return float(-np.expm1(tail))


def smoothed_gap(params: PypParams, summary: SampleSummary, r: int) -> dict:
    """Compare ``(r+1) m'_{r+1} / n`` with the posterior mean of the coverage.

    The two agree asymptotically; the relative gap is a diagnostic of how far
    the sample is from that regime.
    """
    sgt = (int(r) + 1) * smoothed_count(params, summary.k, r) / summary.n
    bnp = estimate(params, summary, r)
    return {
        "smoothed": sgt,
        "bnp": bnp,
        "relative_gap": abs(sgt - bnp) / bnp if bnp > 0 else math.inf,
    }
