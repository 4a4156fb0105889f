"""Coverages of prevalences.

Of the ``m_r`` species seen exactly ``r`` times, how many show up again in
``m`` further draws?  The count only depends on the sample through ``n`` and
``m_r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import gammaln, gammasgn

from . import _mc
from .combinatorics import gen_factorial_row, log_rising_factorial, log_rising_ratio
from .data import SampleSummary
from .errors import NumericalError, SizeGuardError
from .pyp import PypParams, RngStream
from .unseen import DiscretePosterior, SeriesEstimate, _empirical

__all__ = [
    "EXACT_MAX_MR",
    "GenFactorialLaw",
    "GeneralHypergeometricLaw",
    "thisted_efron",
    "estimator",
    "unseen_set_log_prob",
    "posterior_exact",
    "posterior_mc",
    "posterior_binomial_approx",
    "forward_chain_pmf",
    "moments_exact",
]

EXACT_MAX_MR = 64
CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class GenFactorialLaw:
    """Weights ``C(u, x; b, 0) (c)_(x) / (b c)_(u)`` on ``x = 1..u``.

    They always sum to one but need not be nonnegative when ``b > 1``.
    """

    b: float
    c: float
    u: int

    def signed_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """``(signs, logs)`` for ``x = 1..u``."""
        if not (self.b > 0 and self.c > 0 and self.u >= 1):
            raise ValueError(f"invalid parameters {self}")
        s, lg = gen_factorial_row(self.u, self.b, 0.0)
        x = np.arange(self.u + 1)
        lrf = np.concatenate(([0.0], np.cumsum(np.log(self.c + x[:-1]))))
        logs = lg + lrf - log_rising_factorial(self.b * self.c, self.u)
        return s[1:], logs[1:]

    def weights(self) -> np.ndarray:
        s, lg = self.signed_weights()
        return s * np.exp(lg)

    @property
    def is_probability(self) -> bool:
        return bool(np.all(self.signed_weights()[0] >= 0))


@dataclass(frozen=True)
class GeneralHypergeometricLaw:
    """``Pr[H = x] = binom(a, x) binom(v, u - x) / binom(a + v, u)`` on ``x = 0..u``.

    ``a`` is real; binomials use the Gamma function.  Entries can turn
    negative when ``a`` is below ``u``.
    """

    a: float
    u: int
    v: int

    def pmf(self) -> np.ndarray:
        a, u, v = self.a, int(self.u), int(self.v)
        x = np.arange(u + 1)
        out = np.zeros(u + 1)
        ok = (u - x >= 0) & (u - x <= v)
        xs = x[ok]
        num_sign = gammasgn(a + 1) * gammasgn(a - xs + 1)
        lnum = (
            gammaln(a + 1) - gammaln(xs + 1) - gammaln(a - xs + 1)
            + gammaln(v + 1) - gammaln(u - xs + 1) - gammaln(v - u + xs + 1)
        )
        den_sign = gammasgn(a + v + 1) * gammasgn(a + v - u + 1)
        lden = gammaln(a + v + 1) - gammaln(u + 1) - gammaln(a + v - u + 1)
        out[ok] = num_sign * den_sign * np.exp(lnum - lden)
        return out


def thisted_efron(summary: SampleSummary, m: int, r: int) -> SeriesEstimate:
    """``sum_i (-1)^(i+1) lambda^i binom(r + i, i) m_{r+i}`` with ``lambda = m/n``."""
    m, r = int(m), int(r)
    if m < 1 or r < 1:
        raise ValueError("need m >= 1 and r >= 1")
    lam = m / summary.n
    terms = [
        (-1) ** (j - r + 1) * lam ** (j - r) * math.comb(j, r) * mj
        for j, mj in summary.fingerprint.items()
        if j > r
    ]
    return SeriesEstimate(math.fsum(terms), lam)


def _check(summary, m, r):
    m, r = int(m), int(r)
    if m < 1 or r < 1:
        raise ValueError("need m >= 1 and r >= 1")
    return m, r, summary.m(r)


def estimator(params: PypParams, summary: SampleSummary, m: int, r: int) -> float:
    """Posterior mean ``m_r (1 - (theta + n - r + alpha)_(m) / (theta + n)_(m))``."""
    m, r, mr = _check(summary, m, r)
    if mr == 0:
        return 0.0
    t, a, n = params.theta, params.alpha, summary.n
    return float(-mr * math.expm1(log_rising_ratio(t + n, a - r, m)))


def unseen_set_log_prob(params: PypParams, summary: SampleSummary, m: int, r: int, x: int) -> float:
    """Log-probability that ``x`` given species of frequency ``r`` all stay unseen.

    ``q_x = (theta + n - x (r - alpha))_(m) / (theta + n)_(m)``.
    """
    t, a, n = params.theta, params.alpha, summary.n
    return log_rising_ratio(t + n, -x * (r - a), m)


def posterior_exact(params: PypParams, summary: SampleSummary, m: int, r: int) -> DiscretePosterior:
    """Exact posterior of the number of frequency-``r`` species seen again.

    With ``D`` the number that stay unseen,
    ``Pr[D = d] = binom(m_r, d) sum_j (-1)^j binom(m_r - d, j) q_{d+j}``.
    The alternating sum is evaluated in extended precision (working
    precision grows with ``m_r``); atoms beyond ``m`` re-observations are
    set to zero exactly.  Requires ``1 <= m_r <= 64``.
    """
    m, r, mr = _check(summary, m, r)
    if mr == 0:
        raise ValueError(f"no species with frequency r={r} in the sample")
    if mr > EXACT_MAX_MR:
        raise SizeGuardError(
            f"inclusion-exclusion limited to m_r <= {EXACT_MAX_MR} (got {mr}); use the Monte Carlo method (--method mc)"
        )
    t, a, n = params.theta, params.alpha, summary.n
    # each term can reach 3^m_r in size; keep 30 digits beyond that
    dps = 30 + int(mr * math.log10(3)) + 1
    with mpmath.workdps(dps):
        base = mpmath.mpf(t) + n
        log_den = mpmath.loggamma(base + m) - mpmath.loggamma(base)
        rma = mpmath.mpf(r) - mpmath.mpf(a)
        q = []
        for x in range(mr + 1):
            b = base - x * rma
            q.append(mpmath.exp(mpmath.loggamma(b + m) - mpmath.loggamma(b) - log_den))
        f_pmf = np.zeros(mr + 1)
        for d in range(mr + 1):
            f = mr - d
            if f > m:
                continue  # at most m species can be re-observed
            acc = mpmath.fsum(
                (-1) ** j * mpmath.binomial(mr - d, j) * q[d + j] for j in range(mr - d + 1)
            )
            f_pmf[f] = float(mpmath.binomial(mr, d) * acc)
    worst = f_pmf.min()
    if worst < -CLAMP_TOL:
        raise NumericalError(f"negative probability {worst:.3g} in inclusion-exclusion; use the Monte Carlo method (--method mc)")
    f_pmf = np.clip(f_pmf, 0.0, None)
    f_pmf /= f_pmf.sum()
    with np.errstate(divide="ignore"):
        log_pmf = np.log(f_pmf)
    mean = float(np.dot(np.arange(mr + 1), f_pmf))
    return DiscretePosterior(log_pmf, mean, "exact", "inclusion-exclusion")


def moments_exact(params: PypParams, summary: SampleSummary, m: int, r: int) -> tuple[float, float]:
    """First two posterior moments from the unseen-set probabilities.

    ``E[D] = m_r q_1`` and ``E[D(D-1)] = m_r (m_r - 1) q_2``; then
    ``f = m_r - D``.
    """
    m, r, mr = _check(summary, m, r)
    q1 = math.exp(unseen_set_log_prob(params, summary, m, r, 1))
    q2 = math.exp(unseen_set_log_prob(params, summary, m, r, 2)) if mr >= 2 else 0.0
    ed = mr * q1
    ed2 = mr * (mr - 1) * q2 + ed
    return mr - ed, mr * mr - 2 * mr * ed + ed2


def forward_chain_pmf(params: PypParams, summary: SampleSummary, m: int, r: int) -> np.ndarray:
    """Exact pmf by propagating the law of the still-unseen count ``D``.

    Draw ``i`` hits one of ``D`` untouched frequency-``r`` species with
    probability ``D (r - alpha) / (theta + n + i)``.  O(m m_r), all terms
    positive.  Returned as the pmf of ``f = m_r - D``.
    """
    m, r, mr = _check(summary, m, r)
    t, a, n = params.theta, params.alpha, summary.n
    d = np.arange(mr + 1)
    p = np.zeros(mr + 1)
    p[mr] = 1.0
    for i in range(m):
        h = d * (r - a) / (t + n + i)
        nxt = p * (1.0 - h)
        nxt[:-1] += (p * h)[1:]
        p = nxt
    return p[::-1].copy()


def _compound_tables(params, summary, m, r, mr):
    """U weights and the hypergeometric table, or ``None`` if not a valid mixture."""
    if m > 10_000:
        return None
    t, a, n = params.theta, params.alpha, summary.n
    b = r - a
    c = (t + n) / b
    w_law = GenFactorialLaw(b, c, m)
    s, lw = w_law.signed_weights()
    if np.any(s < 0):
        return None
    w = np.exp(lw)
    w /= w.sum()
    return w, c - 1.0


def posterior_mc(
    params: PypParams,
    summary: SampleSummary,
    m: int,
    r: int,
    replicates: int,
    rng: RngStream,
    threads: int = 1,
    path: str = "auto",
) -> DiscretePosterior:
    """Monte Carlo posterior of the number of frequency-``r`` species seen again.

    ``path="compound"`` draws ``U`` from the generalized factorial law and
    returns ``m_r - H`` with ``H`` general hypergeometric given ``U``; it is
    only used when all of its weights are nonnegative.
    ``path="forward"`` runs the urn forward ``m`` steps, tracking only how
    many frequency-``r`` species are still untouched.  ``"auto"`` prefers
    the compound path and falls back to the forward one.
    """
    m, r, mr = _check(summary, m, r)
    if mr == 0:
        raise ValueError(f"no species with frequency r={r} in the sample")
    if path not in ("auto", "compound", "forward"):
        raise ValueError(f"unknown path {path!r}")
    tables = None if path == "forward" else _compound_tables(params, summary, m, r, mr)
    if path == "compound" and tables is None:
        raise ValueError("compound representation has negative weights here; use path='forward'")

    if tables is not None:
        w, a_h = tables
        cdf_u = np.cumsum(w)
        hyp_cdf = {}

        def hcdf(u):
            if u not in hyp_cdf:
                pmf = GeneralHypergeometricLaw(a_h, mr, u).pmf()
                if pmf.min() < -CLAMP_TOL:
                    raise NumericalError("hypergeometric weights are negative; use path='forward'")
                hyp_cdf[u] = np.cumsum(np.clip(pmf, 0, None) / np.clip(pmf, 0, None).sum())
            return hyp_cdf[u]

        def draw(gen, size):
            u = np.minimum(np.searchsorted(cdf_u, gen.random(size), side="right"), m - 1) + 1
            v = gen.random(size)
            h = np.empty(size, dtype=np.int64)
            for uu in np.unique(u):
                sel = u == uu
                h[sel] = np.minimum(np.searchsorted(hcdf(int(uu)), v[sel], side="right"), mr)
            return mr - h

        # validate every table the sampler may need before drawing
        for uu in range(1, m + 1):
            if w[uu - 1] > 0:
                hcdf(uu)
        method = "compound-hypergeometric"
    else:
        t, a, n = params.theta, params.alpha, summary.n

        def draw(gen, size):
            d = np.full(size, mr, dtype=np.int64)
            for i in range(m):
                d -= gen.random(size) < d * (r - a) / (t + n + i)
            return mr - d

        method = "forward-urn"

    draws = _mc.run_blocks(rng, replicates, draw, threads)
    return _empirical(draws, mr + 1, method)


def posterior_binomial_approx(params: PypParams, summary: SampleSummary, m: int, r: int) -> DiscretePosterior:
    """Large-``(n, m)`` approximation ``Binomial(m_r, 1 - (n / (n + m))^(r - alpha))``."""
    m, r, mr = _check(summary, m, r)
    if mr == 0:
        raise ValueError(f"no species with frequency r={r} in the sample")
    n, a = summary.n, params.alpha
    log_stay = (r - a) * (math.log(n) - math.log(n + m))
    log_p = math.log(-math.expm1(log_stay)) if log_stay < 0 else -math.inf
    x = np.arange(mr + 1)
    log_binom = gammaln(mr + 1) - gammaln(x + 1) - gammaln(mr - x + 1)
    with np.errstate(invalid="ignore"):
        log_pmf = log_binom + np.where(x > 0, x * log_p, 0.0) + (mr - x) * log_stay
    mean = mr * math.exp(log_p)
    return DiscretePosterior(log_pmf, mean, "approximation", "binomial")
