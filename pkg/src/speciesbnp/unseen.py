"""The unseen-species problem.

How many new species will ``m`` further draws reveal?  Exact posterior laws
under the Pitman-Yor prior, their means, a compound-Binomial Monte Carlo that
scales to very large ``m``, and the frequentist Good-Toulmin baselines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _mc
from .combinatorics import gen_factorial_row, log_rising_factorial, log_rising_ratio, stirling_row
from .data import SampleSummary
from .errors import NumericalError, SizeGuardError
from .pyp import PypParams, RngStream, sample_k_star_batch, sample_m_star_batch

__all__ = [
    "DiscretePosterior",
    "SeriesEstimate",
    "EXACT_MAX_M",
    "good_toulmin",
    "good_toulmin_order_r",
    "posterior_exact",
    "estimator",
    "posterior_mc",
    "posterior_mc_order_r",
    "posterior_forward_urn",
    "forward_chain_pmf",
    "credible_interval",
    "growth_diagnostic",
]

EXACT_MAX_M = 10_000


@dataclass(frozen=True)
class DiscretePosterior:
    """A law on ``{0, 1, ..., len(log_pmf) - 1}``.

    Attributes
    ----------
    log_pmf : ndarray
        Log-probabilities, ``-inf`` for empty atoms.
    mean : float
    provenance : str
        ``"exact"``, ``"monte-carlo"`` or ``"approximation"``.
    method : str
        Which construction produced the law.
    replicates : int or None
        Number of Monte Carlo draws, when applicable.
    std_error : float or None
        Monte Carlo standard error of ``mean``.
    """

    log_pmf: np.ndarray
    mean: float
    provenance: str
    method: str = ""
    replicates: int | None = None
    std_error: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def support(self) -> np.ndarray:
        return np.arange(len(self.log_pmf))

    @property
    def pmf(self) -> np.ndarray:
        return np.exp(self.log_pmf)

    def var(self) -> float:
        p = self.pmf
        x = self.support
        return float(np.sum(p * (x - self.mean) ** 2))

    def tv(self, other: "DiscretePosterior") -> float:
        """Total-variation distance, padding the shorter support with zeros."""
        p, q = self.pmf, other.pmf
        size = max(p.size, q.size)
        p = np.pad(p, (0, size - p.size))
        q = np.pad(q, (0, size - q.size))
        return 0.5 * float(np.abs(p - q).sum())


class SeriesEstimate(float):
    """A float that also records whether the series was evaluated at ``lambda >= 1``.

    In that regime the alternating series oscillates wildly and the value
    should not be trusted; it is still computed, only flagged.
    """

    unstable: bool
    lam: float

    def __new__(cls, value: float, lam: float):
        obj = super().__new__(cls, value)
        obj.lam = float(lam)
        obj.unstable = bool(lam >= 1.0)
        return obj


def good_toulmin(summary: SampleSummary, m: int) -> SeriesEstimate:
    """``sum_i (-1)^(i+1) lambda^i m_i`` with ``lambda = m / n``."""
    m = int(m)
    if m < 1:
        raise ValueError("m must be at least 1")
    lam = m / summary.n
    total = math.fsum((-1) ** (i + 1) * lam**i * mi for i, mi in summary.fingerprint.items())
    return SeriesEstimate(total, lam)


def good_toulmin_order_r(summary: SampleSummary, m: int, r: int) -> SeriesEstimate:
    """Frequentist estimate of the number of new species seen exactly ``r`` times.

    ``lambda^r sum_{j >= r} (-lambda)^(j-r) binom(j, r) m_j``, matched to
    Poisson expectations.  Summing over ``r >= 1`` gives back
    :func:`good_toulmin` exactly.
    """
    m, r = int(m), int(r)
    if m < 1 or r < 1:
        raise ValueError("need m >= 1 and r >= 1")
    lam = m / summary.n
    terms = [
        lam**r * (-lam) ** (j - r) * math.comb(j, r) * mj
        for j, mj in summary.fingerprint.items()
        if j >= r
    ]
    return SeriesEstimate(math.fsum(terms), lam)


def _check_m(m):
    m = int(m)
    if m < 1:
        raise ValueError("m must be at least 1")
    return m


def posterior_exact(params: PypParams, summary: SampleSummary, m: int) -> DiscretePosterior:
    """Closed-form posterior of the number of new species in ``m`` draws.

    Pitman-Yor:
    ``Pr[u = x] = (k + theta/alpha)_(x) C(m, x; alpha, k alpha - n) / (theta + n)_(m)``.

    Dirichlet process:
    ``Pr[u = x] = theta^x |s(m, x; n)| / (theta + n)_(m)``, with
    ``(t + n)_(m) = sum_x |s(m, x; n)| t^x``.  Only ``n`` enters.

    Cost is O(m^2); ``m`` above :data:`EXACT_MAX_M` raises
    :class:`SizeGuardError`.
    """
    m = _check_m(m)
    if m > EXACT_MAX_M:
        raise SizeGuardError(
            f"exact posterior needs O(m^2) work; m={m} exceeds {EXACT_MAX_M}, use the Monte Carlo method (--method mc)"
        )
    a, t = params.alpha, params.theta
    n, k = summary.n, summary.k
    log_norm = log_rising_factorial(t + n, m)
    x = np.arange(m + 1)
    if params.is_dirichlet:
        log_pmf = x * math.log(t) + stirling_row(m, float(n)) - log_norm
    else:
        signs, logs = gen_factorial_row(m, a, k * a - n)
        if np.any(signs < 0):
            raise NumericalError("negative generalized factorial coefficient where none can occur")
        lrf = np.concatenate(([0.0], np.cumsum(np.log(k + t / a + np.arange(m)))))
        log_pmf = lrf + logs - log_norm
    pmf = np.exp(log_pmf)
    return DiscretePosterior(log_pmf, float(np.dot(x, pmf)), "exact", "closed-form")


def estimator(params: PypParams, summary: SampleSummary, m: int) -> float:
    """Posterior mean of the number of new species in ``m`` draws.

    ``(k + theta/alpha) ((theta+n+alpha)_(m) / (theta+n)_(m) - 1)``, or
    ``sum_{i<m} theta / (theta + n + i)`` for the Dirichlet process.
    """
    m = _check_m(m)
    a, t = params.alpha, params.theta
    n, k = summary.n, summary.k
    if params.is_dirichlet:
        return float(math.fsum(t / (t + n + np.arange(m))))
    return float((k + t / a) * math.expm1(log_rising_ratio(t + n, a, m)))


def _empirical(draws: np.ndarray, size: int, method: str, extra=None) -> DiscretePosterior:
    counts = np.bincount(draws, minlength=size)
    reps = int(draws.size)
    with np.errstate(divide="ignore"):
        log_pmf = np.log(counts) - math.log(reps)
    mean = float(draws.mean())
    se = float(draws.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
    return DiscretePosterior(log_pmf, mean, "monte-carlo", method, reps, se, extra or {})


def _beta_success(params: PypParams, summary: SampleSummary):
    """Beta shapes of the per-species success probability, or a fixed value for DP."""
    a, t = params.alpha, params.theta
    if params.is_dirichlet:
        return None, t / (t + summary.n)
    return (t / a + summary.k, summary.n / a - summary.k), None


def posterior_mc(
    params: PypParams,
    summary: SampleSummary,
    m: int,
    replicates: int,
    rng: RngStream,
    threads: int = 1,
) -> DiscretePosterior:
    """Compound-Binomial Monte Carlo for the number of new species.

    Each replicate draws ``K*`` (species in ``m`` draws from the shifted urn
    ``PYP(alpha, theta + n)``), a success probability ``p`` from
    ``Beta(theta/alpha + k, n/alpha - k)`` (``theta/(theta+n)`` for the
    Dirichlet process) and returns ``Binomial(K*, p)``.
    """
    m = _check_m(m)
    shapes, p_fixed = _beta_success(params, summary)
    n = summary.n

    def draw(gen, size):
        kstar = sample_k_star_batch(params, n, m, size, gen)
        p = p_fixed if shapes is None else gen.beta(shapes[0], shapes[1], size)
        return gen.binomial(kstar, p)

    draws = _mc.run_blocks(rng, replicates, draw, threads)
    return _empirical(draws, m + 1, "compound-binomial")


# above this many (replicate x step x step) operations the order-r sampler
# switches from the vectorized array urn to per-replicate size maps
_MSTAR_VECTOR_BUDGET = 50_000_000


def posterior_mc_order_r(
    params: PypParams,
    summary: SampleSummary,
    m: int,
    r: int,
    replicates: int,
    rng: RngStream,
    threads: int = 1,
) -> DiscretePosterior:
    """Monte Carlo posterior of the number of new species seen exactly ``r`` times.

    Same compound construction as :func:`posterior_mc` with ``K*`` replaced
    by ``M*_r``, the number of size-``r`` blocks after ``m`` draws from the
    shifted urn.
    """
    m, r = _check_m(m), int(r)
    if not 1 <= r <= m:
        raise ValueError(f"need 1 <= r <= m, got r={r}, m={m}")
    shapes, p_fixed = _beta_success(params, summary)
    n = summary.n
    vector = _mc.BLOCK_SIZE * m * m <= _MSTAR_VECTOR_BUDGET

    def draw(gen, size):
        if vector:
            mstar = sample_m_star_batch(params, n, m, r, size, gen)
        else:
            from .pyp import sample_m_star

            mstar = np.array([sample_m_star(params, n, m, r, gen) for _ in range(size)])
        p = p_fixed if shapes is None else gen.beta(shapes[0], shapes[1], size)
        return gen.binomial(mstar, p)

    draws = _mc.run_blocks(rng, replicates, draw, threads)
    return _empirical(draws, m // r + 1, "compound-binomial-order-r")


def posterior_forward_urn(
    params: PypParams,
    summary: SampleSummary,
    m: int,
    replicates: int,
    rng: RngStream,
    threads: int = 1,
) -> DiscretePosterior:
    """Count new species by running the predictive urn forward ``m`` steps.

    Uses neither the closed form nor the compound representation: draw
    ``i`` (0-based) opens a new species with probability
    ``(theta + alpha K) / (theta + n + i)``.
    """
    m = _check_m(m)
    a, t = params.alpha, params.theta
    n, k = summary.n, summary.k

    def draw(gen, size):
        kk = np.full(size, k, dtype=np.int64)
        for i in range(m):
            kk += gen.random(size) < (t + a * kk) / (t + n + i)
        return kk - k

    draws = _mc.run_blocks(rng, replicates, draw, threads)
    return _empirical(draws, m + 1, "forward-urn")


def forward_chain_pmf(params: PypParams, summary: SampleSummary, m: int) -> np.ndarray:
    """Exact pmf of the new-species count by propagating the urn's law.

    O(m^2) positive-term recursion over the number of species, independent of
    the factorial-coefficient formulas; intended as a check.
    """
    m = _check_m(m)
    a, t = params.alpha, params.theta
    n, k = summary.n, summary.k
    p = np.zeros(m + 1)
    p[0] = 1.0
    j = np.arange(m + 1)
    for i in range(m):
        q = (t + a * (k + j)) / (t + n + i)
        nxt = p * (1.0 - q)
        nxt[1:] += (p * q)[:-1]
        p = nxt
    return p


def credible_interval(post: DiscretePosterior, level: float = 0.95) -> tuple[int, int]:
    """Shortest run of consecutive atoms holding at least ``level`` mass.

    Among runs of the minimal length the leftmost is returned.  A tolerance
    of 1e-12 absorbs rounding in the cumulative sums.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    p = post.pmf
    cs = np.concatenate(([0.0], np.cumsum(p)))
    need = level - 1e-12

    def first_window(w):
        mass = cs[w:] - cs[:-w]
        hit = np.flatnonzero(mass >= need)
        return int(hit[0]) if hit.size else None

    lo_w, hi_w = 1, p.size
    if first_window(hi_w) is None:
        return 0, p.size - 1
    while lo_w < hi_w:
        mid = (lo_w + hi_w) // 2
        if first_window(mid) is None:
            lo_w = mid + 1
        else:
            hi_w = mid
    start = first_window(lo_w)
    return start, start + lo_w - 1


def growth_diagnostic(params: PypParams, summary: SampleSummary, ms) -> dict:
    """Posterior mean of new species divided by ``m^alpha`` (``log m`` for DP).

    For large ``m`` the ratio settles to a constant; a trend that keeps
    drifting indicates the asymptotic regime has not been reached.
    """
    ms = [int(x) for x in ms]
    vals = [estimator(params, summary, x) for x in ms]
    if params.is_dirichlet:
        scale = [math.log(x) if x > 1 else math.nan for x in ms]
    else:
        scale = [x**params.alpha for x in ms]
    return {"m": ms, "estimate": vals, "ratio": [v / s for v, s in zip(vals, scale)]}
