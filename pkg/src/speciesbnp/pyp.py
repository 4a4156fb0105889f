"""Pitman-Yor exchangeable partitions: probabilities, predictive rule, samplers.

The Dirichlet process (``alpha == 0``) is always routed through dedicated
branches rather than evaluated as the small-``alpha`` limit, since factors like
``(theta/alpha)_(k) alpha^k`` only cancel analytically.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from .combinatorics import gen_factorial_row, log_rising_factorial, stirling_row

__all__ = [
    "PypParams",
    "PartitionState",
    "RngStream",
    "eppf_log",
    "epsf_log",
    "predictive_new_prob",
    "predictive_block_probs",
    "sample_labels",
    "sample_partition",
    "sample_k_star",
    "sample_k_star_batch",
    "sample_m_star",
    "sample_m_star_batch",
    "k_n_log_pmf",
    "k_n_log_pmf_vector",
    "expected_k_star",
    "expected_m_star",
]


@dataclass(frozen=True)
class PypParams:
    """Discount ``alpha`` in [0, 1) and scale ``theta > -alpha``."""

    alpha: float
    theta: float

    def __post_init__(self):
        a, t = float(self.alpha), float(self.theta)
        if not (0.0 <= a < 1.0):
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not (t > -a) or not math.isfinite(t):
            raise ValueError(f"theta must exceed -alpha = {-a}, got {self.theta}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "theta", t)

    @property
    def is_dirichlet(self) -> bool:
        return self.alpha == 0.0

    def shifted(self, n: int) -> "PypParams":
        """Parameters of the size-``n`` posterior urn, ``PYP(alpha, theta + n)``."""
        return PypParams(self.alpha, self.theta + n)


@dataclass
class PartitionState:
    """Block sizes of a partition of ``{1..n}`` in order of first appearance."""

    block_sizes: list[int] = field(default_factory=list)

    def __post_init__(self):
        if any(int(s) < 1 for s in self.block_sizes):
            raise ValueError("block sizes must be positive")
        self.block_sizes = [int(s) for s in self.block_sizes]

    @property
    def n(self) -> int:
        return sum(self.block_sizes)

    @property
    def k(self) -> int:
        return len(self.block_sizes)

    def fingerprint(self) -> dict[int, int]:
        return dict(sorted(Counter(self.block_sizes).items()))


class RngStream:
    """Reproducible random stream identified by ``(seed, stream)``.

    Backed by numpy's ``SeedSequence`` so child streams derived with
    :meth:`derive` are statistically independent and depend only on their
    index, never on scheduling.
    """

    def __init__(self, seed: int, stream: int = 0, _path: tuple = ()):
        self.seed = int(seed)
        self.stream = int(stream)
        self._path = tuple(_path)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *self._path))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def derive(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream, self._path + (int(index),))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream}, path={self._path})"


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def _check_sizes(block_sizes):
    sizes = [int(s) for s in block_sizes]
    if not sizes:
        raise ValueError("need at least one block")
    if any(s < 1 for s in sizes):
        raise ValueError("block sizes must be positive")
    return sizes


def _log_scale_ratio(params: PypParams, n: int, k: int) -> float:
    """``log[(theta/alpha)_(k) alpha^k / (theta)_(n)]`` (PYP) or
    ``log[theta^k / (theta)_(n)]`` (DP).

    The leading factor ``theta`` of numerator and denominator is cancelled
    first so that ``theta`` in ``(-alpha, 0]`` is handled.
    """
    a, t = params.alpha, params.theta
    if params.is_dirichlet:
        return (k - 1) * math.log(t) - log_rising_factorial(t + 1.0, n - 1)
    return (
        (k - 1) * math.log(a)
        + log_rising_factorial(t / a + 1.0, k - 1)
        - log_rising_factorial(t + 1.0, n - 1)
    )


def eppf_log(params: PypParams, block_sizes: Sequence[int]) -> float:
    """Log-probability of one set partition with the given block sizes."""
    sizes = _check_sizes(block_sizes)
    n, k = sum(sizes), len(sizes)
    out = _log_scale_ratio(params, n, k)
    if params.is_dirichlet:
        out += sum(math.lgamma(s) for s in sizes)
    else:
        one_minus = 1.0 - params.alpha
        out += sum(log_rising_factorial(one_minus, s - 1) for s in sizes)
    return float(out)


def epsf_log(params: PypParams, fingerprint: Mapping[int, int], n: int | None = None) -> float:
    """Log-probability that the fingerprint ``(M_1, .., M_n)`` equals ``fingerprint``.

    ``fingerprint`` maps a frequency ``r`` to the number of blocks of size
    ``r``.  When ``n`` is given it must equal ``sum r * m_r``.
    """
    fp = {int(r): int(m) for r, m in fingerprint.items() if int(m) != 0}
    if any(r < 1 or m < 0 for r, m in fp.items()) or not fp:
        raise ValueError(f"invalid fingerprint {fingerprint!r}")
    total = sum(r * m for r, m in fp.items())
    if n is not None and total != int(n):
        raise ValueError(f"fingerprint accounts for {total} draws, expected n={n}")
    n = total
    k = sum(fp.values())
    out = math.lgamma(n + 1) + _log_scale_ratio(params, n, k)
    for r, m in fp.items():
        if params.is_dirichlet:
            per_block = -math.log(r)  # (r-1)!/r!
        else:
            per_block = log_rising_factorial(1.0 - params.alpha, r - 1) - math.lgamma(r + 1)
        out += m * per_block - math.lgamma(m + 1)
    return float(out)


def predictive_new_prob(params: PypParams, state: PartitionState) -> float:
    """Probability that the next draw opens a new block."""
    n, k = state.n, state.k
    if n == 0:
        return 1.0
    return (params.theta + k * params.alpha) / (params.theta + n)


def predictive_block_probs(params: PypParams, state: PartitionState) -> np.ndarray:
    """Probability that the next draw joins each existing block."""
    sizes = np.asarray(state.block_sizes, dtype=float)
    if sizes.size == 0:
        return sizes
    return (sizes - params.alpha) / (params.theta + state.n)


def sample_labels(params: PypParams, n: int, rng) -> np.ndarray:
    """Block label (0, 1, 2, ... in order of appearance) for each of ``n`` draws.

    Sequential urn with one uniform per draw.  The weight ``n_j - alpha`` of
    block ``j`` is split into ``1 - alpha`` for its first member plus one for
    every later member, so choosing an existing block reduces to picking a
    block uniformly or a non-first draw uniformly.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    gen = _as_generator(rng)
    a, t = params.alpha, params.theta
    one_minus = 1.0 - a
    us = gen.random(n - 1).tolist()
    labels = [0]
    later = []  # block label of every draw that was not first in its block
    k = 1
    for i in range(1, n):
        w = us[i - 1] * (t + i)
        new_w = t + a * k
        if w < new_w:
            labels.append(k)
            k += 1
            continue
        w -= new_w
        first_w = k * one_minus
        if w < first_w:
            j = min(int(w / one_minus), k - 1)
        else:
            j = later[min(int(w - first_w), len(later) - 1)]
        labels.append(j)
        later.append(j)
    return np.asarray(labels, dtype=np.int64)


def sample_partition(params: PypParams, n: int, rng) -> PartitionState:
    """Draw a partition of ``{1..n}`` from the Pitman-Yor EPPF."""
    labels = sample_labels(params, n, rng)
    return PartitionState(np.bincount(labels).tolist())


def sample_k_star_batch(params: PypParams, n_offset: int, m: int, size: int, rng) -> np.ndarray:
    """``size`` independent draws of the number of blocks after ``m`` draws
    from ``PYP(alpha, theta + n_offset)``."""
    m = int(m)
    if m < 1:
        raise ValueError("m must be at least 1")
    gen = _as_generator(rng)
    a = params.alpha
    base = params.theta + int(n_offset)
    k = np.ones(int(size), dtype=np.int64)
    for i in range(1, m):
        p = (base + a * k) / (base + i)
        k += gen.random(k.size) < p
    return k


def sample_k_star(params: PypParams, n_offset: int, m: int, rng) -> int:
    """One draw of ``K*_m``: a chain of ``m - 1`` Bernoulli new-block events."""
    return int(sample_k_star_batch(params, n_offset, m, 1, rng)[0])


def sample_m_star_batch(params: PypParams, n_offset: int, m: int, r: int, size: int, rng) -> np.ndarray:
    """``size`` draws of the number of blocks of size exactly ``r`` after ``m``
    draws from ``PYP(alpha, theta + n_offset)``.

    Block sizes are tracked in an ``(size, m)`` array (column ``j`` is the
    ``j``-th block opened); costs O(size * m^2).
    """
    m, r, size = int(m), int(r), int(size)
    if not 1 <= r <= m:
        raise ValueError(f"need 1 <= r <= m, got r={r}, m={m}")
    gen = _as_generator(rng)
    a = params.alpha
    base = params.theta + int(n_offset)
    sizes = np.zeros((size, m), dtype=np.float64)
    sizes[:, 0] = 1.0
    k = np.ones(size, dtype=np.int64)
    rows = np.arange(size)
    for i in range(1, m):
        w = gen.random(size) * (base + i)
        new = w < base + a * k
        # existing blocks, weight n_j - alpha each
        weights = np.where(sizes > 0, sizes - a, 0.0)
        cum = np.cumsum(weights, axis=1)
        target = w - (base + a * k)
        j = np.minimum((cum <= target[:, None]).sum(axis=1), k - 1)
        j = np.where(new, k, j)
        sizes[rows, j] += 1.0
        k += new
    return (sizes == r).sum(axis=1)


def sample_m_star(params: PypParams, n_offset: int, m: int, r: int, rng) -> int:
    """One draw of ``M*_{r,m}`` by full urn simulation with a size -> count map."""
    m, r = int(m), int(r)
    if not 1 <= r <= m:
        raise ValueError(f"need 1 <= r <= m, got r={r}, m={m}")
    gen = _as_generator(rng)
    a = params.alpha
    base = params.theta + int(n_offset)
    counts: dict[int, int] = {1: 1}
    k = 1
    for i in range(1, m):
        w = gen.random() * (base + i)
        if w < base + a * k:
            counts[1] = counts.get(1, 0) + 1
            k += 1
            continue
        w -= base + a * k
        chosen = None
        for s, c in counts.items():
            mass = c * (s - a)
            if w < mass:
                chosen = s
                break
            w -= mass
        if chosen is None:  # rounding at the upper edge
            chosen = next(reversed(counts))
        counts[chosen] -= 1
        if counts[chosen] == 0:
            del counts[chosen]
        counts[chosen + 1] = counts.get(chosen + 1, 0) + 1
    return counts.get(r, 0)


def k_n_log_pmf_vector(params: PypParams, n: int) -> np.ndarray:
    """``log Pr[K_n = x]`` for ``x = 0..n`` (entry 0 is ``-inf``)."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    x = np.arange(n + 1)
    out = np.full(n + 1, -np.inf)
    if params.is_dirichlet:
        t = params.theta
        ls = stirling_row(n, 0.0)
        out[1:] = x[1:] * math.log(t) + ls[1:] - log_rising_factorial(t, n)
        return out
    a, t = params.alpha, params.theta
    signs, logs = gen_factorial_row(n, a, 0.0)
    for xi in range(1, n + 1):
        out[xi] = _log_scale_ratio(params, n, xi) - xi * math.log(a) + logs[xi]
    return out


def k_n_log_pmf(params: PypParams, n: int, x: int) -> float:
    """``log Pr[K_n = x]``."""
    n, x = int(n), int(x)
    if not 1 <= x <= n:
        raise ValueError(f"need 1 <= x <= n, got x={x}, n={n}")
    return float(k_n_log_pmf_vector(params, n)[x])


def expected_k_star(params: PypParams, n_offset: int, m: int) -> float:
    """``E[K*_m]`` under ``PYP(alpha, theta + n_offset)``."""
    a = params.alpha
    t = params.theta + int(n_offset)
    if params.is_dirichlet:
        return float(np.sum(t / (t + np.arange(m))))
    ratio = math.exp(log_rising_factorial(t + a, m) - log_rising_factorial(t, m)) if t > 0 else None
    if ratio is None:
        # theta + n_offset in (-alpha, 0]: use the one-step recursion instead
        e = 1.0
        for i in range(1, m):
            e += (t + a * e) / (t + i)
        return e
    return (t / a) * (ratio - 1.0)


def expected_m_star(params: PypParams, n_offset: int, m: int, r: int) -> float:
    """``E[M*_{r,m}]`` under ``PYP(alpha, theta + n_offset)``.

    PYP: ``(m)_[r] p_r ((theta+n)/alpha) (theta+n+alpha)_(m-r) / (theta+n)_(m)``
    with ``p_r = alpha (1-alpha)_(r-1) / r!``; DP: the ``alpha -> 0`` limit.
    """
    m, r = int(m), int(r)
    if not 1 <= r <= m:
        return 0.0
    a = params.alpha
    t = params.theta + int(n_offset)
    if t <= 0:
        raise ValueError("closed form needs theta + n_offset > 0")
    log_falling = gammaln(m + 1) - gammaln(m - r + 1)
    if params.is_dirichlet:
        lv = log_falling + math.log(t / r) + log_rising_factorial(t, m - r) - log_rising_factorial(t, m)
    else:
        lp = math.log(a) + log_rising_factorial(1.0 - a, r - 1) - math.lgamma(r + 1)
        lv = (
            log_falling
            + lp
            + math.log(t / a)
            + log_rising_factorial(t + a, m - r)
            - log_rising_factorial(t, m)
        )
    return float(math.exp(lv))
