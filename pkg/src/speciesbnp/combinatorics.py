"""Log-domain special functions and factorial coefficient families.

Everything here returns logarithms (or sign/log-magnitude pairs) because the
coefficients involved overflow double precision for moderate sizes, e.g.
``C(m, x; alpha, k*alpha - n)`` already exceeds 1e308 around ``m = 200``.

Conventions
-----------
``(a)_(u)``
    rising factorial ``a (a+1) ... (a+u-1)``.
``C(u, v; a, b)``
    non-centered generalized factorial coefficient, defined by
    ``(a t - b)_(u) = sum_v C(u, v; a, b) (t)_(v)``.  ``C(u, v; a) = C(u, v; a, 0)``.
``|s(u, v; b)|``
    non-centered signless Stirling number of the first kind, defined by
    ``(t + b)_(u) = sum_v |s(u, v; b)| t^v``.  Note the ``+b`` here: the limit
    ``a^-v C(u, v; a, b)`` as ``a -> 0`` equals ``|s(u, v; -b)|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "LogCoeffTable",
    "log_rising_factorial",
    "log_rising_ratio",
    "gen_factorial_row",
    "gen_factorial_table",
    "gen_factorial_coeff",
    "gen_factorial_coeff_sum",
    "stirling_row",
    "signless_stirling_noncentered",
    "digamma",
    "trigamma",
    "signed_logsumexp",
]

# below this many factors the rising factorial is summed term by term, which
# avoids the cancellation in lgamma(a + u) - lgamma(a) when a is huge
_DIRECT_SUM_MAX = 256


def log_rising_factorial(a, u: int):
    """Return ``log (a)_(u) = log prod_{i<u} (a + i)``.

    ``a`` may be a scalar or an array; ``u`` is a nonnegative integer.

    >>> round(float(np.exp(log_rising_factorial(1.0, 3))), 12)
    6.0
    """
    u = int(u)
    if u < 0:
        raise ValueError(f"order must be nonnegative, got {u}")
    a_arr = np.asarray(a, dtype=float)
    if u == 0:
        out = np.zeros_like(a_arr)
        return float(out) if out.ndim == 0 else out
    if np.any(a_arr <= 0) or np.any(~np.isfinite(a_arr)):
        raise ValueError(f"rising factorial needs a > 0 (got {a!r}, u={u})")
    if u <= _DIRECT_SUM_MAX:
        steps = np.arange(u, dtype=float)
        out = np.log(a_arr[..., None] + steps).sum(axis=-1)
    else:
        out = gammaln(a_arr + u) - gammaln(a_arr)
    return float(out) if np.ndim(out) == 0 else out


_RATIO_DIRECT_MAX = 1 << 20


def log_rising_ratio(a: float, shift: float, u: int) -> float:
    """Return ``log((a + shift)_(u) / (a)_(u))`` without cancellation.

    Sums ``log1p(shift / (a + i))`` for moderate ``u``; large ``u`` falls
    back to a Gamma-function difference.
    """
    u = int(u)
    if u < 0:
        raise ValueError(f"order must be nonnegative, got {u}")
    if not (a > 0 and a + shift > 0):
        raise ValueError(f"rising factorial needs positive bases (got {a}, {a + shift})")
    if u == 0:
        return 0.0
    if u <= _RATIO_DIRECT_MAX:
        return math.fsum(np.log1p(shift / (a + np.arange(u, dtype=float))))
    return float(gammaln(a + shift + u) - gammaln(a + shift) - gammaln(a + u) + gammaln(a))


def signed_logsumexp(signs, logs, axis=None):
    """Sign-aware log-sum-exp.

    Returns ``(sign, log|sum|)`` of ``sum_i signs[i] * exp(logs[i])``.
    Positive and negative parts are accumulated separately so the only
    cancellation happens once, at the end.
    """
    signs = np.asarray(signs, dtype=float)
    logs = np.asarray(logs, dtype=float)
    pos = np.where(signs > 0, logs, -np.inf)
    neg = np.where(signs < 0, logs, -np.inf)
    with np.errstate(invalid="ignore"):
        lp = _lse(pos, axis)
        ln = _lse(neg, axis)
    return _signed_sub(lp, ln)


def _lse(x, axis):
    m = np.max(x, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        s = np.log(np.sum(np.exp(x - m_safe), axis=axis, keepdims=True)) + m_safe
    return np.squeeze(s, axis=axis) if axis is not None else s.reshape(())


def _signed_sub(lp, ln):
    """(sign, log|e^lp - e^ln|), elementwise."""
    lp = np.asarray(lp, dtype=float)
    ln = np.asarray(ln, dtype=float)
    big = np.maximum(lp, ln)
    small = np.minimum(lp, ln)
    sign = np.where(lp > ln, 1.0, np.where(lp < ln, -1.0, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        mag = big + np.log1p(-np.exp(small - big))
    mag = np.where(np.isneginf(small), big, mag)
    mag = np.where(sign == 0, -np.inf, mag)
    return sign, mag


def _signed_add(s1, l1, s2, l2):
    """Elementwise (s1 e^l1) + (s2 e^l2) in sign/log form."""
    lp = np.logaddexp(np.where(s1 > 0, l1, -np.inf), np.where(s2 > 0, l2, -np.inf))
    ln = np.logaddexp(np.where(s1 < 0, l1, -np.inf), np.where(s2 < 0, l2, -np.inf))
    return _signed_sub(lp, ln)


@dataclass(frozen=True)
class LogCoeffTable:
    """Triangular table of coefficients stored as sign and log-magnitude.

    ``signs[u, v]`` is in {-1, 0, +1} and ``logs[u, v]`` is ``log|value|``
    (``-inf`` where the sign is 0).  ``family`` names the coefficient family
    and ``params`` its parameters.
    """

    family: str
    params: tuple
    signs: np.ndarray
    logs: np.ndarray

    @property
    def u_max(self) -> int:
        return self.signs.shape[0] - 1

    def value(self, u: int, v: int) -> float:
        return float(self.signs[u, v] * np.exp(self.logs[u, v]))

    def values(self) -> np.ndarray:
        return self.signs * np.exp(self.logs)


def _check_uv(u, v):
    if u < 0 or v < 0:
        raise ValueError(f"indices must be nonnegative, got (u={u}, v={v})")


def _gen_factorial_rows(u_max: int, a: float, b: float, keep: bool):
    if not a > 0:
        raise ValueError(f"generalized factorial coefficients need a > 0, got {a}")
    s = np.zeros(u_max + 2)
    lg = np.full(u_max + 2, -np.inf)
    s[0], lg[0] = 1.0, 0.0
    rows = [(s[: u_max + 1].copy(), lg[: u_max + 1].copy())] if keep else None
    v = np.arange(u_max + 2, dtype=float)
    log_a = math.log(a)
    for u in range(u_max):
        c = u - v * a - b
        c_sign = np.sign(c)
        with np.errstate(divide="ignore"):
            c_log = np.log(np.abs(c))
        # shift: a * C(u, v-1)
        sh_s = np.concatenate(([0.0], s[:-1]))
        sh_l = np.concatenate(([-np.inf], lg[:-1])) + log_a
        s, lg = _signed_add(sh_s, sh_l, c_sign * s, c_log + lg)
        s[u + 2 :] = 0.0
        lg[u + 2 :] = -np.inf
        if keep:
            rows.append((s[: u_max + 1].copy(), lg[: u_max + 1].copy()))
    return rows if keep else (s[: u_max + 1], lg[: u_max + 1])


def gen_factorial_row(u: int, a: float, b: float = 0.0):
    """Row ``v = 0..u`` of ``C(u, v; a, b)`` as ``(signs, logs)`` arrays.

    Built with the triangular recurrence
    ``C(u+1, v) = a C(u, v-1) + (u - v a - b) C(u, v)``, ``C(0, 0) = 1``,
    in O(u^2) time and O(u) memory.  For ``a in (0, 1)`` and ``b <= 0`` every
    term is nonnegative, so the log-domain accumulation is cancellation free;
    other parameter values go through the same signed recurrence.
    """
    u = int(u)
    _check_uv(u, 0)
    return _gen_factorial_rows(u, float(a), float(b), keep=False)


def gen_factorial_table(u_max: int, a: float, b: float = 0.0) -> LogCoeffTable:
    """Full triangular table of ``C(u, v; a, b)`` for ``u, v <= u_max``."""
    rows = _gen_factorial_rows(int(u_max), float(a), float(b), keep=True)
    signs = np.vstack([r[0] for r in rows])
    logs = np.vstack([r[1] for r in rows])
    return LogCoeffTable("generalized-factorial", (float(a), float(b)), signs, logs)


def gen_factorial_coeff(u: int, v: int, a: float, b: float = 0.0):
    """``C(u, v; a, b)`` as a ``(sign, log|value|)`` pair."""
    _check_uv(u, v)
    if v > u:
        return 0.0, -np.inf
    s, lg = gen_factorial_row(u, a, b)
    return float(s[v]), float(lg[v])


def gen_factorial_coeff_sum(u: int, v: int, a: float, b: float = 0.0) -> float:
    """``C(u, v; a, b)`` from the explicit alternating sum.

    ``(v!)^-1 sum_j (-1)^j binom(v, j) (-j a - b)_(u)``, accumulated with
    ``math.fsum``.  Only usable for small ``u``; it loses all accuracy once
    the summands dwarf the result.  Kept as an independent check on the
    recurrence.
    """
    _check_uv(u, v)
    if v > u:
        return 0.0
    terms = []
    for j in range(v + 1):
        x = -j * a - b
        prod = 1.0
        for i in range(u):
            prod *= x + i
        terms.append((-1) ** j * math.comb(v, j) * prod)
    return math.fsum(terms) / math.factorial(v)


def stirling_row(u: int, b: float = 0.0) -> np.ndarray:
    """``log|s(u, v; b)|`` for ``v = 0..u`` (``-inf`` for zero entries)."""
    u = int(u)
    b = float(b)
    if b < 0:
        raise ValueError(f"non-centered Stirling numbers need b >= 0, got {b}")
    _check_uv(u, 0)
    lg = np.full(u + 1, -np.inf)
    lg[0] = 0.0
    for k in range(u):
        with np.errstate(divide="ignore"):
            lc = math.log(b + k) if b + k > 0 else -np.inf
        shifted = np.concatenate(([-np.inf], lg[:-1]))
        lg = np.logaddexp(lg + lc, shifted)
    return lg


def signless_stirling_noncentered(u: int, v: int, b: float = 0.0) -> float:
    """``log|s(u, v; b)|``, coefficient of ``t^v`` in ``(t + b)_(u)``.

    Recurrence ``|s(u+1, v; b)| = (b + u)|s(u, v; b)| + |s(u, v-1; b)|``;
    all terms are nonnegative for ``b >= 0``.

    >>> round(math.exp(signless_stirling_noncentered(2, 1, 3.0)), 10)
    7.0
    """
    _check_uv(u, v)
    if b < 0:
        raise ValueError(f"non-centered Stirling numbers need b >= 0, got {b}")
    if v > u:
        return -np.inf
    return float(stirling_row(u, b)[v])


# Bernoulli-number coefficients B_2k / (2k) for the digamma expansion
_PSI_ASYMP = (
    1.0 / 12,
    -1.0 / 120,
    1.0 / 252,
    -1.0 / 240,
    1.0 / 132,
    -691.0 / 32760,
    1.0 / 12,
)
# B_2k for the trigamma expansion (terms B_2k / x^(2k+1))
_TRI_ASYMP = (
    1.0 / 6,
    -1.0 / 30,
    1.0 / 42,
    -1.0 / 30,
    5.0 / 66,
    -691.0 / 2730,
    7.0 / 6,
)
_ASYMP_FROM = 10.0


def _shift_up(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("argument must be strictly positive")
    shift = np.maximum(0, np.ceil(_ASYMP_FROM - x)).astype(int)
    return x, shift


def digamma(x):
    """Digamma function for ``x > 0``, scalar or array.

    Shifts the argument up with ``psi(x) = psi(x + 1) - 1/x`` until
    ``x >= 10`` and then uses the asymptotic series; absolute error is
    below 1e-14 on the whole half line.
    """
    x, shift = _shift_up(x)
    acc = np.zeros_like(x)
    y = x.copy()
    for _ in range(int(shift.max(initial=0))):
        active = shift > 0
        acc = acc - np.where(active, 1.0 / y, 0.0)
        y = np.where(active, y + 1.0, y)
        shift = shift - active
    inv2 = 1.0 / (y * y)
    series = 0.0
    for c in reversed(_PSI_ASYMP):
        series = (series + c) * inv2
    out = acc + np.log(y) - 0.5 / y - series
    return float(out) if out.ndim == 0 else out


def trigamma(x):
    """Trigamma function for ``x > 0``, scalar or array."""
    x, shift = _shift_up(x)
    acc = np.zeros_like(x)
    y = x.copy()
    for _ in range(int(shift.max(initial=0))):
        active = shift > 0
        acc = acc + np.where(active, 1.0 / (y * y), 0.0)
        y = np.where(active, y + 1.0, y)
        shift = shift - active
    inv = 1.0 / y
    inv2 = inv * inv
    series = 0.0
    for c in reversed(_TRI_ASYMP):
        series = (series + c) * inv2
    out = acc + inv + 0.5 * inv2 + series * inv
    return float(out) if out.ndim == 0 else out
