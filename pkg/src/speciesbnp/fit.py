"""Estimating the prior parameters ``(alpha, theta)`` from a sample.

Empirical Bayes (profile and joint maximum likelihood), an auxiliary
closed-form-ish estimator of ``theta``, a grid hierarchical-Bayes posterior on
``(alpha, gamma = theta + alpha)`` and the tail functionals that govern the
large-sample behaviour of all of these.

The likelihood depends on the data only through ``n``, ``K_n`` and the
fingerprint.  ``theta`` is only weakly identified: the joint likelihood is
nearly flat in ``theta`` on compacts no matter how large ``n`` is, while
``alpha`` concentrates at rate ``n^(-alpha/2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.special import gammaln, logsumexp

from .combinatorics import digamma, trigamma
from .data import SampleSummary
from .errors import NumericalError, PathologyError

__all__ = [
    "FitReport",
    "GridPosterior",
    "Prior",
    "parse_prior_alpha",
    "parse_prior_gamma",
    "log_lik_profile",
    "score_profile",
    "observed_info",
    "mle_alpha",
    "aux_theta",
    "log_lik_joint",
    "score_theta_joint",
    "theta_hat_given_alpha",
    "mle_profile",
    "mle_joint",
    "hierarchical_posterior",
    "hstar_log_weight",
    "hstar_on_grid",
    "tail_functionals",
    "tail_mass_from_theta",
    "theta_star_from_tail",
    "flatness_band",
]

PARAM_TOL = 1e-8
SCORE_TOL = 1e-9
MAX_ITER = 200
_EDGE = 1e-12


def _check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _check_pathology(summary: SampleSummary):
    if summary.k == summary.n:
        raise PathologyError(
            "K_n = n (every observation is a distinct species): the likelihood in alpha "
            "is increasing and has no interior maximizer"
        )
    if summary.k == 1:
        raise PathologyError(
            "K_n = 1 (a single species): the likelihood in alpha is decreasing "
            "and has no interior maximizer"
        )


def _fp(summary: SampleSummary):
    r, m = summary.fingerprint_arrays()
    return r.astype(float), m.astype(float)


# -- profile likelihood at theta = 0 ---------------------------------------


def log_lik_profile(summary: SampleSummary, alpha: float) -> float:
    """``(K - 1) log alpha + sum_r m_r log (1 - alpha)_(r - 1)``.

    Equal to ``(K-1) log alpha + sum_{i<n} c_i log(i - alpha)`` where ``c_i``
    counts species with frequency above ``i``.  This is the log-likelihood
    at ``theta = 0`` up to the constant ``log Gamma(K) - log Gamma(n)``.
    """
    a = _check_alpha(alpha)
    r, m = _fp(summary)
    body = np.dot(m, gammaln(r - a) - gammaln(1.0 - a))
    return float((summary.k - 1) * math.log(a) + body)


def score_profile(summary: SampleSummary, alpha: float) -> float:
    """Derivative of :func:`log_lik_profile` in ``alpha``."""
    a = _check_alpha(alpha)
    r, m = _fp(summary)
    return float((summary.k - 1) / a - np.dot(m, digamma(r - a) - digamma(1.0 - a)))


def observed_info(summary: SampleSummary, alpha: float) -> float:
    """Negative second derivative of :func:`log_lik_profile`; always positive."""
    a = _check_alpha(alpha)
    r, m = _fp(summary)
    return float((summary.k - 1) / a**2 + np.dot(m, trigamma(1.0 - a) - trigamma(r - a)))


def _polish(fun, dfun, x, lo, hi, tol=SCORE_TOL, steps=8):
    """A few safeguarded Newton steps; keeps the best iterate."""
    best, fbest = x, fun(x)
    for _ in range(steps):
        if abs(fbest) <= tol:
            break
        d = dfun(best)
        if d == 0 or not math.isfinite(d):
            break
        nxt = best - fbest / d
        if not lo < nxt < hi:
            break
        fn = fun(nxt)
        if abs(fn) >= abs(fbest):
            break
        best, fbest = nxt, fn
    return best, fbest


def mle_alpha(summary: SampleSummary) -> float:
    """Maximizer of the profile likelihood, unique whenever ``1 < K_n < n``.

    The profile is strictly concave, so the score has a single sign change
    on ``(0, 1)``; it is bracketed at ``(1e-12, 1 - 1e-12)``, solved with
    Brent's method and polished by Newton steps.
    """
    _check_pathology(summary)
    f = lambda a: score_profile(summary, a)
    lo, hi = _EDGE, 1.0 - _EDGE
    root = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER)
    root, _ = _polish(f, lambda a: -observed_info(summary, a), root, lo, hi)
    return float(root)


# -- auxiliary theta estimator ----------------------------------------------


def _aux_score(summary, a, t):
    return float(
        digamma(t + 1.0) - digamma(t / a + 1.0) / a + math.log(summary.k) / a - math.log(summary.n)
    )


def _expanding_root(f, lo, start=1.0, grow=2.0, cap=MAX_ITER):
    """Root of a function positive near ``lo`` and eventually negative."""
    hi = max(start, lo + 1.0)
    for _ in range(cap):
        if f(hi) < 0:
            return optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER)
        lo_next = hi
        hi = lo + (hi - lo) * grow
        if f(lo_next) > 0:
            lo = lo_next
    raise NumericalError("could not bracket a sign change", best=hi)


def aux_theta(summary: SampleSummary, alpha: float) -> float:
    """Auxiliary estimate of ``theta`` at a given ``alpha``.

    Root on ``(-alpha, inf)`` of
    ``psi(theta + 1) - psi(theta/alpha + 1) / alpha + log(K^(1/alpha) / n)``,
    which is strictly decreasing there.
    """
    a = _check_alpha(alpha)
    if summary.k < 1:
        raise ValueError("need K_n >= 1")
    f = lambda t: _aux_score(summary, a, t)
    lo = -a + a * 1e-12
    root = _expanding_root(f, lo)
    df = lambda t: float(trigamma(t + 1.0) - trigamma(t / a + 1.0) / a**2)
    root, _ = _polish(f, df, root, -a, math.inf)
    return float(root)


# -- joint likelihood -------------------------------------------------------


def _check_phi(alpha, theta):
    a = _check_alpha(alpha)
    t = float(theta)
    if not t > -a:
        raise ValueError(f"theta must exceed -alpha = {-a}, got {theta}")
    return a, t


def log_lik_joint(summary: SampleSummary, alpha: float, theta: float) -> float:
    """Log-probability of the observed partition under ``PYP(alpha, theta)``.

    ``profile(alpha) + lgamma(theta + 1) - lgamma(theta/alpha + 1)
    + lgamma(theta/alpha + K) - lgamma(theta + n)``.
    """
    a, t = _check_phi(alpha, theta)
    k, n = summary.k, summary.n
    return float(
        log_lik_profile(summary, a)
        + gammaln(t + 1.0)
        - gammaln(t / a + 1.0)
        + gammaln(t / a + k)
        - gammaln(t + n)
    )


def score_theta_joint(summary: SampleSummary, alpha: float, theta: float) -> float:
    """Derivative of :func:`log_lik_joint` in ``theta``."""
    a, t = _check_phi(alpha, theta)
    k, n = summary.k, summary.n
    return float(
        digamma(t + 1.0) + (digamma(t / a + k) - digamma(t / a + 1.0)) / a - digamma(t + n)
    )


def theta_hat_given_alpha(summary: SampleSummary, alpha: float) -> float:
    """Maximizer in ``theta`` of the joint likelihood at fixed ``alpha``.

    The score tends to ``+inf`` at ``-alpha`` and is negative for large
    ``theta`` when ``K < n``; its root is bracketed by expansion and found
    by Brent's method.  Golden-section on the likelihood is the fallback
    if no sign change is found.
    """
    a = _check_alpha(alpha)
    f = lambda t: score_theta_joint(summary, a, t)
    lo = -a + a * 1e-12
    try:
        return float(_expanding_root(f, lo, cap=60))
    except NumericalError:
        res = optimize.minimize_scalar(
            lambda t: -log_lik_joint(summary, a, t),
            bounds=(lo, 1e6),
            method="bounded",
            options={"xatol": PARAM_TOL, "maxiter": MAX_ITER},
        )
        if not res.success:
            raise NumericalError("inner theta maximization did not converge", best=res.x) from None
        return float(res.x)


# -- reports ----------------------------------------------------------------


@dataclass
class FitReport:
    """Fitted prior parameters and companion diagnostics.

    ``alpha_profile`` is the profile maximizer, ``observed_info`` the profile
    curvature at it, ``L_hat`` the tail-mass estimate and
    ``theta_star_hat`` the ``theta`` implied by ``(alpha_hat, L_hat)``.
    """

    alpha_hat: float
    theta_hat: float
    log_lik_at_max: float
    observed_info: float
    method: str
    L_hat: float
    theta_star_hat: float
    alpha_profile: float
    diagnostics: dict = field(default_factory=dict)
    grid: "GridPosterior | None" = None

    @property
    def gamma_hat(self) -> float:
        return self.theta_hat + self.alpha_hat

    def params(self):
        from .pyp import PypParams

        return PypParams(self.alpha_hat, self.theta_hat)


def tail_mass_from_theta(theta: float, alpha: float) -> float:
    """``L = exp(psi(theta/alpha + 1) - alpha psi(theta + 1)) / Gamma(1 - alpha)``."""
    a, t = _check_phi(alpha, theta)
    return float(math.exp(digamma(t / a + 1.0) - a * digamma(t + 1.0) - math.lgamma(1.0 - a)))


def theta_star_from_tail(L: float, alpha: float) -> float:
    """Inverse of :func:`tail_mass_from_theta` in ``theta``.

    ``theta -> psi(theta/alpha + 1) - alpha psi(theta + 1)`` increases from
    ``-inf`` to ``+inf`` on ``(-alpha, inf)``, so every ``L > 0`` has exactly
    one preimage.
    """
    a = _check_alpha(alpha)
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    target = math.log(L) + math.lgamma(1.0 - a)
    f = lambda t: target - float(digamma(t / a + 1.0) - a * digamma(t + 1.0))
    lo = -a + a * 1e-15
    if f(lo) <= 0:
        return lo
    root = _expanding_root(f, lo)
    df = lambda t: -float(trigamma(t / a + 1.0) / a - a * trigamma(t + 1.0))
    root, _ = _polish(f, df, root, -a, math.inf)
    return float(root)


def tail_functionals(summary: SampleSummary, alpha_hat: float) -> tuple[float, float]:
    """``L_hat = K / (Gamma(1 - alpha) n^alpha)`` and the matching ``theta_star``."""
    a = _check_alpha(alpha_hat)
    if summary.k < 1:
        raise ValueError("need K_n >= 1")
    log_l = math.log(summary.k) - math.lgamma(1.0 - a) - a * math.log(summary.n)
    L = math.exp(log_l)
    return L, theta_star_from_tail(L, a)


def mle_profile(summary: SampleSummary) -> FitReport:
    """Profile maximizer of ``alpha`` paired with the auxiliary ``theta``."""
    a0 = mle_alpha(summary)
    t_aux = aux_theta(summary, a0)
    L, t_star = tail_functionals(summary, a0)
    return FitReport(
        alpha_hat=a0,
        theta_hat=t_aux,
        log_lik_at_max=log_lik_joint(summary, a0, t_aux),
        observed_info=observed_info(summary, a0),
        method="profile-mle",
        L_hat=L,
        theta_star_hat=t_star,
        alpha_profile=a0,
        diagnostics={"score_at_alpha": score_profile(summary, a0)},
    )


def mle_joint(summary: SampleSummary) -> FitReport:
    """Joint maximum likelihood over ``(alpha, theta)``.

    Nested search: for each ``alpha`` the inner ``theta`` maximizer is found
    by root-finding on the score; the outer bounded search over ``alpha``
    starts from the profile maximizer and widens its window whenever the
    optimum lands on an edge.
    """
    a0 = mle_alpha(summary)
    v0 = observed_info(summary, a0)
    prof = lambda a: -log_lik_joint(summary, a, theta_hat_given_alpha(summary, a))
    half = max(0.05, 10.0 / math.sqrt(v0))
    res = None
    for _ in range(12):
        lo, hi = max(_EDGE, a0 - half), min(1.0 - _EDGE, a0 + half)
        res = optimize.minimize_scalar(
            prof, bounds=(lo, hi), method="bounded", options={"xatol": PARAM_TOL, "maxiter": MAX_ITER}
        )
        if not res.success:
            raise NumericalError("outer alpha search did not converge", best=res.x)
        near_edge = (res.x - lo < 10 * PARAM_TOL and lo > _EDGE) or (hi - res.x < 10 * PARAM_TOL and hi < 1 - _EDGE)
        if not near_edge:
            break
        half *= 2.0
    else:
        raise NumericalError("joint maximizer not bracketed in alpha", best=res.x)
    a_hat = float(res.x)
    t_hat = theta_hat_given_alpha(summary, a_hat)
    L, t_star = tail_functionals(summary, a0)
    t_aux = aux_theta(summary, a0)
    return FitReport(
        alpha_hat=a_hat,
        theta_hat=t_hat,
        log_lik_at_max=log_lik_joint(summary, a_hat, t_hat),
        observed_info=v0,
        method="joint-mle",
        L_hat=L,
        theta_star_hat=t_star,
        alpha_profile=a0,
        diagnostics={
            "alpha_gap": abs(a_hat - a0),
            "alpha_gap_rate": math.log(summary.n) / summary.n**a_hat,
            "theta_aux": t_aux,
            "theta_gap": abs(t_hat - t_aux),
            "theta_score": score_theta_joint(summary, a_hat, t_hat),
        },
    )


def flatness_band(summary: SampleSummary, alpha: float, lo: float = 0.5, hi: float = 5.0, grid: int = 200) -> float:
    """Drop of the joint log-likelihood over ``theta`` in ``[lo, hi]`` at fixed ``alpha``.

    ``max_theta l(alpha, theta) - min_{theta in [lo, hi]} l(alpha, theta)``.
    It stays bounded as ``n`` grows, which is what makes ``theta`` hard to
    learn.  The likelihood is unimodal in ``theta`` so the minimum over the
    interval sits at an endpoint; a grid guards against the exceptions.
    """
    a = _check_alpha(alpha)
    t_hat = theta_hat_given_alpha(summary, a)
    top = log_lik_joint(summary, a, t_hat)
    ts = np.linspace(lo, hi, grid)
    vals = [log_lik_joint(summary, a, t) for t in ts]
    return float(top - min(vals))


# -- priors and the hierarchical grid posterior -----------------------------


@dataclass(frozen=True)
class Prior:
    """Prior density on a scalar parameter, by name and parameters."""

    name: str
    params: tuple = ()

    def logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.name == "uniform":
            return np.where((x > 0) & (x < 1), 0.0, -np.inf)
        if self.name == "beta":
            return stats.beta.logpdf(x, *self.params)
        if self.name == "exp":
            return stats.expon.logpdf(x, scale=1.0 / self.params[0])
        if self.name == "gamma":
            shape, rate = self.params
            return stats.gamma.logpdf(x, shape, scale=1.0 / rate)
        if self.name == "flat":
            return np.where(x > 0, 0.0, -np.inf)
        raise ValueError(f"unknown prior {self.name!r}")

    def spec(self) -> str:
        return self.name + (":" + ",".join(f"{p:g}" for p in self.params) if self.params else "")


def _parse_numbers(text, count, what):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ValueError(f"bad {what} parameters {text!r}") from None
    if len(vals) != count or not all(v > 0 and math.isfinite(v) for v in vals):
        raise ValueError(f"{what} needs {count} positive parameter(s), got {text!r}")
    return vals


def parse_prior_alpha(text: str) -> Prior:
    """``uniform`` or ``beta:a,b``."""
    name, _, rest = text.strip().partition(":")
    if name == "uniform" and not rest:
        return Prior("uniform")
    if name == "beta":
        return Prior("beta", _parse_numbers(rest, 2, "beta"))
    raise ValueError(f"alpha prior must be 'uniform' or 'beta:a,b', got {text!r}")


def parse_prior_gamma(text: str) -> Prior:
    """``exp:rate``, ``gamma:shape,rate`` or ``flat``."""
    name, _, rest = text.strip().partition(":")
    if name == "flat" and not rest:
        return Prior("flat")
    if name == "exp":
        return Prior("exp", _parse_numbers(rest, 1, "exp"))
    if name == "gamma":
        return Prior("gamma", _parse_numbers(rest, 2, "gamma"))
    raise ValueError(f"gamma prior must be 'exp:rate', 'gamma:shape,rate' or 'flat', got {text!r}")


def _quantile(grid, probs, q):
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, q * cdf[-1])
    return float(grid[min(idx, grid.size - 1)])


@dataclass
class GridPosterior:
    """Posterior on a product grid of ``alpha`` and ``gamma = theta + alpha``.

    ``log_post[i, j]`` is the normalized log-mass of cell
    ``(alpha_grid[i], gamma_grid[j])``.
    """

    alpha_grid: np.ndarray
    gamma_grid: np.ndarray
    log_post: np.ndarray
    prior_alpha: Prior
    prior_gamma: Prior
    alpha_profile: float
    observed_info: float

    def alpha_marginal(self) -> np.ndarray:
        return np.exp(logsumexp(self.log_post, axis=1))

    def gamma_marginal(self) -> np.ndarray:
        return np.exp(logsumexp(self.log_post, axis=0))

    def summary(self) -> dict:
        pa, pg = self.alpha_marginal(), self.gamma_marginal()
        a, g = self.alpha_grid, self.gamma_grid
        ma, mg = float(pa @ a), float(pg @ g)
        sa = math.sqrt(max(float(pa @ (a - ma) ** 2), 0.0))
        sg = math.sqrt(max(float(pg @ (g - mg) ** 2), 0.0))
        return {
            "alpha_mean": ma,
            "alpha_sd": sa,
            "alpha_q025": _quantile(a, pa, 0.025),
            "alpha_q975": _quantile(a, pa, 0.975),
            "gamma_mean": mg,
            "gamma_sd": sg,
            "gamma_q025": _quantile(g, pg, 0.025),
            "gamma_q975": _quantile(g, pg, 0.975),
            "theta_mean": mg - ma,
            # sd of (alpha - alpha_profile) * sqrt(V); close to 1 for large n
            "alpha_sd_standardized": sa * math.sqrt(self.observed_info),
        }


def hierarchical_posterior(
    summary: SampleSummary,
    prior_alpha: Prior | None = None,
    prior_gamma: Prior | None = None,
    alpha_grid_size: int = 400,
    gamma_grid_size: int = 400,
    alpha_grid: np.ndarray | None = None,
    gamma_max: float = 20.0,
    alpha_width: float = 8.0,
) -> GridPosterior:
    """Grid posterior of ``(alpha, gamma)`` under a product prior.

    Defaults: uniform prior on ``alpha``, unit-rate exponential on
    ``gamma``.  The ``alpha`` grid is centered at the profile maximizer
    with half-width ``alpha_width`` profile standard errors (clipped to
    ``(0, 1)``); the ``gamma`` grid uses cell midpoints of ``(0, gamma_max]``.
    """
    prior_alpha = prior_alpha or Prior("uniform")
    prior_gamma = prior_gamma or Prior("exp", (1.0,))
    a0 = mle_alpha(summary)
    v0 = observed_info(summary, a0)
    if alpha_grid is None:
        half = alpha_width / math.sqrt(v0)
        lo, hi = max(1e-6, a0 - half), min(1.0 - 1e-6, a0 + half)
        alpha_grid = np.linspace(lo, hi, int(alpha_grid_size))
    alpha_grid = np.sort(np.asarray(alpha_grid, dtype=float))
    if alpha_grid[0] <= 0 or alpha_grid[-1] >= 1:
        raise ValueError("alpha grid must lie inside (0, 1)")
    gamma_grid = gamma_max * (np.arange(int(gamma_grid_size)) + 0.5) / int(gamma_grid_size)

    k, n = summary.k, summary.n
    r, m = _fp(summary)
    a = alpha_grid[:, None]
    prof = (k - 1) * np.log(alpha_grid) + (gammaln(r[None, :] - a) - gammaln(1.0 - a)) @ m
    t = gamma_grid[None, :] - a
    ta = t / a
    ll = prof[:, None] + gammaln(t + 1.0) - gammaln(ta + 1.0) + gammaln(ta + k) - gammaln(t + n)
    log_post = ll + prior_alpha.logpdf(alpha_grid)[:, None] + prior_gamma.logpdf(gamma_grid)[None, :]
    if not np.isfinite(log_post).any():
        raise NumericalError("posterior is zero on the whole grid")
    log_post = log_post - logsumexp(log_post)
    return GridPosterior(alpha_grid, gamma_grid, log_post, prior_alpha, prior_gamma, a0, v0)


def hstar_log_weight(z, L: float, alpha_star: float):
    """Unnormalized log-density of the limiting ``gamma`` posterior factor.

    ``(z/alpha) log(L Gamma(1 - alpha)) + lgamma(1 - alpha + z) - lgamma(z/alpha)``;
    it is multiplied by the ``gamma`` prior and normalized by the caller.
    """
    a = _check_alpha(alpha_star)
    if not L > 0:
        raise ValueError("L must be positive")
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("z must be positive")
    c = math.log(L) + math.lgamma(1.0 - a)
    out = (z / a) * c + gammaln(1.0 - a + z) - gammaln(z / a)
    return float(out) if out.ndim == 0 else out


def hstar_on_grid(gamma_grid, L: float, alpha_star: float, prior_gamma: Prior | None = None) -> np.ndarray:
    """Limiting ``gamma`` posterior on a grid, normalized to sum to one."""
    prior_gamma = prior_gamma or Prior("flat")
    lw = hstar_log_weight(gamma_grid, L, alpha_star) + prior_gamma.logpdf(gamma_grid)
    return np.exp(lw - logsumexp(lw))
