"""Fit (alpha, theta) to a simulated sample and see why theta is hard to learn."""
import numpy as np

from speciesbnp import fit
from speciesbnp.data import SampleSummary
from speciesbnp.pyp import PypParams, RngStream, sample_labels

truth = PypParams(0.5, 1.0)
labels = sample_labels(truth, 100_000, RngStream(seed=7))
sample = SampleSummary.from_frequencies(np.bincount(labels).tolist())
print(f"n = {sample.n}, k = {sample.k}")

prof = fit.mle_profile(sample)
se = prof.observed_info ** -0.5
print(f"profile MLE alpha = {prof.alpha_hat:.4f} +/- {se:.4f}, auxiliary theta = {prof.theta_hat:.3f}")
joint = fit.mle_joint(sample)
print(f"joint MLE alpha = {joint.alpha_hat:.4f}, theta = {joint.theta_hat:.3f}")
print(f"tail mass L = {prof.L_hat:.4f}, implied theta* = {prof.theta_star_hat:.3f}")

# The log-likelihood barely moves across a wide theta range.
band = fit.flatness_band(sample, prof.alpha_hat)
print(f"log-likelihood drop over theta in [0.5, 5]: {band:.2f} nats")

# Hierarchical Bayes: alpha is learned, gamma = theta + alpha follows the prior.
for spec in ("exp:1", "gamma:2,2", "gamma:10,2"):
    grid = fit.hierarchical_posterior(sample, prior_gamma=fit.parse_prior_gamma(spec))
    s = grid.summary()
    print(
        f"prior gamma ~ {spec:10s}: alpha {s['alpha_mean']:.4f} (sd {s['alpha_sd']:.4f}), "
        f"gamma {s['gamma_mean']:.3f} (sd {s['gamma_sd']:.3f})"
    )
