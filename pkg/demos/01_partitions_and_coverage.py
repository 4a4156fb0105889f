"""Draw a sample from a Pitman-Yor prior and estimate coverage probabilities.

Run with ``python3 demos/01_partitions_and_coverage.py``.
"""
import numpy as np

from speciesbnp import coverage
from speciesbnp.data import SampleSummary
from speciesbnp.pyp import PypParams, RngStream, k_n_log_pmf_vector, sample_labels

params = PypParams(alpha=0.5, theta=1.0)

# Sequential urn: each draw joins an old species or founds a new one.
labels = sample_labels(params, 2000, RngStream(seed=1))
sample = SampleSummary.from_frequencies(np.bincount(labels).tolist())
print(f"n = {sample.n}, k = {sample.k}")
print("first fingerprint entries:", dict(list(sample.fingerprint.items())[:6]))

# The number of species K_n has a closed-form law; compare its mean with the draw.
kpmf = np.exp(k_n_log_pmf_vector(params, sample.n))
print(f"E[K_n] = {np.arange(kpmf.size) @ kpmf:.1f}")

# Posterior mass of species seen r times versus the Good-Turing estimate.
print("\n r   Bayes   95% interval        Good-Turing")
for r in range(4):
    post = coverage.posterior(params, sample, r)
    lo, hi = coverage.credible_interval(post, 0.95)
    gt = coverage.good_turing(sample, r)
    print(f"{r:2d}  {post.mean:.4f}  ({lo:.4f}, {hi:.4f})   {gt:.4f}")

# For alpha > 0 the two agree asymptotically through smoothed counts.
for r in range(3):
    g = coverage.smoothed_gap(params, sample, r)
    print(f"r={r}: smoothed {g['smoothed']:.4f} vs posterior mean {g['bnp']:.4f}")
