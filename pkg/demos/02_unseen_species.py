"""How many new species will the next m draws reveal?

Compares the exact posterior, its Monte Carlo counterpart and the
Good-Toulmin extrapolation, which breaks down once m exceeds n.
"""
import numpy as np

from speciesbnp import unseen
from speciesbnp.data import from_fingerprint
from speciesbnp.pyp import PypParams, RngStream

# A small sample: three singletons and one species seen seven times.
sample = from_fingerprint({1: 3, 7: 1})
params = PypParams(0.5, 1.0)

post = unseen.posterior_exact(params, sample, 2)
print("m = 2 exact pmf:", np.round(post.pmf, 6), "mean", round(post.mean, 6))

# A larger sample for extrapolation.
sample = from_fingerprint({1: 120, 2: 40, 3: 18, 5: 9, 12: 4, 60: 2})
print(f"\nn = {sample.n}, k = {sample.k}")
print("    m   exact mean   95% interval   MC mean     Good-Toulmin")
for m in (50, 200, 400, 1000):
    exact = unseen.posterior_exact(params, sample, m)
    lo, hi = unseen.credible_interval(exact, 0.95)
    mc = unseen.posterior_mc(params, sample, m, 100_000, RngStream(seed=3, stream=m))
    gt = unseen.good_toulmin(sample, m)
    flag = "  (m/n >= 1, unstable)" if gt.unstable else ""
    print(f"{m:5d}   {exact.mean:9.2f}   ({lo:4d}, {hi:4d})   {mc.mean:8.2f}   {float(gt):10.2f}{flag}")

# New species among the next m draws that will be seen exactly r times.
m = 400
print(f"\nm = {m}, split by order r (Monte Carlo):")
for r in (1, 2, 3):
    p = unseen.posterior_mc_order_r(params, sample, m, r, 50_000, RngStream(seed=4, stream=r))
    print(f"  r={r}: mean {p.mean:.2f}, Good-Toulmin {float(unseen.good_toulmin_order_r(sample, m, r)):.2f}")
