"""Of the species seen r times so far, how many reappear in m more draws?"""
import numpy as np

from speciesbnp import prevalence
from speciesbnp.data import from_fingerprint
from speciesbnp.pyp import PypParams, RngStream

params = PypParams(0.5, 1.0)
sample = from_fingerprint({1: 3, 7: 1})
post = prevalence.posterior_exact(params, sample, 2, 1)
print("singletons re-observed in 2 draws:", np.round(post.pmf, 6), "mean", round(post.mean, 6))

sample = from_fingerprint({1: 30, 2: 12, 3: 6, 8: 3, 40: 1})
print(f"\nn = {sample.n}; m_1 = {sample.m(1)}, m_2 = {sample.m(2)}")
print("  r    m   exact   compound MC   forward MC   binomial approx   Thisted-Efron")
for r in (1, 2):
    for m in (20, 100):
        exact = prevalence.posterior_exact(params, sample, m, r)
        fwd = prevalence.posterior_mc(params, sample, m, r, 100_000, RngStream(5, m), path="forward")
        try:
            comp = prevalence.posterior_mc(params, sample, m, r, 100_000, RngStream(6, m), path="compound")
            comp_mean = f"{comp.mean:11.3f}"
        except ValueError:
            # the compound weights are signed when r - alpha > 1
            comp_mean = "        n/a"
        approx = prevalence.posterior_binomial_approx(params, sample, m, r)
        te = prevalence.thisted_efron(sample, m, r)
        print(f"  {r}  {m:4d}  {exact.mean:6.3f}   {comp_mean}   {fwd.mean:10.3f}   {approx.mean:15.3f}   {float(te):13.3f}")
