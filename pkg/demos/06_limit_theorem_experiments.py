#!/usr/bin/env python3
# Monte Carlo validation of the limit theorems: CLT, Donsker invariance
# principle, law of the iterated logarithm, and large deviations.  Seeds are
# explicit and every run is bit-reproducible.

import numpy as np

from thermoqm import (
    LetterWeights,
    PatternCount,
    clt_experiment,
    deviation_experiment,
    invariance_experiment,
    lil_experiment,
    parry_measure,
    sample_path,
)
from thermoqm.experiments import bernoulli_rate
from thermoqm.sft import full_shift

f = full_shift(2)
par = parry_measure(f)
iid = LetterWeights([0.5, -0.5])
c01 = PatternCount((0, 1))

# Paths are sampled from per-trial counter-based streams.
p1 = sample_path(par, 10, seed=7)
p2 = sample_path(par, 10, seed=7)
print("path reproducibility:", (p1 == p2).all(), p1)

# CLT: the normalized sums match the standard normal within the DKW band.
res = clt_experiment(c01, par, n=4000, trials=10000, seed=1)
print(f"\nCLT for count-12: KS = {res.ks:.4f} (DKW band {res.dkw:.4f}),"
      f" sigma^2 = {res.sigma2}")

# Invariance principle: independent dyadic increments and the reflection law
# of the running maximum.
inv = invariance_experiment(iid, par, n=2048, trials=6000, seed=2)
print(f"invariance: max |increment corr| = {inv.max_abs_corr:.4f},"
      f" sup-statistic KS vs reflection = {inv.ks_sup:.4f}")

# LIL: the running statistic S_n / sqrt(2 n sigma^2 loglog(n sigma^2)) along
# one long orbit stays near 1.
lil = lil_experiment(iid, par, n_max=10 ** 6, seed=21)
print(f"LIL sup statistic over [1e3, 1e6]: {lil.sup_stat:.3f} at n = {lil.argmax_n}")

# Large deviations: the tail P(S_n/n >= 0.2) decays at the Cramér rate.
dev = deviation_experiment(iid, par, [40, 60, 80, 100], trials=200000, delta=0.2, seed=4)
print(f"deviations: fitted rate {-dev.slope:.4f} vs Cramér {bernoulli_rate(0.2):.4f};"
      f" Gaussian-scale exponent {dev.gauss_slope:.2f}")
