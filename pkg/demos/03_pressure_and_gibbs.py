#!/usr/bin/env python3
# Topological pressure from periodic partition sums, the periodic-orbit Gibbs
# measure, and the variational principle.

import numpy as np

from thermoqm import (
    PatternCount,
    bernoulli_measure,
    entropy_report,
    gibbs_measure,
    gibbs_ratio_report,
    mixing_ratio_report,
    parry_measure,
    pressure,
    pressure_oracle_memory1,
    variational_check,
    weak_bernoulli_report,
    zero_qm,
)
from thermoqm.markov import gibbs_chain_from_qm
from thermoqm.sft import full_shift, golden_mean

g = golden_mean()
f = full_shift(2)
c01 = PatternCount((0, 1))

# P_n = log Z_n is quasi-bounded, so P_n/n brackets the pressure with an
# explicit empirical constant; memory-1 potentials have an eigenvalue oracle.
pe = pressure(zero_qm(2), g, 18)
print(f"golden mean, L = 0: pressure in [{pe.lower:.6f}, {pe.upper:.6f}]")
print("  log golden ratio =", np.log((1 + np.sqrt(5)) / 2))
pe2 = pressure(c01, f, 24)
print(f"count-12 on the 2-shift: [{pe2.lower:.6f}, {pe2.upper:.6f}]")
print("  eigenvalue oracle log(1+sqrt(e)) =", pressure_oracle_memory1(c01, f))

# The Gibbs approximant spreads each periodic word's weight over its orbit
# windows; it is exactly shift-invariant and tracks the exact chain.
mu = gibbs_measure(c01, f, N=14, depth=6)
chain, _, _ = gibbs_chain_from_qm(c01, f)
print("\nGibbs approximant invariance defect:", mu.invariance_defect())
print("TV to the exact memory-1 chain at depth 6:",
      mu.tv_distance(chain.cylinder_measure(6), 6))

# Gibbs ratios mass/e^{L(lift) - n P} stay in a uniform band (here golden
# mean with L = 0 against the Parry measure).
par = parry_measure(g)
rep = gibbs_ratio_report(par.cylinder_measure(8), zero_qm(2), g,
                         np.log((1 + np.sqrt(5)) / 2), range(1, 9))
print(f"\nParry Gibbs ratios across depths 1..8: [{rep.min_ratio:.4f}, {rep.max_ratio:.4f}]")

# Mixing: mu([1] n tau^-k [1]) / mu([1])^2 -> 1 geometrically.
rows = mixing_ratio_report(par.cylinder_measure(10), (0,), (0,), range(1, 7))
print("mixing ratios:", [round(r["ratio"], 5) for r in rows])

# The weak-Bernoulli statistic beta(n, N) decays in the gap N.
wb = weak_bernoulli_report(par.cylinder_measure(11), 2, [0, 2, 4])
print("weak-Bernoulli beta(2, N):", [(r["gap"], round(r["beta"], 6)) for r in wb])

# Entropy and the variational principle: the Gibbs chain attains the
# pressure; a mismatched Bernoulli measure falls short by its KL divergence.
print("\nblock entropy rates (Parry):",
      [round(r, 6) for r in entropy_report(par.cylinder_measure(8)).rates])
rows = variational_check(
    zero_qm(2), f,
    [("parry", parry_measure(f)), ("bernoulli(0.3)", bernoulli_measure(f, [0.3, 0.7], range(1, 8)))],
    np.log(2),
)
for r in rows:
    print(f"  {r['name']}: h + integral = {r['metric_pressure']:.6f} "
          f"(shortfall {r['shortfall']:.6f})")
print("  KL(0.3||0.5) =", 0.3 * np.log(0.6) + 0.7 * np.log(1.4))
