#!/usr/bin/env python3
# Weak Bowen potentials: extraction from a measure via martingale ratios,
# Birkhoff-sum comparison with the quasimorphism, the Komlós construction,
# and the Cesàro coboundary solver.

import numpy as np

from thermoqm import (
    LocallyConstantFn,
    PatternCount,
    birkhoff_check,
    bowen_norm_estimate,
    coboundary_solve,
    komlos_potential,
    komlos_zeta,
    parry_measure,
    potential_from_measure,
)
from thermoqm.markov import gibbs_chain_from_qm
from thermoqm.sft import full_shift, golden_mean

g = golden_mean()
f = full_shift(2)

# phi^k = log mu([x]_k)/mu([tau x]_{k-1}): the finite-depth potential of a
# measure.  For the golden-mean Parry chain the depth-2 table is the log of
# the backward transition ratios, and prepend-normalization holds exactly.
phi = potential_from_measure(parry_measure(g), 2)
idx = g.cylinders(2)
print("phi^2 table:", {"".join(str(s + 1) for s in w): round(float(v), 6)
                       for w, v in zip(idx.words, phi.tables[2])})
print("normalization defect:", phi.normalization_defect())

# Birkhoff sums of the potential track the quasimorphism up to a uniform
# constant: |S_n phi + n P - L(lift x_(n))| stays bounded in n.
c01 = PatternCount((0, 1))
chain, _, loglam = gibbs_chain_from_qm(c01, f)
phi01 = potential_from_measure(chain, 3)
for n in (5, 10, 20):
    rep = birkhoff_check(phi01, c01, f, loglam, n, f.periodic_words(6))
    print(f"birkhoff residual at n={n}: {rep.max_residual:.4f}")
print("Bowen-constant estimate of phi01:", bowen_norm_estimate(phi01, 5))

# The Komlós averages of zeta_n recover a per-step potential from L alone:
# for count-12 every zeta_n is already the indicator of the cylinder [12].
par = parry_measure(f)
z = komlos_zeta(c01, f, 6)
print("\nzeta_6 values on depth-2 windows:",
      sorted({(w[:2], round(z.value(w), 6)) for w in f.cylinders(7).words}))
res = komlos_potential(c01, par, [2, 4, 6, 8], depth=2)
print("Komlós potential (depth 2):", res.table.values, "converged:", res.converged)

# Cesàro solver: u_N = (1/N) sum S_k phi solves u - u o tau = phi for honest
# coboundaries (residual ~ 1/N, evaluated in closed form even at N = 4e8);
# for a non-coboundary the residual refuses to vanish.
gfn = LocallyConstantFn(f, 2, np.array([0.3, -0.2, 0.7, 0.1]))
cob = gfn - gfn.shift()
sol = coboundary_solve(cob, par, N=4 * 10 ** 8, depth=4)
print(f"\ncoboundary: residual {sol.residual:.2e} (vanishing={sol.vanishing})")
bad = LocallyConstantFn(f, 1, np.array([0.5, -0.5]))
sol2 = coboundary_solve(bad, par, N=10 ** 7, depth=5)
print(f"centered indicator: residual {sol2.residual:.3f} (vanishing={sol2.vanishing})"
      " -- sigma^2 = 1/4 > 0, not a coboundary")
