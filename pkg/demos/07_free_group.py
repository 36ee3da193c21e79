#!/usr/bin/env python3
# The free-group instantiation: reduced and cyclic words over the
# no-cancellation subshift, Brooks counting quasimorphisms, the conjugacy
# class compactification, and the spherical CLT.

import numpy as np

from thermoqm import FreeGroup, boundary_ray_clt, brooks, compactification_experiment, spherical_clt
from thermoqm.freegroup import pushforward_measure, sphere_sample

G = FreeGroup(2)
sft = G.sft()
print(sft, "alphabet a, b, A, B with A = a^-1")

# Reduction and cyclic reduction.
for text in ("aAb", "abA", "abBA"):
    print(f"reduce({text}) = {G.render(G.reduce(G.parse(text)))!r},"
          f" cyclic = {G.render(G.cyclic_reduce(G.parse(text)))!r}")

# Brooks quasimorphism h_ab = occ(ab) - occ(BA): antisymmetric, defect <= 2.
h = brooks(G, "ab")
w = G.parse("ababab")
print(f"\nh_ab((ab)^3) = {h.value(w)}, h_ab(inverse) = {h.value(G.inverse_word(w))}")

# Uniform measures on cyclic words of length <= n push forward to cylinder
# masses that converge to the Parry chain of the subshift (TV at depth 3).
res = compactification_experiment(G, [8, 12, 16, 18], 3)
for row in res.rows:
    print(f"n <= {row['n']:2d}: {row['cyclic_words']:>12d} cyclic words,"
          f" TV to Parry = {row['tv']:.2e}")
print("depth-3 pushforward masses at n=8 (first four):",
      pushforward_measure(G, 8, 3).masses_at(3)[:4])

# Spheres: exact uniform sampling of reduced words; the prefix law is the
# Parry chain, whose transfer-operator variance normalizes the CLT.
samples = sphere_sample(G, 6, 5, seed=11)
print("\nfive uniform sphere samples of radius 6:",
      [G.render(tuple(int(x) for x in s)) for s in samples])
sp = spherical_clt(G, "ab", n=4000, count=20000, seed=12)
print(f"spherical CLT for h_ab: KS = {sp.ks:.4f}, mean = {sp.mean_stat:.4f},"
      f" sigma^2 = {sp.sigma2:.4f}")
ray = boundary_ray_clt(G, "ab", n=4000, count=20000, seed=13)
print(f"boundary-ray CLT: KS = {ray.ks:.4f} (same law up to sampling bands)")
