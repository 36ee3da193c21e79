#!/usr/bin/env python3
# Quasimorphisms on words: defect, homogenization, and the periodic-orbit
# decision procedure for cohomology.

from thermoqm import (
    LetterWeights,
    LinearCombinationQm,
    PatternCount,
    cohomologous,
    cyclic_average,
    defect,
    homogenize,
    qm_of_quasicocycle,
    quasicocycle_of,
)
from thermoqm.sft import full_shift, render_word

f = full_shift(2)
c01 = PatternCount((0, 1))   # L(a) = overlapping occurrences of "12"
c10 = PatternCount((1, 0))
hom = LetterWeights([0.5, -0.5])

# The defect |L(ab) - L(a) - L(b)| comes from occurrences crossing the
# junction, so it is at most |pattern| - 1; homomorphisms have defect 0.
print("empirical defect of count-12 up to length 8:", defect(c01, f, 8).value)
print("empirical defect of letter weights:", defect(hom, f, 8).value)

# Homogenization L(a^m)/m converges with certified error defect/m; for
# pattern counts the limit is the cyclic occurrence count per period.
iv = homogenize(c01, (0, 1), m=50)
print(f"\nhomogenization of count-12 on '12': [{iv.lo:.3f}, {iv.hi:.3f}]")
print("cyclic average on '1122':", cyclic_average(c01, (0, 0, 1, 1)))

# Quasicocycles are the per-depth cylinder tables B_n = L; they round-trip.
B = quasicocycle_of(c01, f, 6)
back = qm_of_quasicocycle(B)
print("\nquasicocycle round-trip exact:",
      all(back.value(w) == c01.value(w) for w in f.words(5)))
print("additivity defect of the tables:", B.delta_estimate())

# Cohomology is decided on periodic orbits: counts of "12" and "21" agree on
# every cyclic binary word, so the two are cohomologous; L vs 2L splits at
# the first periodic word with a nonzero homogenization.
v = cohomologous(c01, c10, f, n_max=10)
print(f"\ncount-12 vs count-21: {v.verdict} (certificate depth {v.certificate_depth})")
v2 = cohomologous(c01, LinearCombinationQm([(2.0, c01)]), f, n_max=8)
print(f"L vs 2L: {v2.verdict}, witness {render_word(v2.witness)}")
