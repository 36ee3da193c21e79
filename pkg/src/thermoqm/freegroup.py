"""Free-group instantiation: the no-cancellation subshift, reduced and cyclic
words, Brooks counting quasimorphisms, the conjugacy-class compactification,
and spherical / boundary-ray CLT experiments.

Letters of the rank-r free group are encoded as 0..2r-1 with generator g at
index 2g and its inverse at 2g+1, so inversion is XOR with 1.  Rendered
names: a, b, c, ... for generators, A, B, C, ... for inverses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimit
from .markov import parry_measure
from .measures import CylinderMeasure
from .qm import LetterWeights, SignedPatternCount
from .sft import Sft, word_cap
from .experiments import (
    _run_blocks,
    dkw_band,
    ks_distance,
    path_functional_payload,
    sigma2_of,
    standard_normal_cdf,
    trial_rng,
    uniform_sphere_payload,
)


class FreeGroup:
    def __init__(self, rank):
        if rank < 2:
            raise ValueError("the no-cancellation subshift needs rank >= 2")
        self.rank = rank
        self.d = 2 * rank
        self._sft = None

    def inverse(self, letter):
        return letter ^ 1

    def inverse_word(self, word):
        return tuple(x ^ 1 for x in reversed(tuple(word)))

    def sft(self):
        if self._sft is None:
            d = self.d
            R = np.ones((d, d), dtype=int)
            for i in range(d):
                R[i, i ^ 1] = 0
            self._sft = Sft(R, name=f"free_group({self.rank})")
        return self._sft

    def render(self, word):
        return "".join(
            chr((ord("A") if x & 1 else ord("a")) + (x >> 1)) for x in word
        )

    def parse(self, text):
        out = []
        for ch in text:
            if "a" <= ch <= "z":
                g = ord(ch) - ord("a")
                out.append(2 * g)
            elif "A" <= ch <= "Z":
                g = ord(ch) - ord("A")
                out.append(2 * g + 1)
            else:
                raise ValueError(f"bad letter {ch!r}")
            if out[-1] >= self.d:
                raise ValueError(f"letter {ch!r} outside rank {self.rank}")
        return tuple(out)

    def reduce(self, word):
        """Free reduction: delete adjacent x x^{-1} pairs until none remain."""
        out = []
        for x in word:
            if out and out[-1] == (x ^ 1):
                out.pop()
            else:
                out.append(x)
        return tuple(out)

    def cyclic_reduce(self, word):
        w = list(self.reduce(word))
        while len(w) >= 2 and w[0] == (w[-1] ^ 1):
            w = w[1:-1]
        return tuple(w)

    def is_reduced(self, word):
        return all(b != (a ^ 1) for a, b in zip(word, word[1:]))

    def sphere_size(self, n):
        return self.d * (self.d - 1) ** (n - 1) if n >= 1 else 1


def brooks(group, pattern):
    """Brooks quasimorphism h_w = occ(w, .) - occ(w^{-1}, .) on reduced words."""
    pattern = group.parse(pattern) if isinstance(pattern, str) else tuple(pattern)
    if not pattern:
        raise ValueError("pattern must be nonempty")
    if not group.is_reduced(pattern):
        raise ValueError("pattern must be a reduced word")
    if len(pattern) == 1:
        weights = np.zeros(group.d)
        weights[pattern[0]] = 1.0
        weights[pattern[0] ^ 1] = -1.0
        return LetterWeights(weights)
    return SignedPatternCount(pattern, group.inverse_word(pattern))


# -- conjugacy-class compactification ---------------------------------------------


@dataclass
class CompactificationResult:
    depth: int
    rows: list  # per n: {"n", "tv", "words"}
    monotone: bool

    def summary(self):
        return {"depth": self.depth, "rows": self.rows, "monotone": self.monotone}


def _pushforward_masses(group, n, depth):
    """Exact depth-k masses of the uniform measure on cyclic words of length <= n.

    Each cyclic word of length l spreads mass 1/(#B_n l) over its l windows;
    summing windows over all of Fix_l equals counting, per starting cylinder,
    closed walks through the cylinder -- so matrix powers replace enumeration.
    """
    sft = group.sft()
    idx = sft.cylinders(depth)
    counts = [0] * len(idx)
    total = 0
    for ell in range(1, n + 1):
        total += sft.periodic_count(ell)
        if ell >= depth:
            P = sft._R_intpow(ell - depth + 1)
            for i, w in enumerate(idx.words):
                counts[i] += P[w[-1]][w[0]]
        else:
            for i, w in enumerate(idx.words):
                if all(w[j] == w[j % ell] for j in range(depth)):
                    counts[i] += 1
    return np.array([c / total for c in counts]), total


def pushforward_measure(group, n, depth):
    masses, _ = _pushforward_masses(group, n, depth)
    return CylinderMeasure(group.sft(), {depth: masses}, check=True)


def pushforward_measure_enumerated(group, n, depth, cap=None):
    """Brute-force oracle for the pushforward, for small n only."""
    sft = group.sft()
    total = sum(sft.periodic_count(ell) for ell in range(1, n + 1))
    if total > word_cap(cap):
        raise ResourceLimit(f"{total} cyclic words exceed the word cap")
    idx = sft.cylinders(depth)
    mass = np.zeros(len(idx))
    for ell in range(1, n + 1):
        for b in sft.periodic_words(ell):
            for j in range(ell):
                mass[idx.index(sft.cyclic_window(b, j, depth))] += 1.0 / (total * ell)
    return CylinderMeasure(sft, {depth: mass})


def compactification_experiment(group, n_list, depth):
    """TV distance between the cyclic-word pushforwards and the Parry chain."""
    sft = group.sft()
    parry = parry_measure(sft).cylinder_masses(depth)
    rows = []
    for n in sorted(set(int(n) for n in n_list)):
        masses, total = _pushforward_masses(group, n, depth)
        tv = 0.5 * float(np.abs(masses - parry).sum())
        rows.append({"n": n, "tv": tv, "cyclic_words": total})
    monotone = all(rows[i + 1]["tv"] < rows[i]["tv"] for i in range(len(rows) - 1))
    return CompactificationResult(depth, rows, monotone)


# -- sphere sampling and the spherical CLT ----------------------------------------


def sphere_sample(group, n, count, seed, max_cells=10**8):
    """Uniform samples from the radius-n sphere, as a (count, n) letter array."""
    if n < 1 or count < 1:
        raise ValueError("need n >= 1 and count >= 1")
    if count * n > max_cells:
        raise ResourceLimit("sample array would be too large; use spherical_clt")
    d = group.d
    succ = np.zeros((d, d - 1), dtype=np.int8)
    for x in range(d):
        succ[x] = [y for y in range(d) if y != (x ^ 1)]
    out = np.empty((count, n), dtype=np.int8)
    for t in range(count):
        g = trial_rng(seed, t)
        first = int(g.integers(0, d))
        out[t, 0] = first
        if n > 1:
            choices = g.integers(0, d - 1, size=n - 1)
            cur = first
            for k in range(1, n):
                cur = succ[cur, choices[k - 1]]
                out[t, k] = cur
    return out


def sphere_enumerate(group, n):
    """All reduced words of length n (oracle for small n)."""
    d = group.d
    words = [(x,) for x in range(d)]
    for _ in range(n - 1):
        words = [w + (y,) for w in words for y in range(d) if y != (w[-1] ^ 1)]
    return words


@dataclass
class SphericalCltResult:
    stats: np.ndarray
    ks: float
    dkw: float
    mean_stat: float
    mean_se: float
    sigma2: float
    sphere_size: int
    n: int
    count: int
    seed: int

    def summary(self):
        import math

        return {
            "ks": self.ks,
            "dkw_99": self.dkw,
            "mean_stat": self.mean_stat,
            "mean_se": self.mean_se,
            "sigma2": self.sigma2,
            "sphere_size_log10": math.log10(self.sphere_size),
            "n": self.n,
            "count": self.count,
            "seed": self.seed,
        }


def _spherical_stats(group, L, n, count, seed, workers, block, payload_kind, sigma2):
    sft = group.sft()
    mm = parry_measure(sft)
    if sigma2 is None:
        var = sigma2_of(L, mm)
        sigma2 = var.sigma2_martingale
    base, e = path_functional_payload(L, mm)
    if payload_kind == "sphere":
        payload = uniform_sphere_payload(group.d, [x ^ 1 for x in range(group.d)])
        payload.update(
            kernel_widths=base["kernel_widths"],
            kernel_tables=base["kernel_tables"],
            e=e,
        )
    else:
        payload = base
    payload.update(n=n, seed=seed, checkpoints=(), want_max=False)
    res = _run_blocks(payload, count, workers, block)
    stats = res["final"] / np.sqrt(sigma2 * n)
    return stats, float(sigma2)


def spherical_clt(group, pattern, n, count, seed, workers=1, block=2048, sigma2=None):
    """Law of L(g)/(sigma sqrt n) over uniform sphere samples vs the normal.

    The uniform-sphere prefix process coincides with the Parry chain of the
    no-cancellation subshift (uniform first letter, uniform non-backtracking
    steps), which is where sigma^2 comes from.
    """
    L = brooks(group, pattern) if not hasattr(pattern, "value") else pattern
    stats, sigma2 = _spherical_stats(group, L, n, count, seed, workers, block, "sphere", sigma2)
    ks = ks_distance(stats, standard_normal_cdf)
    mean = float(stats.mean())
    se = float(stats.std(ddof=1) / np.sqrt(len(stats)))
    return SphericalCltResult(
        stats, ks, dkw_band(count), mean, se, sigma2, group.sphere_size(n), n, count, seed
    )


def boundary_ray_clt(group, pattern, n, count, seed, workers=1, block=2048, sigma2=None):
    """Same statistic along boundary rays started at the identity.

    For a free group with its standard generators the Patterson-Sullivan lift
    is exactly the Parry chain, so rays are sampled from that chain; the law
    agrees with spherical sampling up to the sampling bands.
    """
    L = brooks(group, pattern) if not hasattr(pattern, "value") else pattern
    stats, sigma2 = _spherical_stats(group, L, n, count, seed, workers, block, "markov", sigma2)
    ks = ks_distance(stats, standard_normal_cdf)
    mean = float(stats.mean())
    se = float(stats.std(ddof=1) / np.sqrt(len(stats)))
    return SphericalCltResult(
        stats, ks, dkw_band(count), mean, se, sigma2, group.sphere_size(n), n, count, seed
    )
