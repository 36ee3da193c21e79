"""Pressure, partition functions, periodic-orbit Gibbs measures, diagnostics.

Partition sums run over periodic words of length exactly n.  For window-
additive quasimorphisms the sums are evaluated exactly by a block transfer
matrix (states = (Q-1)-blocks), which reaches depths far beyond enumeration;
plain enumeration stays available as the generic path and as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ResourceLimit
from .measures import CylinderMeasure
from .sft import word_cap


# -- partition functions -------------------------------------------------------


def _enumerated_log_partition(L, sft, n, cap=None):
    count = sft.word_count(n)
    if count > word_cap(cap):
        raise ResourceLimit(f"|W_{n}| = {count} exceeds the word cap")
    vals = [L.value(a) for a in sft.periodic_words(n, cap=cap)]
    if not vals:
        return -np.inf
    return float(logsumexp(vals))


class _WindowTransfer:
    """Exact evaluator of Z_n = sum over wrapping words of e^{L} for window kernels."""

    def __init__(self, kernels, sft):
        self.sft = sft
        self.kernels = kernels
        self.Q = max(kernels)
        d = sft.d
        if self.Q == 1:
            k1 = kernels[1]
            self.B = sft.R.astype(float) * np.exp(k1)[:, None]
        else:
            idx = sft.cylinders(self.Q - 1)
            S = len(idx)
            T = np.zeros((S, S))
            for ci, c in enumerate(idx.words):
                for s in sft.successors[c[-1]]:
                    new = c[1:] + (s,)
                    ext = c + (s,)
                    w = 0.0
                    for q, table in kernels.items():
                        code = 0
                        for sym in ext[self.Q - q:]:
                            code = code * d + sym
                        w += table[code]
                    T[idx.index(new), ci] += np.exp(w)
            init = np.zeros(S)
            for fi, f in enumerate(idx.words):
                w = 0.0
                for q, table in kernels.items():
                    if q >= self.Q:
                        continue
                    for i in range(self.Q - 1 - q + 1):
                        code = 0
                        for sym in f[i:i + q]:
                            code = code * d + sym
                        w += table[code]
                init[fi] = np.exp(w)
            wrap = np.zeros((S, S))
            for ci, c in enumerate(idx.words):
                for fi, f in enumerate(idx.words):
                    wrap[ci, fi] = sft.R[c[-1], f[0]]
            self.T, self.init, self.wrap = T, init, wrap

    def log_partitions(self, n_max):
        """P_n = log Z_n for n = 1..n_max, with running rescaling."""
        out = np.full(n_max + 1, -np.inf)
        if self.Q == 1:
            A = np.eye(self.sft.d)
            logscale = 0.0
            for n in range(1, n_max + 1):
                A = self.B @ A
                m = A.max()
                A /= m
                logscale += np.log(m)
                tr = np.trace(A)
                if tr > 0:
                    out[n] = np.log(tr) + logscale
            return out[1:]
        base = self.Q - 1
        for n in range(1, min(base, n_max + 1)):
            # too short for the block chain; these are tiny enumerations
            out[n] = _short_word_log_partition(self.kernels, self.sft, n)
        A = np.eye(len(self.init))
        logscale = 0.0
        for t in range(0, n_max - base + 1):
            n = base + t
            if n >= 1:
                z = float((self.wrap * A * self.init[None, :]).sum())
                if z > 0:
                    out[n] = np.log(z) + logscale
            if t < n_max - base:
                A = self.T @ A
                m = A.max()
                A /= m
                logscale += np.log(m)
        return out[1:]


def _short_word_log_partition(kernels, sft, n):
    d = sft.d
    vals = []
    for a in sft.periodic_words(n):
        v = 0.0
        for q, table in kernels.items():
            if q > n:
                continue
            for i in range(n - q + 1):
                code = 0
                for sym in a[i:i + q]:
                    code = code * d + sym
                v += table[code]
        vals.append(v)
    return float(logsumexp(vals)) if vals else -np.inf


def log_partition(L, sft, n, cap=None, method="auto"):
    """log Z_n(L), the log-sum-exp of L over wrapping words of length n."""
    if n < 1:
        raise ValueError("partition function needs n >= 1")
    kernels = L.window_tables(sft.d) if method in ("auto", "transfer") else None
    if method == "transfer" and kernels is None:
        raise ValueError("quasimorphism is not window-additive")
    if kernels is not None and method in ("auto", "transfer"):
        if n < max(kernels):
            return _short_word_log_partition(kernels, sft, n)
        return float(_WindowTransfer(kernels, sft).log_partitions(n)[n - 1])
    return _enumerated_log_partition(L, sft, n, cap=cap)


def log_partition_sequence(L, sft, n_max, cap=None, method="auto"):
    kernels = L.window_tables(sft.d) if method in ("auto", "transfer") else None
    if kernels is not None:
        wt = _WindowTransfer(kernels, sft)
        out = wt.log_partitions(n_max)
        for n in range(1, min(max(kernels), n_max + 1)):
            out[n - 1] = _short_word_log_partition(kernels, sft, n)
        return out
    return np.array([_enumerated_log_partition(L, sft, n, cap=cap) for n in range(1, n_max + 1)])


def partition_function(L, sft, n, cap=None, method="auto"):
    return float(np.exp(log_partition(L, sft, n, cap=cap, method=method)))


# -- pressure -------------------------------------------------------------------


@dataclass
class PressureEstimate:
    n_max: int
    p_n: np.ndarray  # P_1 .. P_{n_max}
    c_all: float  # quasi-boundedness constant over all split pairs (empirical)
    c_used: float  # same, restricted to n,m >= n0 (the regime the bounds live in)
    n0: int
    lower: float
    upper: float
    point: float

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, x):
        return self.lower <= x <= self.upper

    def to_json(self):
        return {
            "n_max": self.n_max,
            "p_n": [float(x) for x in self.p_n],
            "c_all": self.c_all,
            "c_used": self.c_used,
            "n0": self.n0,
            "lower": self.lower,
            "upper": self.upper,
            "point": self.point,
            "width": self.width,
            "note": "empirical-C: constants are lower bounds for the true ones",
        }


def _split_constant(p, n0, n_max):
    """sup |P_{n+m} - P_n - P_m| over n,m >= n0, n+m <= n_max (finite entries)."""
    best = 0.0
    seen = False
    for n in range(n0, n_max - n0 + 1):
        for m in range(n, n_max - n + 1):
            if m < n0:
                continue
            vals = (p[n + m - 1], p[n - 1], p[m - 1])
            if not all(np.isfinite(vals)):
                continue
            best = max(best, abs(vals[0] - vals[1] - vals[2]))
            seen = True
    return best if seen else np.nan


def pressure(L, sft, n_max, cap=None, method="auto"):
    """Pressure interval from the quasi-bounded sequence (log Z_n)_n.

    The sub-multiplicativity constant is only in force once both block
    lengths clear 3M, so the certificate constant and the interval endpoints
    are restricted to that regime whenever n_max allows it; the all-pairs
    constant is reported alongside.
    """
    if n_max < 4:
        raise ValueError("pressure needs n_max >= 4")
    p = log_partition_sequence(L, sft, n_max, cap=cap, method=method)
    c_all = _split_constant(p, 1, n_max)
    n0 = 3 * sft.M if 6 * sft.M <= n_max else 1
    c_used = _split_constant(p, n0, n_max)
    if not np.isfinite(c_used):
        n0, c_used = 1, c_all
    lo, hi = -np.inf, np.inf
    for n in range(n0, n_max + 1):
        if not np.isfinite(p[n - 1]):
            continue
        lo = max(lo, (p[n - 1] - c_used) / n)
        hi = min(hi, (p[n - 1] + c_used) / n)
    return PressureEstimate(
        n_max=n_max, p_n=p, c_all=float(c_all), c_used=float(c_used), n0=n0,
        lower=float(lo), upper=float(hi), point=float(p[n_max - 1] / n_max),
    )


def pressure_oracle_memory1(L, sft):
    """Exact log of the Perron eigenvalue of R_ij e^{phi(ij)} for width <= 2 kernels."""
    kernels = L.window_tables(sft.d)
    if kernels is None or max(kernels) > 2:
        raise ValueError("oracle needs a window-additive L of width <= 2")
    d = sft.d
    B = sft.R.astype(float).copy()
    if 1 in kernels:
        B *= np.exp(kernels[1])[:, None]
    if 2 in kernels:
        B *= np.exp(kernels[2].reshape(d, d))
    return float(np.log(max(abs(np.linalg.eigvals(B)))))


# -- the periodic-orbit Gibbs measure -------------------------------------------


def gibbs_measure(L, sft, N, depth, cap=None, weighting="homogenized"):
    """Orbit-averaged Gibbs approximant at cylinder depths 1..depth.

    Every periodic word a of length N carries a normalized weight, spread
    equally over the N cyclic windows of its periodic point, which makes the
    result exactly shift-invariant at each stored depth.  The default weight
    is e^{Lbar(a)} with Lbar the homogenized (rotation-invariant)
    representative of [L]: the ensemble then does not depend on how each
    orbit is cut into a word, and it tracks the transfer-operator chain at a
    spectral rate.  weighting="raw" uses the literal e^{L(a)} instead, whose
    wrap-junction tilt decays only like depth/N.
    """
    if not (1 <= depth <= N):
        raise ValueError("need 1 <= depth <= N")
    words = sft.periodic_words(N, cap=cap)
    if not words:
        raise ValueError(f"no periodic words of length {N}")
    if weighting == "homogenized":
        vals = np.array([L.homogenized_value(a) for a in words])
    elif weighting == "raw":
        vals = np.array([L.value(a) for a in words])
    else:
        raise ValueError("weighting must be 'homogenized' or 'raw'")
    logZ = logsumexp(vals)
    weights = np.exp(vals - logZ)
    arr = np.array(words, dtype=np.int64)
    masses = {}
    for k in range(1, depth + 1):
        idx = sft.cylinders(k)
        ext = np.concatenate([arr, arr[:, : k - 1]], axis=1) if k > 1 else arr
        powers = sft.d ** np.arange(k - 1, -1, -1, dtype=np.int64)
        win = np.lib.stride_tricks.sliding_window_view(ext, k, axis=1)
        codes = win @ powers  # (num_words, N)
        flat = idx.index_of_codes(codes.ravel())
        mass = np.zeros(len(idx))
        np.add.at(mass, flat, np.repeat(weights / N, N))
        masses[k] = mass
    return CylinderMeasure(sft, masses)


@dataclass
class GibbsRatioReport:
    min_ratio: float
    max_ratio: float
    argmin: tuple
    argmax: tuple
    zero_mass: int

    @property
    def spread(self):
        return self.max_ratio / self.min_ratio


def gibbs_ratio_report(mu, L, sft, ptop, depths):
    """Extremes of mass[a] / exp(L(lift a) - n ptop) across the given depths."""
    lo, hi = np.inf, -np.inf
    arg_lo = arg_hi = ()
    dead = 0
    for k in depths:
        arr = mu.masses_at(k)
        for i, a in enumerate(sft.cylinders(k).words):
            if arr[i] <= 0.0:
                dead += 1
                continue
            ratio = arr[i] / np.exp(L.value(sft.lift(a)) - k * ptop)
            if ratio < lo:
                lo, arg_lo = ratio, a
            if ratio > hi:
                hi, arg_hi = ratio, a
    return GibbsRatioReport(float(lo), float(hi), arg_lo, arg_hi, dead)


def mixing_ratio_report(mu, a, b, k_range):
    """Ratios mu([a] n tau^{-k}[b]) / (mu([a]) mu([b])) for k in k_range."""
    sft = mu.sft
    a, b = tuple(a), tuple(b)
    pa, pb = mu.mass(a), mu.mass(b)
    rows = []
    for k in k_range:
        if pa <= 0 or pb <= 0:
            rows.append({"k": k, "joint": None, "ratio": None, "zero_mass": True})
            continue
        if k >= len(a):
            total_len = k + len(b)
            if total_len > mu.max_depth:
                raise ResourceLimit(f"depth {total_len} not stored")
            joint = 0.0
            for w in sft.cylinders(total_len).words:
                if w[: len(a)] == a and w[k:] == b:
                    joint += mu.mass(w)
        else:
            if any(a[k + i] != b[i] for i in range(len(a) - k)):
                joint = 0.0
            else:
                w = a + b[len(a) - k:]
                joint = mu.mass(w) if len(w) >= len(a) else mu.mass(a)
        rows.append({"k": k, "joint": joint, "ratio": joint / (pa * pb), "zero_mass": False})
    return rows


def weak_bernoulli_report(mu, n, gaps):
    """beta(n, N) = sum_{A,B depth-n} |mu(A n tau^{-(N+n)} B) - mu(A) mu(B)|."""
    sft = mu.sft
    m = mu.masses_at(n)
    rows = []
    for N in gaps:
        total_len = 2 * n + N
        if total_len > mu.max_depth:
            raise ResourceLimit(f"weak-Bernoulli at gap {N} needs depth {total_len}")
        idx_n = sft.cylinders(n)
        joint = np.zeros((len(idx_n), len(idx_n)))
        deep = sft.cylinders(total_len)
        arr = mu.masses_at(total_len)
        for i, w in enumerate(deep.words):
            joint[idx_n.index(w[:n]), idx_n.index(w[n + N:])] += arr[i]
        beta = float(np.abs(joint - np.outer(m, m)).sum())
        rows.append({"gap": N, "beta": beta})
    return rows


# -- entropy and integrals -------------------------------------------------------


def _plogp(arr):
    out = np.zeros_like(arr)
    mask = arr > 0
    out[mask] = arr[mask] * np.log(arr[mask])
    return out


@dataclass
class EntropyReport:
    depths: list
    block_entropy: list  # H(depth)
    rates: list  # H(depth)/depth
    conditional: list  # H(depth) - H(depth-1)
    h_extrapolated: float

    def to_json(self):
        return {
            "depths": self.depths,
            "block_entropy": self.block_entropy,
            "rates": self.rates,
            "conditional": self.conditional,
            "h_extrapolated": self.h_extrapolated,
        }


def entropy_report(mu, n_max=None):
    """Block entropies H_mu(depth-n partition), their rates, and the
    conditional-entropy extrapolation of h_mu."""
    depths = [k for k in mu.depths() if n_max is None or k <= n_max]
    H = [float(-_plogp(mu.masses_at(k)).sum()) for k in depths]
    rates = [h / k for h, k in zip(H, depths)]
    cond = []
    for i, k in enumerate(depths):
        prev = H[i - 1] if i > 0 and depths[i - 1] == k - 1 else (0.0 if k == 1 else None)
        cond.append(None if prev is None else H[i] - prev)
    usable = [c for c in cond if c is not None]
    return EntropyReport(depths, H, rates, cond, usable[-1] if usable else rates[-1])


def qm_integral(mu, L, n):
    """(1/n) sum_a mu([a]) L(a) over depth-n cylinders."""
    idx = mu.sft.cylinders(n)
    arr = mu.masses_at(n)
    return float(sum(m * L.value(w) for m, w in zip(arr, idx.words)) / n)


def qm_integral_series(mu, L, n_list):
    return [{"n": n, "value": qm_integral(mu, L, n)} for n in n_list]


def window_expectation(masses_lookup, L, sft):
    """Exact per-window mean of a window-additive L: the limit of qm_integral."""
    kernels = L.window_tables(sft.d)
    if kernels is None:
        raise ValueError("window_expectation needs a window-additive L")
    total = 0.0
    for q, table in kernels.items():
        idx = sft.cylinders(q)
        total += float(np.dot(masses_lookup(q), table[idx.codes]))
    return total


# -- variational principle --------------------------------------------------------


def variational_check(L, sft, candidates, ptop, integral_depth=None):
    """Metric pressures h + mu(L) of candidate measures against a pressure value.

    Candidates are (name, measure) pairs; a measure is either a MarkovMeasure
    (exact entropy and integral) or a CylinderMeasure (finite-depth numbers).
    """
    rows = []
    additive = L.window_tables(sft.d) is not None
    for name, mu in candidates:
        if hasattr(mu, "entropy_exact"):
            h = mu.entropy_exact()
            if additive:
                integ = window_expectation(lambda q: mu.cylinder_masses(q), L, sft)
            else:
                depth = integral_depth or 8
                integ = qm_integral(mu.cylinder_measure(depth), L, depth)
        else:
            h = entropy_report(mu).h_extrapolated
            if additive:
                integ = window_expectation(lambda q: mu.masses_at(q), L, sft)
            else:
                depth = integral_depth or mu.max_depth
                integ = qm_integral(mu, L, depth)
        rows.append({
            "name": name,
            "entropy": float(h),
            "integral": float(integ),
            "metric_pressure": float(h + integ),
            "shortfall": float(ptop - (h + integ)),
        })
    return rows
