"""Weak Bowen potentials and Livšic-type decision procedures.

Almost-everywhere objects are represented by finite-depth cylinder tables
plus a fully supported reference measure; every "a.e." statement becomes an
exact statement at the stored depth.  The Cesàro coboundary solver evaluates
the averages u_N = (1/N) sum_k S_k(phi) in closed form through the depth-D
conditional transition operator, so N can be astronomically large.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DepthExceeded, MeanNotZero, NonConvergence, ZeroMass
from .markov import LocallyConstantFn, cyclic_birkhoff_average, project_conditional
from .measures import CylinderMeasure
from .qm import Quasicocycle, homogenize


def _mass_fn(mu):
    """Uniform access to cylinder masses for CylinderMeasure / MarkovMeasure."""
    if isinstance(mu, CylinderMeasure):
        return mu.mass, mu.max_depth
    if hasattr(mu, "cylinder_masses"):
        return mu.mass, None  # Markov chains evaluate any depth
    raise TypeError(f"unsupported reference measure {type(mu)!r}")


class WeakBowenFn:
    """Finite-depth tables phi^k on k-cylinders, deepest table wins."""

    def __init__(self, sft, tables, reference=None):
        self.sft = sft
        self.tables = {int(k): np.asarray(v, dtype=float) for k, v in tables.items()}
        self.reference = reference
        self.k_max = max(self.tables)

    def depth_value(self, k, word):
        if k not in self.tables:
            raise DepthExceeded(f"no table at depth {k}")
        return float(self.tables[k][self.sft.cylinders(k).index(tuple(word)[:k])])

    def value(self, word):
        word = tuple(word)
        k = min(self.k_max, len(word))
        while k not in self.tables:
            k -= 1
            if k == 0:
                raise DepthExceeded("word shorter than every stored depth")
        return self.depth_value(k, word)

    def as_lc(self, k=None):
        k = self.k_max if k is None else k
        return LocallyConstantFn(self.sft, k, self.tables[k])

    def birkhoff_periodic(self, word, n, depth=None):
        """Exact S_n(phi) along the periodic point of `word`."""
        k = self.k_max if depth is None else depth
        return sum(
            self.depth_value(k, self.sft.cyclic_window(word, l, k)) for l in range(n)
        )

    def normalization_defect(self, k=None):
        """max over (k-1)-words w of |sum_s e^{phi^k(s.w)} - 1|."""
        k = self.k_max if k is None else k
        sft = self.sft
        worst = 0.0
        idx = sft.cylinders(k)
        for w in (sft.cylinders(k - 1).words if k > 1 else [()]):
            first = w[0] if w else None
            tot = 0.0
            for s in (sft.predecessors[first] if first is not None else range(sft.d)):
                sw = (s,) + w
                if sw in idx:
                    tot += np.exp(self.tables[k][idx.index(sw)])
            worst = max(worst, abs(tot - 1.0))
        return float(worst)


def potential_from_measure(mu, k):
    """phi^j(x) = log mu([x]_j) / mu([tau x]_{j-1}) tabulated for j = 1..k."""
    mass, max_depth = _mass_fn(mu)
    if max_depth is not None and k > max_depth:
        raise DepthExceeded(f"measure stores depth {max_depth} < {k}")
    sft = mu.sft
    tables = {}
    for j in range(1, k + 1):
        idx = sft.cylinders(j)
        vals = np.empty(len(idx))
        for i, w in enumerate(idx.words):
            num = mass(w)
            den = mass(w[1:]) if j > 1 else 1.0
            if num <= 0.0 or den <= 0.0:
                raise ZeroMass(f"cylinder {w} violates full support")
            vals[i] = np.log(num / den)
        tables[j] = vals
    return WeakBowenFn(sft, tables, reference=mu)


@dataclass
class BirkhoffReport:
    max_residual: float
    argmax: tuple
    bound: float | None
    n: int
    sample_size: int


def birkhoff_check(phi, L, sft, ptop, n, sample, bound=None):
    """Compare S_n(phi) + n ptop against L on lifted n-windows of periodic points."""
    worst, arg = -np.inf, ()
    for a in sample:
        sn = phi.birkhoff_periodic(a, n)
        window = tuple(sft.cyclic_window(a, 0, n))
        res = abs(sn + n * ptop - L.value(sft.lift(window)))
        if res > worst:
            worst, arg = res, a
    return BirkhoffReport(float(worst), arg, bound, n, len(sample))


def bowen_norm_estimate(phi, n_max):
    """Lower bound for ||phi||_B: spread of S_n(phi) over periodic points that
    share their first n symbols, n <= n_max."""
    sft = phi.sft
    best = 0.0
    for n in range(1, n_max + 1):
        for w in sft.words(n):
            vals = []
            for ell in range(0, sft.M + 1):
                for u in sft.words(ell) if ell else [()]:
                    cand = w + u
                    if sft.is_word(cand) and sft.wraps(cand):
                        vals.append(phi.birkhoff_periodic(cand, n))
            if len(vals) > 1:
                best = max(best, max(vals) - min(vals))
    return float(best)


def quasicocycle_from_potential(phi, mu, n_max):
    """B_n = E_mu[S_n(phi) | depth-n cylinders], a locally constant quasicocycle."""
    mass, max_depth = _mass_fn(mu)
    sft = phi.sft
    k = phi.k_max
    if max_depth is not None and n_max - 1 + k > max_depth:
        raise DepthExceeded("reference measure too shallow for the requested tables")
    tables = {}
    for n in range(1, n_max + 1):
        idx = sft.cylinders(n)
        vals = np.zeros(len(idx))
        for i, w in enumerate(idx.words):
            tot = 0.0
            for l in range(n):
                if l + k <= n:
                    tot += phi.depth_value(k, w[l:l + k])
                else:
                    ext_len = l + k - n
                    mw = mass(w)
                    if mw <= 0:
                        raise ZeroMass(f"cylinder {w} has no mass")
                    acc = 0.0
                    for v in sft.words(ext_len):
                        if sft.R[w[-1], v[0]]:
                            mv = mass(w + v)
                            if mv > 0:
                                acc += mv * phi.depth_value(k, (w + v)[l:l + k])
                    tot += acc / mw
            vals[i] = tot
        tables[n] = vals
    return Quasicocycle(sft, tables)


# -- Komlós construction --------------------------------------------------------


def komlos_zeta(L, sft, n, cap=None):
    """zeta_n(x) = (1/n) sum_{k=1..n} L(x_0..x_k) - L(x_1..x_k), depth n+1."""
    if n < 1:
        raise ValueError("komlos_zeta needs n >= 1")
    idx = sft.cylinders(n + 1, cap=cap)
    vals = np.empty(len(idx))
    for i, w in enumerate(idx.words):
        tot = 0.0
        for k in range(1, n + 1):
            tot += L.value(w[: k + 1]) - L.value(w[1: k + 1])
        vals[i] = tot / n
    return LocallyConstantFn(sft, n + 1, vals)


@dataclass
class KomlosResult:
    table: LocallyConstantFn
    diffs: list
    converged: bool


def komlos_potential(L, mu, n_list, depth, tol=1e-9, strict=True):
    """Cesàro average of the depth-restricted zeta_n along n_list.

    The subsequence is n_list itself (r(j) = j by default choice); successive
    averages are monitored and NonConvergence is raised, never hidden.
    """
    if list(n_list) != sorted(set(n_list)):
        raise ValueError("n_list must be strictly increasing")
    sft = mu.sft
    avg = None
    diffs = []
    for j, n in enumerate(n_list, start=1):
        zeta = komlos_zeta(L, sft, n)
        restricted = project_conditional(zeta, mu, depth)
        avg = restricted if avg is None else (1.0 - 1.0 / j) * avg + (1.0 / j) * restricted
        if j > 1:
            diffs.append(float(np.abs(avg.values - prev.values).max()))
        prev = avg
    converged = bool(diffs and diffs[-1] <= tol)
    if strict and not converged:
        err = NonConvergence(
            f"komlos averages still moving by {diffs[-1] if diffs else np.inf}; extend n_list"
        )
        err.partial = KomlosResult(avg, diffs, False)
        raise err
    return KomlosResult(avg, diffs, converged)


# -- the Cesàro coboundary solver -----------------------------------------------


def _conditional_step_matrix(mu, depth):
    """Row-stochastic K with (K f)(w) = E[f o tau | [w]] on depth-`depth` tables."""
    mass, max_depth = _mass_fn(mu)
    if max_depth is not None and depth + 1 > max_depth:
        raise DepthExceeded(f"need masses at depth {depth + 1}")
    sft = mu.sft
    idx = sft.cylinders(depth)
    S = len(idx)
    K = np.zeros((S, S))
    weights = np.empty(S)
    for i, w in enumerate(idx.words):
        mw = mass(w)
        if mw <= 0:
            raise ZeroMass(f"cylinder {w} has no mass")
        weights[i] = mw
        for s in sft.successors[w[-1]]:
            K[i, idx.index(w[1:] + (s,))] = mass(w + (s,)) / mw
    return idx, K, weights


@dataclass
class CoboundarySolve:
    u: LocallyConstantFn
    residual: float
    residual_at_2n: float
    vanishing: bool  # residual halves when N doubles, as a coboundary's must
    u_sup: float
    cesaro_drift: float  # sup |u_{2N} - u_N|
    n_terms: int
    bowen_bound: float | None = None  # 6 ||phi||_B estimate when available

    def to_json(self):
        return {
            "residual": self.residual,
            "residual_at_2n": self.residual_at_2n,
            "vanishing": self.vanishing,
            "u_sup": self.u_sup,
            "cesaro_drift": self.cesaro_drift,
            "n_terms": self.n_terms,
            "bowen_bound": self.bowen_bound,
        }


def _matrix_power(K, n):
    out = np.eye(K.shape[0])
    base = K.copy()
    while n:
        if n & 1:
            out = out @ base
        base = base @ base
        n >>= 1
    return out


def _cesaro_average(K, Kpow_n, phi0, solve_zero_mean, N):
    """u_N = (1/N) sum_{k=1..N} E[S_k phi | depth] in closed form."""
    s1 = solve_zero_mean(phi0 - Kpow_n @ phi0)  # sum_{l<N} K^l phi0
    s2 = solve_zero_mean((s1 - phi0) - (N - 1) * (Kpow_n @ phi0))  # sum l K^l phi0
    return s1 - s2 / N


def coboundary_solve(phi, mu, N, depth, tol_mean=1e-8, strict=False, bowen_bound=None):
    """Depth-restricted Cesàro solve of u - u o tau = phi under mu.

    Returns the average u_N and the sup residual of the cohomological
    equation over (depth+1)-cylinders.  For a coboundary the residual decays
    like 1/N; the residual is therefore re-evaluated at 2N, and a residual
    that fails to shrink is the non-coboundary signal (the depth-restricted
    averages themselves always settle, so only the residual is diagnostic;
    the periodic-orbit test stays the authoritative decision).  strict=True
    turns a non-vanishing residual into NonConvergence.
    """
    if isinstance(phi, WeakBowenFn):
        phi = phi.as_lc()
    sft = mu.sft
    if phi.m > depth:
        raise ValueError("depth must cover the potential's memory")
    idx, K, weights = _conditional_step_matrix(mu, depth)
    weights = weights / weights.sum()
    phi_vec = phi.as_memory(depth).values
    mean = float(np.dot(weights, phi_vec))
    scale = max(1.0, float(np.abs(phi_vec).max()))
    if abs(mean) > tol_mean * scale:
        raise MeanNotZero(f"integral of phi is {mean}")
    phi0 = phi_vec - mean
    S = len(idx)
    A = (np.eye(S) - K) + np.outer(np.ones(S), weights)

    def solve_zero_mean(y):
        return np.linalg.solve(A, y)

    def residual_of(u_vals):
        u = LocallyConstantFn(sft, depth, u_vals)
        res = 0.0
        for w in sft.cylinders(depth + 1).words:
            r = u.value(w[:depth]) - u.value(w[1:]) - phi.value(w[: phi.m])
            res = max(res, abs(r))
        return u, float(res)

    u_vals = _cesaro_average(K, _matrix_power(K, N), phi0, solve_zero_mean, N)
    u2_vals = _cesaro_average(K, _matrix_power(K, 2 * N), phi0, solve_zero_mean, 2 * N)
    u, res = residual_of(u_vals)
    _, res2 = residual_of(u2_vals)
    drift = float(np.abs(u2_vals - u_vals).max())
    vanishing = res2 <= 0.75 * res + 1e-12 * scale
    if strict and not vanishing:
        raise NonConvergence(f"residual {res} does not shrink when N doubles ({res2})")
    return CoboundarySolve(
        u, res, res2, vanishing, u.sup_norm(), drift, N, bowen_bound
    )


# -- periodic averages and the quasicocycle Livšic test --------------------------


def periodic_average(obj, sft, word, n_ref=None):
    """Asymptotic orbit average of a quasicocycle, table, or weak Bowen fn.

    Quasicocycles average per period (the homogenization-midpoint convention:
    B_n(p(a))/n rescaled by |a|); locally constant tables and weak Bowen
    functions average per symbol (the exact cyclic Birkhoff average).
    """
    word = tuple(word)
    if isinstance(obj, Quasicocycle):
        n = n_ref or (obj.n_max // len(word)) * len(word) or obj.n_max
        seq = sft.cyclic_window(word, 0, n)
        return obj.value(n, seq) / n * len(word)
    if isinstance(obj, WeakBowenFn):
        return obj.birkhoff_periodic(word, len(word)) / len(word)
    if isinstance(obj, LocallyConstantFn):
        return cyclic_birkhoff_average(obj, sft, word)
    if hasattr(obj, "homogenized_value"):
        return homogenize(obj, word, 64).mid
    raise TypeError(f"cannot average {type(obj)!r}")


@dataclass
class LivsicVerdict:
    verdict: str
    witness: tuple | None
    certificate_depth: int
    max_gap: float
    bound_check: dict | None = None

    def to_json(self):
        from .sft import render_word

        return {
            "verdict": self.verdict,
            "witness": None if self.witness is None else render_word(self.witness),
            "certificate_depth": self.certificate_depth,
            "max_gap": self.max_gap,
            "bound_check": self.bound_check,
        }


def livsic_quasicocycle_test(B, B2, sft, n_max, tol=1e-8):
    """Periodic-orbit comparison of two quasicocycles, with interval slack.

    Distinct needs disjoint certified intervals around B_n/n; Cohomologous is
    a bounded-depth certificate, augmented by the quantitative check that the
    table differences stay within the predicted uniform bound.
    """
    d1 = B.delta_estimate() + B.bowen_norm
    d2 = B2.delta_estimate() + B2.bowen_norm
    worst_gap = 0.0
    for n in range(1, n_max + 1):
        for a in sft.periodic_words(n):
            depth = (B.n_max // n) * n if n <= B.n_max else None
            depth2 = (B2.n_max // n) * n if n <= B2.n_max else None
            if not depth or not depth2:
                continue
            c1 = B.value(depth, sft.cyclic_window(a, 0, depth)) / depth
            c2 = B2.value(depth2, sft.cyclic_window(a, 0, depth2)) / depth2
            r1, r2 = d1 / depth, d2 / depth2
            gap = abs(c1 - c2)
            worst_gap = max(worst_gap, gap)
            if gap > r1 + r2 + tol:
                return LivsicVerdict("distinct", a, n, worst_gap)
    # quantitative uniform-bound check on the difference cocycle
    sup_diff = 0.0
    for n in range(1, min(B.n_max, B2.n_max) + 1):
        sup_diff = max(sup_diff, float(np.abs(B.tables[n] - B2.tables[n]).max()))
    diff = Quasicocycle(sft, {
        n: B.tables[n] - B2.tables[n] for n in range(1, min(B.n_max, B2.n_max) + 1)
    })
    bound = diff.delta_estimate() + B.bowen_norm + B2.bowen_norm
    check = {"sup_diff": sup_diff, "bound": bound, "ok": bool(sup_diff <= bound + tol)}
    return LivsicVerdict("cohomologous", None, n_max, worst_gap, check)
