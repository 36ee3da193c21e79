"""Markov potentials, their normalization, stationary chains, and the exact
finite-dimensional cohomological machinery behind the limit theorems.

A memory-s potential is a table on (s+1)-cylinders.  Its transfer operator
acts on the locally constant functions LC_N (tables on N-cylinders) as an
honest matrix, so normalization, the cohomological equation (Id - R)h = psi,
the martingale part, and the variance are all plain linear algebra here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    MeanNotZero,
    NotPrimitive,
    NumericalFailure,
    SingularSystem,
    ZeroMass,
)
from .measures import CylinderMeasure


class LocallyConstantFn:
    """A function of the first `memory` symbols, stored on that word index."""

    def __init__(self, sft, memory, values):
        self.sft = sft
        self.m = int(memory)
        vals = np.asarray(values, dtype=float)
        expected = 1 if self.m == 0 else len(sft.cylinders(self.m))
        if vals.shape != (expected,):
            raise ValueError(f"memory-{self.m} table needs {expected} values")
        self.values = vals

    @classmethod
    def constant(cls, sft, c):
        return cls(sft, 0, np.array([float(c)]))

    def value(self, word):
        if self.m == 0:
            return float(self.values[0])
        return float(self.values[self.sft.cylinders(self.m).index(tuple(word)[: self.m])])

    def as_memory(self, m2):
        """The same function tabulated on deeper cylinders."""
        if m2 < self.m:
            raise ValueError("cannot lower memory without projecting")
        if m2 == self.m:
            return self
        idx = self.sft.cylinders(m2)
        vals = np.array([self.value(w) for w in idx.words])
        return LocallyConstantFn(self.sft, m2, vals)

    def sup_norm(self):
        return float(np.abs(self.values).max())

    def osc(self):
        return float(self.values.max() - self.values.min())

    def __add__(self, other):
        m = max(self.m, other.m)
        return LocallyConstantFn(
            self.sft, m, self.as_memory(m).values + other.as_memory(m).values
        )

    def __sub__(self, other):
        m = max(self.m, other.m)
        return LocallyConstantFn(
            self.sft, m, self.as_memory(m).values - other.as_memory(m).values
        )

    def __mul__(self, c):
        return LocallyConstantFn(self.sft, self.m, self.values * float(c))

    __rmul__ = __mul__

    def shift(self):
        """f o tau, a memory-(m+1) table."""
        idx = self.sft.cylinders(self.m + 1)
        vals = np.array([self.value(w[1:]) for w in idx.words])
        return LocallyConstantFn(self.sft, self.m + 1, vals)


class MarkovPotential:
    """Memory-s potential: a value table on the (s+1)-cylinders."""

    def __init__(self, sft, memory, table, normalized=False):
        self.sft = sft
        self.s = int(memory)
        table = np.asarray(table, dtype=float)
        if table.shape != (len(sft.cylinders(self.s + 1)),):
            raise ValueError("table must cover the (s+1)-cylinders")
        self.table = table
        self.normalized = normalized

    def value(self, word):
        return float(self.table[self.sft.cylinders(self.s + 1).index(tuple(word)[: self.s + 1])])

    def normalization_defect(self):
        """max over w of |sum_a e^{phi(a.w)} - 1| (w at the chain's state depth)."""
        sft = self.sft
        t = max(self.s, 1)
        worst = 0.0
        for w in sft.cylinders(t).words:
            tot = sum(
                np.exp(self.value((a,) + w)) for a in sft.predecessors[w[0]]
            )
            worst = max(worst, abs(tot - 1.0))
        return float(worst)

    @classmethod
    def zero(cls, sft):
        return cls(sft, 0, np.zeros(len(sft.cylinders(1))))

    @classmethod
    def from_qm(cls, L, sft):
        """Lift the window kernels of a window-additive L to one potential table."""
        kernels = L.window_tables(sft.d)
        if kernels is None:
            raise ValueError("quasimorphism is not window-additive")
        s = max(kernels) - 1
        idx = sft.cylinders(s + 1)
        vals = np.array([
            sum(float(table[_code(w[:q], sft.d)]) for q, table in kernels.items())
            for w in idx.words
        ])
        return cls(sft, s, vals)


def _code(word, d):
    c = 0
    for s in word:
        c = c * d + s
    return c


def per_step_fn(L, sft):
    """The locally constant per-step observable whose Birkhoff sums track L."""
    pot = MarkovPotential.from_qm(L, sft)
    return LocallyConstantFn(sft, pot.s + 1, pot.table)


def _block_transfer_matrix(pot):
    """Matrix of the (unnormalized) transfer operator on LC_t, t = max(s,1)."""
    sft = pot.sft
    t = max(pot.s, 1)
    idx = sft.cylinders(t)
    M = np.zeros((len(idx), len(idx)))
    for vi, v in enumerate(idx.words):
        for s in sft.successors[v[-1]]:
            ext = v + (s,)
            wi = idx.index(ext[1:])
            M[wi, vi] += np.exp(pot.value(ext[: pot.s + 1]))
    return idx, M


def _is_primitive(B):
    """Some power of the boolean matrix is all-positive (checked by squaring,
    which reaches past the Wielandt bound without overflowing)."""
    S = B.shape[0]
    if S == 1:
        return bool(B[0, 0])
    P = B.astype(np.int8)
    doublings = int(np.ceil(np.log2((S - 1) ** 2 + 1))) + 1
    for _ in range(doublings):
        if P.all():
            return True
        P = ((P.astype(np.int64) @ P.astype(np.int64)) > 0).astype(np.int8)
    return bool(P.all())


def normalize_potential(pot, max_iter=10000, tol=1e-15):
    """Return (normalized potential, Perron eigenvalue, positive eigenfunction).

    phi' = phi + log h - log h o tau - log lambda on memory max(s, 1); the
    eigenpair comes from a dense eigensolve polished by power iteration.
    """
    sft = pot.sft
    t = max(pot.s, 1)
    idx, M = _block_transfer_matrix(pot)
    if not _is_primitive(M > 0):
        raise NotPrimitive("weighted transfer matrix on blocks is not primitive")
    evals, evecs = np.linalg.eig(M)
    k = int(np.argmax(np.abs(evals)))
    h = np.real(evecs[:, k])
    if h.sum() < 0:
        h = -h
    lam = float(np.real(evals[k]))
    converged = False
    for _ in range(max_iter):
        h_new = M @ h
        lam = float(h_new.sum() / h.sum())
        h_new /= h_new.sum()
        if np.abs(h_new - h).max() < tol:
            h = h_new
            converged = True
            break
        h = h_new
    if not converged:
        raise NumericalFailure("power iteration did not converge")
    if lam <= 0 or (h <= 0).any():
        raise NumericalFailure("Perron pair is not positive")
    logh = np.log(h)
    deep = sft.cylinders(t + 1)
    vals = np.array([
        pot.value(u[: pot.s + 1])
        + logh[idx.index(u[:t])]
        - logh[idx.index(u[1:])]
        - np.log(lam)
        for u in deep.words
    ])
    out = MarkovPotential(sft, t, vals, normalized=True)
    defect = out.normalization_defect()
    if defect > 1e-12:
        raise NumericalFailure(f"normalization defect {defect} above 1e-12")
    hfn = LocallyConstantFn(sft, t, h)
    return out, lam, hfn


class MarkovMeasure:
    """Stationary chain of a normalized potential, with exact cylinder masses."""

    def __init__(self, sft, potential, states, kernel, stationary):
        self.sft = sft
        self.potential = potential  # normalized MarkovPotential, memory t
        self.t = max(potential.s, 1)
        self.states = states  # WordIndex at depth t
        self.kernel = kernel  # row-stochastic over states
        self.stationary = stationary
        self._mass_cache = {}

    @property
    def s(self):
        return self.potential.s

    def lam2(self):
        """Modulus of the second eigenvalue of the chain kernel."""
        ev = np.abs(np.linalg.eigvals(self.kernel))
        ev.sort()
        return float(ev[-2]) if len(ev) > 1 else 0.0

    def cylinder_masses(self, k):
        if k in self._mass_cache:
            return self._mass_cache[k]
        sft, t = self.sft, self.t
        if k == t:
            out = self.stationary.copy()
        elif k < t:
            idx = sft.cylinders(k)
            out = np.zeros(len(idx))
            for vi, v in enumerate(self.states.words):
                out[idx.index(v[:k])] += self.stationary[vi]
        else:
            prev = self.cylinder_masses(k - 1)
            idx_prev = sft.cylinders(k - 1)
            idx = sft.cylinders(k)
            out = np.zeros(len(idx))
            for wi, w in enumerate(idx.words):
                src = self.states.index(w[-t - 1: -1])
                dst = self.states.index(w[-t:])
                out[idx.index(w)] = prev[idx_prev.index(w[:-1])] * self.kernel[src, dst]
        self._mass_cache[k] = out
        return out

    def mass(self, word):
        word = tuple(word)
        if not word:
            return 1.0
        if not self.sft.is_word(word):
            return 0.0
        return float(self.cylinder_masses(len(word))[self.sft.cylinders(len(word)).index(word)])

    def cylinder_measure(self, max_depth):
        return CylinderMeasure(
            self.sft, {k: self.cylinder_masses(k) for k in range(1, max_depth + 1)}
        )

    def entropy_exact(self):
        P, pi = self.kernel, self.stationary
        with np.errstate(divide="ignore", invalid="ignore"):
            logP = np.where(P > 0, np.log(np.where(P > 0, P, 1.0)), 0.0)
        return float(-(pi[:, None] * P * logP).sum())

    def integral(self, f):
        """Exact integral of a LocallyConstantFn."""
        if f.m == 0:
            return float(f.values[0])
        return float(np.dot(self.cylinder_masses(f.m), f.values))

    def l2_norm_sq(self, f):
        if f.m == 0:
            return float(f.values[0] ** 2)
        return float(np.dot(self.cylinder_masses(f.m), f.values ** 2))

    def require_full_support(self):
        if (self.stationary <= 0).any():
            raise ZeroMass("stationary vector has a zero entry")


def markov_measure(pot):
    """Stationary MarkovMeasure of a normalized potential."""
    if not pot.normalized:
        raise ValueError("normalize the potential first")
    sft = pot.sft
    t = max(pot.s, 1)
    idx = sft.cylinders(t)
    S = len(idx)
    A = np.zeros((S, S))
    for vi, v in enumerate(idx.words):
        for s in sft.successors[v[-1]]:
            ext = v + (s,)
            A[vi, idx.index(ext[1:])] = np.exp(pot.value(ext))
    try:
        m = np.linalg.solve(A - np.eye(S) + np.ones((S, S)) / S, np.full(S, 1.0 / S))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"stationary solve failed: {exc}") from exc
    if (m <= 0).any():
        raise NumericalFailure("stationary vector not positive")
    m /= m.sum()
    kernel = A * m[None, :] / m[:, None]
    fix = np.abs(m @ kernel - m).max()
    if fix > 1e-12:
        raise NumericalFailure(f"stationary fix-point defect {fix}")
    return MarkovMeasure(sft, pot, idx, kernel, m)


def parry_measure(sft):
    """The maximal-entropy (Parry) chain of the subshift."""
    pot, _, _ = normalize_potential(MarkovPotential.zero(sft))
    return markov_measure(pot)


def gibbs_chain_from_qm(L, sft):
    """Exact Gibbs chain of a window-additive quasimorphism.

    Returns (measure, normalized potential, log Perron eigenvalue)."""
    pot = MarkovPotential.from_qm(L, sft)
    norm, lam, _ = normalize_potential(pot)
    return markov_measure(norm), norm, float(np.log(lam))


# -- transfer operator on locally constant functions ---------------------------


def transfer_apply(pot, f):
    """(R f)(x) = sum over preimages a.x of e^{phi(a.x)} f(a.x...)."""
    if not pot.normalized:
        raise ValueError("transfer_apply expects a normalized potential")
    if f.m < 1:
        f = f.as_memory(1)
    sft = pot.sft
    r = max(pot.s, f.m - 1)
    idx = sft.cylinders(r)
    out = np.zeros(len(idx))
    for wi, w in enumerate(idx.words):
        tot = 0.0
        for a in sft.predecessors[w[0]]:
            ext = (a,) + w
            tot += np.exp(pot.value(ext[: pot.s + 1])) * f.value(ext[: f.m])
        out[wi] = tot
    return LocallyConstantFn(sft, r, out)


def transfer_matrix(pot, N):
    """Matrix of the transfer operator acting on LC_N (N >= max(s,1))."""
    sft = pot.sft
    if N < max(pot.s, 1):
        raise ValueError("transfer_matrix needs N >= max(s, 1)")
    idx = sft.cylinders(N)
    M = np.zeros((len(idx), len(idx)))
    for vi, v in enumerate(idx.words):
        for s in sft.successors[v[-1]]:
            ext = v + (s,)
            M[idx.index(ext[1:]), vi] += np.exp(pot.value(ext[: pot.s + 1]))
    return idx, M


def _masses_of(mu, k):
    """Depth-k mass vector from either a MarkovMeasure or a CylinderMeasure."""
    return mu.cylinder_masses(k) if hasattr(mu, "cylinder_masses") else mu.masses_at(k)


def project_conditional(f, mm, s):
    """Conditional expectation of f onto depth-s cylinders under mm."""
    if s > f.m:
        return f.as_memory(s)
    if s == f.m:
        return f
    if s == 0:
        mean = float(np.dot(_masses_of(mm, f.m), f.values)) if f.m else f.values[0]
        return LocallyConstantFn.constant(f.sft, mean)
    sft = f.sft
    deep_mass = _masses_of(mm, f.m)
    idx_deep = sft.cylinders(f.m)
    idx = sft.cylinders(s)
    num = np.zeros(len(idx))
    den = np.zeros(len(idx))
    for i, w in enumerate(idx_deep.words):
        j = idx.index(w[:s])
        num[j] += deep_mass[i] * f.values[i]
        den[j] += deep_mass[i]
    if (den <= 0).any():
        raise ZeroMass("conditional expectation over a null cylinder")
    return LocallyConstantFn(sft, s, num / den)


# -- cohomological equation and variance ----------------------------------------


@dataclass
class CohomologySolve:
    h: LocallyConstantFn
    residual: float
    h_sup: float
    diagnostic_bound: float
    lam2: float


def solve_cohomological(pot, psi, mm, tol_mean=1e-10):
    """Solve (Id - R) h = psi exactly on the zero-mean part of LC_N."""
    N = max(psi.m, pot.s, 1)
    psi = psi.as_memory(N)
    scale = max(1.0, psi.sup_norm())
    mean = mm.integral(psi)
    if abs(mean) > tol_mean * scale:
        raise MeanNotZero(f"integral of psi is {mean}")
    idx, M = transfer_matrix(pot, N)
    masses = mm.cylinder_masses(N)
    Q = np.eye(len(idx)) - M
    try:
        h_vals = np.linalg.solve(Q + np.outer(np.ones(len(idx)), masses), psi.values)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"cohomological solve failed: {exc}") from exc
    residual = float(np.abs(Q @ h_vals - psi.values).max())
    if not np.isfinite(residual) or residual > 1e-8 * scale:
        raise SingularSystem(f"cohomological residual {residual} too large")
    h = LocallyConstantFn(pot.sft, N, h_vals)
    lam2 = mm.lam2()
    bowen_est = (N - 1) * psi.osc()
    bound = np.sqrt(pot.sft.d) / (1.0 - lam2) * np.sqrt(pot.s + 1) * (psi.sup_norm() + bowen_est)
    return CohomologySolve(h, residual, h.sup_norm(), float(bound), lam2)


def martingale_part(pot, psi, h):
    """psi_bar = h - (R h) o tau; in Ker R, and psi - psi_bar is a coboundary."""
    rh = transfer_apply(pot, h)
    psi_bar = h - rh.shift()
    return psi_bar


@dataclass
class VarianceResult:
    sigma2_martingale: float
    sigma2_green_kubo: float
    agreement: float
    n_terms: int
    lam2: float

    @property
    def sigma2(self):
        return self.sigma2_martingale

    def to_json(self):
        return {
            "sigma2_martingale": self.sigma2_martingale,
            "sigma2_green_kubo": self.sigma2_green_kubo,
            "agreement": self.agreement,
            "n_terms": self.n_terms,
            "lam2": self.lam2,
        }


def variance(pot, psi, mm, tail_tol=1e-13, n_cut=None):
    """Two-way CLT variance: ||psi_bar||^2 and the Green-Kubo series."""
    N = max(psi.m, pot.s, 1)
    psi = psi.as_memory(N)
    solve = solve_cohomological(pot, psi, mm)
    psi_bar = martingale_part(pot, psi, solve.h)
    sigma2_mart = mm.l2_norm_sq(psi_bar)
    sigma2 = mm.l2_norm_sq(psi)
    scale = max(1.0, sigma2)
    lam2 = solve.lam2
    if n_cut is None:
        if lam2 < 1e-12:
            n_cut = 64
        else:
            n_cut = int(min(20000, max(64, np.ceil(np.log(tail_tol) / np.log(lam2)) * 4)))
    f = psi
    small = 0
    n_used = 0
    for n in range(1, n_cut + 1):
        f = transfer_apply(pot, f)
        term = float(np.dot(mm.cylinder_masses(max(f.m, psi.m)),
                            f.as_memory(max(f.m, psi.m)).values
                            * psi.as_memory(max(f.m, psi.m)).values))
        sigma2 += 2.0 * term
        n_used = n
        small = small + 1 if abs(term) < tail_tol * scale else 0
        if small >= 5:
            break
    agreement = abs(sigma2_mart - sigma2)
    return VarianceResult(float(sigma2_mart), float(sigma2), float(agreement), n_used, lam2)


def cyclic_birkhoff_average(f, sft, word):
    """Exact Birkhoff average of a locally constant f along a periodic orbit."""
    word = tuple(word)
    n = len(word)
    return sum(f.value(sft.cyclic_window(word, j, max(f.m, 1))) for j in range(n)) / n


def degeneracy_test(psi, pot, mm, n_max=8, tol=1e-10):
    """Cross-check sigma = 0 against the periodic-orbit (Livsic) criterion."""
    from .errors import InconsistentVerdicts

    sft = pot.sft
    scale = max(1.0, psi.sup_norm())
    var = variance(pot, psi, mm)
    sigma_trivial = var.sigma2_martingale <= tol * scale ** 2
    worst, witness = 0.0, None
    for n in range(1, n_max + 1):
        for a in sft.periodic_words(n):
            avg = abs(cyclic_birkhoff_average(psi, sft, a))
            if avg > worst:
                worst, witness = avg, a
    livsic_trivial = worst <= tol * scale
    if sigma_trivial != livsic_trivial:
        raise InconsistentVerdicts(
            f"sigma2 = {var.sigma2_martingale} but max periodic average = {worst}"
        )
    return {
        "sigma2": var.sigma2_martingale,
        "trivial": sigma_trivial,
        "max_periodic_average": worst,
        "witness": witness,
    }
