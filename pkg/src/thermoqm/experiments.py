"""Monte Carlo limit-theorem experiments over stationary Markov chains.

Reproducibility contract: trial t draws from a counter-based stream keyed by
(seed, t), trials are processed in fixed-size blocks in trial order, and all
reductions run over the assembled per-trial arrays, so results are
bit-identical across runs and worker counts.  Path functionals are evaluated
through the window kernels of the quasimorphism, which makes L(x_0..x_{k-1})
exact at every step without storing words.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateSigma
from .markov import LocallyConstantFn, per_step_fn, variance

_MASK = (1 << 64) - 1


def trial_rng(seed, trial):
    key = np.array([int(seed) & _MASK, int(trial) & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def dkw_band(trials, alpha=0.01):
    """Kolmogorov-Smirnov sampling band P(D > band) <= alpha at this many trials."""
    return float(np.sqrt(np.log(2.0 / alpha) / (2.0 * trials)))


def ks_distance(sample, cdf):
    """Sup distance between the empirical CDF of sample and a target CDF."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    F = cdf(x)
    grid = np.arange(1, n + 1) / n
    return float(max((grid - F).max(), (F - (grid - 1.0 / n)).max()))


def standard_normal_cdf(x):
    return ndtr(x)


def reflection_sup_cdf(x):
    """CDF of sup_{[0,1]} of standard Brownian motion: 2 Phi(x) - 1 on x >= 0."""
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0.0, 0.0, 2.0 * ndtr(x) - 1.0)


# -- sampling specifications -----------------------------------------------------


def markov_sampler_payload(mm):
    """Picklable arrays describing how to walk the chain symbol by symbol."""
    sft = mm.sft
    t = mm.t
    S = len(mm.states)
    smax = max(len(sft.successors[w[-1]]) for w in mm.states.words)
    succ_cum = np.ones((S, smax))
    succ_state = np.zeros((S, smax), dtype=np.int64)
    succ_sym = np.zeros((S, smax), dtype=np.int8)
    for vi, v in enumerate(mm.states.words):
        succs = [(s, mm.states.index(v[1:] + (s,))) for s in sft.successors[v[-1]]]
        probs = np.array([mm.kernel[vi, si] for _, si in succs])
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        for j, (s, si) in enumerate(succs):
            succ_cum[vi, j] = cum[j]
            succ_state[vi, j] = si
            succ_sym[vi, j] = s
        for j in range(len(succs), smax):
            succ_state[vi, j] = succs[-1][1]
            succ_sym[vi, j] = succs[-1][0]
    init_cum = np.cumsum(mm.stationary)
    init_cum[-1] = 1.0
    return {
        "kind": "markov",
        "d": sft.d,
        "t": t,
        "init_cum": init_cum,
        "state_words": np.array(mm.states.words, dtype=np.int8),
        "succ_cum": succ_cum,
        "succ_state": succ_state,
        "succ_sym": succ_sym,
    }


def uniform_sphere_payload(d, inverse):
    """Walk with uniform first letter and uniform non-backtracking steps."""
    succ = np.zeros((d, d - 1), dtype=np.int8)
    for x in range(d):
        succ[x] = [y for y in range(d) if y != inverse[x]]
    return {"kind": "sphere", "d": d, "t": 1, "succ_table": succ}


def sample_path(mm, n, seed, trial=0):
    """One stationary path of n symbols, stream keyed by (seed, trial)."""
    payload = markov_sampler_payload(mm)
    payload.update(n=n, seed=seed, trial_range=(trial, trial + 1),
                   kernel_widths=(), kernel_tables=(), e=0.0,
                   checkpoints=(), want_max=False, want_symbols=True)
    return _simulate_block(payload)["symbols"][0]


# -- the block engine -------------------------------------------------------------


def _simulate_block(payload):
    t0, t1 = payload["trial_range"]
    B = t1 - t0
    n = payload["n"]
    d = payload["d"]
    t = payload["t"]
    widths = list(payload["kernel_widths"])
    tables = [np.asarray(k) for k in payload["kernel_tables"]]
    mods = [d ** q for q in widths]
    e = payload["e"]
    checkpoints = {c: j for j, c in enumerate(payload["checkpoints"])}
    want_max = payload["want_max"]
    want_symbols = payload.get("want_symbols", False)

    acc = np.zeros(B)
    runmax = np.zeros(B)
    codes = [np.zeros(B, dtype=np.int64) for _ in widths]
    checks = np.zeros((B, len(checkpoints)))
    symbols = np.zeros((B, n), dtype=np.int8) if want_symbols else None

    def consume(sym, pos):
        if want_symbols:
            symbols[:, pos] = sym
        for i, q in enumerate(widths):
            codes[i] = (codes[i] * d + sym) % mods[i]
            if pos + 1 >= q:
                acc[:] += tables[i][codes[i]]
        if want_max or checkpoints:
            s_now = acc - (pos + 1) * e
            if want_max:
                np.maximum(runmax, s_now, out=runmax)
            j = checkpoints.get(pos + 1)
            if j is not None:
                checks[:, j] = s_now

    if payload["kind"] == "markov":
        U = np.empty((B, n))
        for i, trial in enumerate(range(t0, t1)):
            U[i] = trial_rng(payload["seed"], trial).random(n)
        states = np.searchsorted(payload["init_cum"], U[:, 0], side="right")
        init_words = payload["state_words"][states]
        for pos in range(min(t, n)):
            consume(init_words[:, pos].copy(), pos)
        succ_cum = payload["succ_cum"]
        succ_state = payload["succ_state"]
        succ_sym = payload["succ_sym"]
        for pos in range(t, n):
            u = U[:, pos - t + 1]
            rows = succ_cum[states]
            j = (u[:, None] >= rows).sum(axis=1)
            sym = succ_sym[states, j]
            states = succ_state[states, j]
            consume(sym, pos)
    elif payload["kind"] == "sphere":
        succ = payload["succ_table"]
        sym = np.empty(B, dtype=np.int8)
        choice = np.empty((B, n - 1), dtype=np.int64)
        first = np.empty(B, dtype=np.int64)
        for i, trial in enumerate(range(t0, t1)):
            g = trial_rng(payload["seed"], trial)
            first[i] = g.integers(0, d)
            choice[i] = g.integers(0, d - 1, size=n - 1)
        cur = first.astype(np.int8)
        consume(cur.copy(), 0)
        for pos in range(1, n):
            cur = succ[cur, choice[:, pos - 1]]
            consume(cur.copy(), pos)
    else:
        raise ValueError(f"unknown sampler kind {payload['kind']!r}")

    out = {"final": acc - n * e, "checks": checks, "runmax": runmax}
    if want_symbols:
        out["symbols"] = symbols
    return out


def _run_blocks(payload, trials, workers, block):
    ranges = [(lo, min(lo + block, trials)) for lo in range(0, trials, block)]
    jobs = [dict(payload, trial_range=r) for r in ranges]
    if workers <= 1:
        parts = [_simulate_block(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_simulate_block, jobs))
    return {
        "final": np.concatenate([p["final"] for p in parts]),
        "checks": np.concatenate([p["checks"] for p in parts]),
        "runmax": np.concatenate([p["runmax"] for p in parts]),
    }


# -- shared setup ------------------------------------------------------------------


def path_functional_payload(L, mm, center=True):
    """Sampler payload plus kernel tables and the per-step mean of L."""
    sft = mm.sft
    kernels = L.window_tables(sft.d)
    if kernels is None:
        raise ValueError(
            "experiments need a window-additive quasimorphism "
            "(tabulated kinds cannot be evaluated along long paths)"
        )
    payload = markov_sampler_payload(mm)
    e = 0.0
    if center:
        for q, table in kernels.items():
            idx = sft.cylinders(q)
            e += float(np.dot(mm.cylinder_masses(q), table[idx.codes]))
    payload.update(
        kernel_widths=tuple(sorted(kernels)),
        kernel_tables=tuple(kernels[q] for q in sorted(kernels)),
        e=e,
    )
    return payload, e


def sigma2_of(L, mm, min_sigma2=1e-10):
    """Two-way transfer-operator variance of the per-step observable of L."""
    ps = per_step_fn(L, mm.sft)
    e = mm.integral(ps)
    psi = ps - LocallyConstantFn.constant(mm.sft, e)
    var = variance(mm.potential, psi, mm)
    scale = max(1.0, psi.sup_norm()) ** 2
    if var.sigma2_martingale <= min_sigma2 * scale:
        raise DegenerateSigma(
            f"sigma2 = {var.sigma2_martingale}; the quasimorphism is cohomologically trivial"
        )
    return var


# -- experiments --------------------------------------------------------------------


@dataclass
class CltResult:
    stats: np.ndarray
    ks: float
    dkw: float
    sigma2: float
    variance: object
    e_per_step: float
    n: int
    trials: int
    seed: int

    def summary(self):
        out = {
            "ks": self.ks,
            "dkw_99": self.dkw,
            "sigma2": self.sigma2,
            "e_per_step": self.e_per_step,
            "mean_stat": float(self.stats.mean()),
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
        }
        if self.variance is not None:
            out["sigma2_martingale"] = self.variance.sigma2_martingale
            out["sigma2_green_kubo"] = self.variance.sigma2_green_kubo
        return out


def clt_experiment(L, mm, n, trials, seed, workers=1, block=2048, sigma2=None):
    """Empirical law of (L(x_0..x_{n-1}) - n e) / (sigma sqrt n) vs the normal."""
    if trials < 1:
        raise ValueError("trials >= 1")
    var = None
    if sigma2 is None:
        var = sigma2_of(L, mm)
        sigma2 = var.sigma2_martingale
    if sigma2 <= 0:
        raise DegenerateSigma("sigma2 must be positive")
    payload, e = path_functional_payload(L, mm)
    payload.update(n=n, seed=seed, checkpoints=(), want_max=False)
    res = _run_blocks(payload, trials, workers, block)
    stats = res["final"] / np.sqrt(sigma2 * n)
    ks = ks_distance(stats, standard_normal_cdf)
    return CltResult(stats, ks, dkw_band(trials), float(sigma2), var, e, n, trials, seed)


@dataclass
class InvarianceResult:
    terminal: np.ndarray
    increments: np.ndarray  # (trials, 4) dyadic block increments, normalized
    sup_stats: np.ndarray
    ks_terminal: float
    ks_sup: float
    max_abs_corr: float
    corr: np.ndarray
    sigma2: float
    n: int
    trials: int
    seed: int

    def summary(self):
        return {
            "ks_terminal": self.ks_terminal,
            "ks_sup": self.ks_sup,
            "max_abs_increment_corr": self.max_abs_corr,
            "corr_threshold_3_over_sqrt_trials": 3.0 / np.sqrt(self.trials),
            "sigma2": self.sigma2,
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
        }


def invariance_experiment(L, mm, n, trials, seed, workers=1, block=2048, sigma2=None):
    """Donsker-type checks: normal terminal law, uncorrelated dyadic
    increments, and the reflection-principle law of the running maximum."""
    if n % 4:
        raise ValueError("n must be divisible by 4")
    if sigma2 is None:
        sigma2 = sigma2_of(L, mm).sigma2_martingale
    payload, _ = path_functional_payload(L, mm)
    cps = (n // 4, n // 2, 3 * n // 4, n)
    payload.update(n=n, seed=seed, checkpoints=cps, want_max=True)
    res = _run_blocks(payload, trials, workers, block)
    scale = np.sqrt(sigma2 * n)
    terminal = res["final"] / scale
    checks = res["checks"] / scale
    incr = np.empty_like(checks)
    incr[:, 0] = checks[:, 0]
    incr[:, 1:] = checks[:, 1:] - checks[:, :-1]
    corr = np.corrcoef(incr, rowvar=False)
    off = corr - np.eye(4)
    sup_stats = res["runmax"] / scale
    return InvarianceResult(
        terminal,
        incr,
        sup_stats,
        ks_distance(terminal, standard_normal_cdf),
        ks_distance(sup_stats, reflection_sup_cdf),
        float(np.abs(off).max()),
        corr,
        float(sigma2),
        n,
        trials,
        seed,
    )


@dataclass
class LilResult:
    sup_stat: float
    argmax_n: int
    n_min: int
    n_max: int
    sigma2: float
    series: list  # (n, statistic) on a geometric grid, for plotting/CSV

    def summary(self):
        return {
            "sup_stat": self.sup_stat,
            "argmax_n": self.argmax_n,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "sigma2": self.sigma2,
        }


def lil_experiment(L, mm, n_max, seed, n_min=1000, sigma2=None, trial=0):
    """Running S_n / sqrt(2 n sigma^2 loglog(n sigma^2)) along one orbit."""
    if sigma2 is None:
        sigma2 = sigma2_of(L, mm).sigma2_martingale
    payload, e = path_functional_payload(L, mm)
    sft = mm.sft
    kernels = {q: t for q, t in zip(payload["kernel_widths"], payload["kernel_tables"])}
    symbols = sample_path(mm, n_max, seed, trial=trial)
    inc = np.zeros(n_max)
    x = symbols.astype(np.int64)
    for q, table in kernels.items():
        win = np.lib.stride_tricks.sliding_window_view(x, q)
        codes = win @ (sft.d ** np.arange(q - 1, -1, -1, dtype=np.int64))
        inc[q - 1:] += table[codes]
    S = np.cumsum(inc) - np.arange(1, n_max + 1) * e
    ns = np.arange(1, n_max + 1)
    start = max(n_min, int(np.ceil((np.e + 1e-9) / sigma2)))
    t = ns[start - 1:] * sigma2
    denom = np.sqrt(2.0 * t * np.log(np.log(t)))
    stat = S[start - 1:] / denom
    k = int(np.argmax(stat))
    grid = np.unique(np.geomspace(start, n_max, 200).astype(np.int64))
    series = [(int(n), float(S[n - 1] / np.sqrt(2 * n * sigma2 * np.log(np.log(n * sigma2)))))
              for n in grid]
    return LilResult(float(stat[k]), int(ns[start - 1 + k]), start, n_max, float(sigma2), series)


@dataclass
class DeviationResult:
    rows: list  # per-n: {n, count, p_hat, log_p, zero}
    slope: float | None  # fitted decay rate of log p_hat vs n
    gauss_rows: list
    gauss_slope: float | None
    delta: float
    trials: int
    seed: int

    def summary(self):
        return {
            "delta": self.delta,
            "slope": self.slope,
            "gauss_slope": self.gauss_slope,
            "rows": self.rows,
            "gauss_rows": self.gauss_rows,
            "trials": self.trials,
            "seed": self.seed,
        }


def _weighted_line_fit(xs, ys, ws):
    xs, ys, ws = map(np.asarray, (xs, ys, ws))
    W = ws.sum()
    xbar = (ws * xs).sum() / W
    ybar = (ws * ys).sum() / W
    den = (ws * (xs - xbar) ** 2).sum()
    if den == 0:
        return None
    return float((ws * (xs - xbar) * (ys - ybar)).sum() / den)


def deviation_experiment(L, mm, n_list, trials, delta, seed, workers=1, block=2048,
                         gauss_deltas=(0.5, 1.0, 1.5, 2.0)):
    """Tail tables P(S_n / n >= delta) with a log-linear rate fit, plus the
    Gaussian-scale tail P(S_n / sqrt(n) >= delta') at the largest n."""
    n_list = sorted(set(int(n) for n in n_list))
    n_max = n_list[-1]
    payload, e = path_functional_payload(L, mm)
    payload.update(n=n_max, seed=seed, checkpoints=tuple(n_list), want_max=False)
    res = _run_blocks(payload, trials, workers, block)
    rows = []
    for j, n in enumerate(n_list):
        count = int((res["checks"][:, j] / n >= delta).sum())
        p_hat = count / trials
        rows.append({
            "n": n,
            "count": count,
            "p_hat": p_hat if count else 3.0 / trials,  # rule-of-three upper bound
            "log_p": float(np.log(p_hat)) if count else None,
            "zero": count == 0,
        })
    fit_rows = [r for r in rows if not r["zero"]]
    slope = None
    if len(fit_rows) >= 2:
        slope = _weighted_line_fit(
            [r["n"] for r in fit_rows],
            [r["log_p"] for r in fit_rows],
            [r["count"] for r in fit_rows],
        )
    last = res["checks"][:, -1] / np.sqrt(n_max)
    gauss_rows = []
    for dg in gauss_deltas:
        count = int((last >= dg).sum())
        gauss_rows.append({
            "delta": dg,
            "count": count,
            "p_hat": count / trials if count else 3.0 / trials,
            "log_p": float(np.log(count / trials)) if count else None,
            "zero": count == 0,
        })
    gfit = [r for r in gauss_rows if not r["zero"]]
    gauss_slope = None
    if len(gfit) >= 2:
        gauss_slope = _weighted_line_fit(
            [r["delta"] ** 2 for r in gfit],
            [r["log_p"] for r in gfit],
            [r["count"] for r in gfit],
        )
    return DeviationResult(rows, slope, gauss_rows, gauss_slope, delta, trials, seed)


def bernoulli_rate(delta):
    """Cramér rate for iid ±1/2 steps at mean-threshold delta (KL closed form)."""
    q = 0.5 + delta
    return float(q * np.log(2 * q) + (1 - q) * np.log(2 * (1 - q)))
