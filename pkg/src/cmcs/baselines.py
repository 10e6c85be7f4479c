"""Comparison recruiters scored on the same UCRG objective as the tabu search.

Metaheuristics (DE, PSO, SA, VNS) and four one-shot rankers: most trusted
(GMPL), nearest (GMDB), most able (GMAB) and uniformly random. All return a
:class:`~cmcs.recruit_tsr.SolveResult`; budgets are counted in evaluated
teams so runs can be matched against the tabu search.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .benefits import Ucrg, qod_of, team_sum
from .recruit_tsr import SolveResult, _check, _finish, random_team

ALGORITHMS = ("tsr", "de", "pso", "vns", "sa", "gmpl", "gmdb", "gmab", "random")


@dataclass(frozen=True)
class BaselineConfig:
    population: int = 30
    iterations: int = 500
    F: float = 0.5
    CR: float = 0.9
    w: float = 0.7
    c1: float = 1.5
    c2: float = 1.5
    t0: float | None = None
    cooling: float = 0.95
    max_shake: int = 3
    budget: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.population < 1 or self.iterations < 1:
            raise ValueError("population and iterations must be >= 1")
        if not (0.0 <= self.CR <= 1.0 and 0.0 <= self.F <= 2.0):
            raise ValueError("DE rates out of range")
        if not 0.0 < self.cooling <= 1.0:
            raise ValueError("cooling must be in (0, 1]")
        if self.max_shake < 1:
            raise ValueError("max_shake must be >= 1")


def _repair(U: np.ndarray, idx: np.ndarray, n: int, k: int) -> np.ndarray:
    """Drop duplicates and refill with the unused candidate of highest marginal effect."""
    seen: list[int] = []
    for x in idx.tolist():
        if x not in seen:
            seen.append(x)
    while len(seen) < k:
        used = np.zeros(n, dtype=bool)
        used[seen] = True
        marg = U[:, seen].sum(axis=1) if seen else U.sum(axis=1)
        marg[used] = -np.inf
        seen.append(int(np.argmax(marg)))
    return np.array(sorted(seen), dtype=np.int64)


def _team_sums(U: np.ndarray, teams: np.ndarray) -> np.ndarray:
    """Pair sums for a batch of teams (rows of candidate indices)."""
    return U[teams[:, :, None], teams[:, None, :]].sum(axis=(1, 2)) * 0.5


def de_recruit(ucrg: Ucrg, cfg: BaselineConfig | None = None) -> SolveResult:
    """Differential evolution on sorted index vectors.

    Mutant ``round(x1 + F (x2 - x3)) mod n``, binomial crossover with rate
    CR, duplicate repair, greedy one-to-one selection. A generation's trials
    are built from the previous generation and scored together.
    """
    cfg = cfg or BaselineConfig()
    k = _check(ucrg)
    n, U = ucrg.n, ucrg.U
    rng = np.random.default_rng(cfg.seed)
    NP = max(4, cfg.population)
    gens = cfg.iterations if cfg.budget is None else max(1, (cfg.budget - NP) // NP)
    pop = np.sort(rng.permuted(np.tile(np.arange(n), (NP, 1)), axis=1)[:, :k], axis=1).astype(np.int64)
    fit = _team_sums(U, pop)
    evals = NP
    trace = np.empty(gens)
    others = np.array([[x for x in range(NP) if x != i] for i in range(NP)])
    for g in range(gens):
        pick = np.argsort(rng.random((NP, NP - 1)), axis=1)[:, :3]
        r = np.take_along_axis(others, pick, axis=1)
        mutant = np.rint(pop[r[:, 0]] + cfg.F * (pop[r[:, 1]] - pop[r[:, 2]])).astype(np.int64) % n
        cross = rng.random((NP, k)) < cfg.CR
        cross[np.arange(NP), rng.integers(0, k, NP)] = True
        trial = np.sort(np.where(cross, mutant, pop), axis=1)
        dup = np.any(trial[:, 1:] == trial[:, :-1], axis=1)
        for i in np.flatnonzero(dup):
            trial[i] = _repair(U, trial[i], n, k)
        f = _team_sums(U, trial)
        evals += NP
        better = f >= fit
        pop[better], fit[better] = trial[better], f[better]
        trace[g] = fit.max() * 2.0 / (k * (k - 1))
    b = int(np.argmax(fit))
    return _finish(ucrg, pop[b], float(fit[b]), trace, evals, gens)


def pso_recruit(ucrg: Ucrg, cfg: BaselineConfig | None = None) -> SolveResult:
    """Particle swarm over per-candidate membership scores, decoded as the top-k."""
    cfg = cfg or BaselineConfig()
    k = _check(ucrg)
    n, U = ucrg.n, ucrg.U
    rng = np.random.default_rng(cfg.seed)
    P = cfg.population
    iters = cfg.iterations if cfg.budget is None else max(1, (cfg.budget - P) // P)

    def decode(X):
        # scores are continuous, so exact ties (where argpartition's order is arbitrary) do not occur in practice
        if k == n:
            return np.tile(np.arange(n), (len(X), 1))
        return np.sort(np.argpartition(-X, k - 1, axis=1)[:, :k], axis=1)

    X = rng.random((P, n))
    V = rng.uniform(-0.1, 0.1, (P, n))
    teams = decode(X)
    fit = _team_sums(U, teams)
    pbest, pfit = X.copy(), fit.copy()
    g = int(np.argmax(pfit))
    gbest, gfit, gteam = pbest[g].copy(), float(pfit[g]), teams[g].copy()
    evals = P
    trace = np.empty(iters)
    for it in range(iters):
        r1 = rng.random((P, n))
        r2 = rng.random((P, n))
        V = cfg.w * V + cfg.c1 * r1 * (pbest - X) + cfg.c2 * r2 * (gbest - X)
        np.clip(V, -1.0, 1.0, out=V)
        X = X + V
        teams = decode(X)
        f = _team_sums(U, teams)
        evals += P
        imp = f > pfit
        pbest[imp], pfit[imp] = X[imp], f[imp]
        b = int(np.argmax(f))
        if f[b] > gfit:
            gbest, gfit, gteam = X[b].copy(), float(f[b]), teams[b].copy()
        trace[it] = gfit * 2.0 / (k * (k - 1))
    return _finish(ucrg, gteam, gfit, trace, evals, iters)


def sa_recruit(ucrg: Ucrg, cfg: BaselineConfig | None = None) -> SolveResult:
    """Metropolis single-swap annealing with geometric cooling.

    The initial temperature defaults to the starting team's QoD. ``budget``
    (or ``iterations``) is the number of proposals.
    """
    cfg = cfg or BaselineConfig()
    k = _check(ucrg)
    n = ucrg.n
    U = np.ascontiguousarray(ucrg.U, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    team, outs = random_team(n, k, rng)
    if k == n:
        s = team_sum(U, team)
        return _finish(ucrg, team, s, [s * 2.0 / (k * (k - 1))], 1, 0)
    iters = cfg.iterations if cfg.budget is None else max(1, cfg.budget - 1)
    r = U[:, team].sum(axis=1)
    t0 = cfg.t0 if cfg.t0 is not None else qod_of(U, team)
    seed = int(rng.integers(0, 2**63))
    best_team, best, trace = kernels.anneal(U, team, outs, r, iters, t0, cfg.cooling, seed)
    return _finish(ucrg, best_team, float(best), np.asarray(trace) * 2.0 / (k * (k - 1)), iters + 1, iters)


def _descend(U, team, outs, r, cur):
    """Best-improvement single-swap descent; returns the new pair sum and evaluations spent."""
    k, m = len(team), len(outs)
    evals = 0
    while True:
        i, j, gain = kernels.best_swap(U, r, team, outs)
        evals += k * m
        if gain <= 1e-12 * max(1.0, abs(cur)):
            return cur, evals
        a, b = int(team[i]), int(outs[j])
        team[i], outs[j] = b, a
        r += U[:, b] - U[:, a]
        cur += gain


def vns_recruit(ucrg: Ucrg, cfg: BaselineConfig | None = None) -> SolveResult:
    """Variable neighbourhood search: swap-m shakes (m = 1..max_shake) around a swap-1 descent.

    ``iterations`` counts shake-and-descend cycles.
    """
    cfg = cfg or BaselineConfig()
    k = _check(ucrg)
    n = ucrg.n
    U = np.ascontiguousarray(ucrg.U, dtype=np.float64)
    t_start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    team, outs = random_team(n, k, rng)
    if k == n:
        s = team_sum(U, team)
        return _finish(ucrg, team, s, [s * 2.0 / (k * (k - 1))], 1, 0)
    r = U[:, team].sum(axis=1)
    cur, evals = _descend(U, team, outs, r, 0.5 * float(r[team].sum()))
    evals += 1
    best, best_team = cur, team.copy()
    trace = np.empty(cfg.iterations)
    times = np.empty(cfg.iterations)
    m = 1
    for it in range(cfg.iterations):
        t2, o2, r2 = team.copy(), outs.copy(), r.copy()
        mm = min(m, k, n - k)
        for pa, pb in zip(rng.choice(k, mm, replace=False), rng.choice(n - k, mm, replace=False)):
            a, b = int(t2[pa]), int(o2[pb])
            t2[pa], o2[pb] = b, a
            r2 += U[:, b] - U[:, a]
        c2, e = _descend(U, t2, o2, r2, 0.5 * float(r2[t2].sum()))
        evals += e + 1
        if c2 > cur + 1e-12 * max(1.0, abs(cur)):
            team, outs, r, cur = t2, o2, r2, c2
            m = 1
            if cur > best:
                best, best_team = cur, team.copy()
        else:
            m = m + 1 if m < cfg.max_shake else 1
        trace[it] = best * 2.0 / (k * (k - 1))
        times[it] = time.perf_counter() - t_start
    return _finish(ucrg, best_team, best, trace, evals, cfg.iterations, times=times)


def _top(score: np.ndarray, k: int) -> np.ndarray:
    # stable descending order keeps the lower index first on ties
    return np.sort(np.argsort(-np.asarray(score, dtype=np.float64), kind="stable")[:k])


def _one_shot(ucrg: Ucrg, team: np.ndarray) -> SolveResult:
    s = team_sum(ucrg.U, team)
    return _finish(ucrg, team, s, [s * 2.0 / (len(team) * (len(team) - 1))], 1, 1)


def mean_trust(t: np.ndarray) -> np.ndarray:
    """Per-candidate mean of ``(t_ij + t_ji) / 2`` over all other candidates."""
    t = np.asarray(t, dtype=np.float64)
    n = t.shape[0]
    sym = 0.5 * (t + t.T)
    np.fill_diagonal(sym, 0.0)
    return sym.sum(axis=1) / max(1, n - 1)


def gmpl_recruit(ucrg: Ucrg, t: np.ndarray | None = None) -> SolveResult:
    """The candidates with the highest mean trust value to and from the others."""
    k = _check(ucrg)
    t = ucrg.t if t is None else t
    if t is None:
        raise ValueError("GMPL needs directed trust values")
    return _one_shot(ucrg, _top(mean_trust(t), k))


def gmdb_recruit(ucrg: Ucrg) -> SolveResult:
    """The candidates with the highest distance benefit."""
    return _one_shot(ucrg, _top(ucrg.p, _check(ucrg)))


def gmab_recruit(ucrg: Ucrg) -> SolveResult:
    """The candidates with the highest ability benefit."""
    return _one_shot(ucrg, _top(ucrg.a, _check(ucrg)))


def random_recruit(ucrg: Ucrg, seed: int = 0) -> SolveResult:
    k = _check(ucrg)
    rng = np.random.default_rng(seed)
    return _one_shot(ucrg, np.sort(rng.choice(ucrg.n, k, replace=False)).astype(np.int64))
