"""Tabu-search recruitment, cross-task conflict resolution and collaboration teams.

The search works on candidate indices of a :class:`~cmcs.benefits.Ucrg`.
For the incumbent team T it keeps ``r[x] = sum_{j in T} U[x, j]`` so the
pair-sum gain of swapping member a for outsider b is
``r[b] - U[a, b] - r[a]`` and a swap updates ``r`` in O(n).
"""

from __future__ import annotations

import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .benefits import InfeasibleTask, Ucrg, privacy_loss, qod_of, team_sum

log = logging.getLogger(__name__)

FULL_NEIGHBOURHOOD_MAX = 60
BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True)
class TabuConfig:
    iterations: int = 500
    tenure: int = 200
    neighborhood_sample: int = 512
    full_max: int = FULL_NEIGHBOURHOOD_MAX
    restart_after: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.tenure < 1:
            raise ValueError("tenure must be >= 1")
        if self.neighborhood_sample < 1:
            raise ValueError("neighborhood_sample must be >= 1")


@dataclass
class SolveResult:
    """A recruited team (sorted candidate indices) and how it was found.

    ``trace`` holds the best QoD after each iteration and ``times`` the
    seconds elapsed at that point; ``evaluations`` counts candidate teams
    scored, the unit used to match budgets across solvers.
    """

    team: np.ndarray
    qod: float
    trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    evaluations: int = 0
    iterations: int = 0
    restarts: int = 0
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def ids(self, ucrg: Ucrg) -> tuple[str, ...]:
        return ucrg.ids(self.team)

    def time_to(self, target: float) -> float:
        """Seconds until the best QoD first reached ``target``; inf if it never did."""
        hit = np.flatnonzero(self.trace >= target - 1e-12 * max(1.0, abs(target)))
        if len(hit) == 0 or len(self.times) == 0:
            return float("inf")
        return float(self.times[hit[0]])


def _check(ucrg: Ucrg, k: int | None = None) -> int:
    k = ucrg.team_size if k is None else k
    if k < 2:
        raise ValueError("team size must be at least 2")
    if ucrg.n < k:
        raise InfeasibleTask(f"task {ucrg.task.id!r}: {ucrg.n} candidates for a team of {k}")
    return k


def _finish(ucrg: Ucrg, team, pair_sum: float, trace, evals, iters, restarts=0, times=None) -> SolveResult:
    team = np.sort(np.asarray(team, dtype=np.int64))
    q = qod_of(ucrg.U, team)
    k = len(team)
    if abs(pair_sum * 2.0 / (k * (k - 1)) - q) > 1e-9 * max(1.0, abs(q)):
        raise AssertionError(f"incremental QoD drifted: {pair_sum * 2.0 / (k * (k - 1))} vs {q}")
    times = np.zeros(0) if times is None else np.asarray(times, dtype=np.float64)
    return SolveResult(team, q, np.asarray(trace, dtype=np.float64), evals, iters, restarts, times)


def random_team(n: int, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(n).astype(np.int64)
    return np.ascontiguousarray(perm[:k]), np.ascontiguousarray(perm[k:])


def tsr_recruit(ucrg: Ucrg, cfg: TabuConfig | None = None, k: int | None = None) -> SolveResult:
    """Tabu search over single-swap neighbourhoods.

    Each iteration takes the best neighbour (all swaps for small pools, a
    uniform sample otherwise) and moves there only if it strictly improves
    the incumbent and is not tabu. When no move is accepted the search
    restarts from a fresh random team: immediately with the full
    neighbourhood (the incumbent is a local optimum), after
    ``restart_after`` idle iterations when sampling.
    """
    cfg = cfg or TabuConfig()
    k = _check(ucrg, k)
    n = ucrg.n
    U = np.ascontiguousarray(ucrg.U, dtype=np.float64)
    if k == n:
        full = np.arange(n, dtype=np.int64)
        s = team_sum(U, full)
        return _finish(ucrg, full, s, np.full(cfg.iterations, s * 2.0 / (k * (k - 1))), 1, 0)

    t_start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    scale = 2.0 / (k * (k - 1))
    sampled = n > cfg.full_max
    n_swaps = k * (n - k)
    tabu: deque = deque()
    tabu_set: set = set()

    def remember(team):
        key = tuple(sorted(team.tolist()))
        if key in tabu_set:
            return
        tabu.append(key)
        tabu_set.add(key)
        if len(tabu) > cfg.tenure:
            tabu_set.discard(tabu.popleft())

    team, outs = random_team(n, k, rng)
    r = U[:, team].sum(axis=1)
    cur = 0.5 * float(r[team].sum())
    best, best_team = cur, team.copy()
    remember(team)
    trace = np.empty(cfg.iterations)
    times = np.empty(cfg.iterations)
    evals = 1
    idle = restarts = 0
    sampling = sampled and cfg.neighborhood_sample < n_swaps
    m = cfg.neighborhood_sample
    block = 64
    for it in range(cfg.iterations):
        if sampling:
            if it % block == 0:
                # swap samples drawn a block of iterations at a time; per-call RNG overhead dominates otherwise
                draws = rng.integers(0, n_swaps, (min(block, cfg.iterations - it), m), dtype=np.int64)
                pos_a_blk, pos_b_blk = np.divmod(draws, n - k)
            pos_a, pos_b = pos_a_blk[it % block], pos_b_blk[it % block]
            i, j, gain = kernels.best_swap_sampled(U, r, team, outs, pos_a, pos_b)
            evals += m
        else:
            i, j, gain = kernels.best_swap(U, r, team, outs)
            evals += n_swaps
        moved = False
        if gain > 1e-12 * max(1.0, abs(cur)):
            a, b = int(team[i]), int(outs[j])
            team[i], outs[j] = b, a
            if tuple(sorted(team.tolist())) in tabu_set:
                team[i], outs[j] = a, b
            else:
                r += U[:, b] - U[:, a]
                cur += gain
                remember(team)
                moved = True
        if moved:
            idle = 0
            if cur > best:
                best, best_team = cur, team.copy()
        else:
            idle += 1
            if not sampled or idle >= cfg.restart_after:
                team, outs = random_team(n, k, rng)
                r = U[:, team].sum(axis=1)
                cur = 0.5 * float(r[team].sum())
                remember(team)
                evals += 1
                idle = 0
                restarts += 1
                if cur > best:
                    best, best_team = cur, team.copy()
        trace[it] = best * scale
        times[it] = time.perf_counter() - t_start
    return _finish(ucrg, best_team, best, trace, evals, cfg.iterations, restarts, times)


def brute_force_recruit(ucrg: Ucrg, k: int | None = None) -> SolveResult:
    """Exact maximizer by enumeration; ties go to the lexicographically first team."""
    k = _check(ucrg, k)
    if math.comb(ucrg.n, k) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"C({ucrg.n}, {k}) exceeds the enumeration limit {BRUTE_FORCE_LIMIT}")
    idx, total = kernels.best_subset(np.ascontiguousarray(ucrg.U, dtype=np.float64), k)
    return _finish(ucrg, idx, float(total), [], math.comb(ucrg.n, k), 1)


@dataclass
class CollaborationTeam:
    members: tuple[int, ...]
    pl: float
    feasible: bool
    removed: tuple[int, ...] = ()
    pl_path: tuple[float, ...] = ()


def select_collaboration_team(team: Sequence[int], ucrg: Ucrg, zeta: float | None = None) -> CollaborationTeam:
    """Drop the least-trusted member until privacy loss is within ``zeta``.

    The least-trusted member has the lowest mean trust benefit to the rest
    of the current team (ties: lowest index). Stops at two members; if the
    loss is still above ``zeta`` the result is infeasible and empty.
    """
    if ucrg.auc is None:
        raise ValueError("UCRG carries no pair accuracies")
    zeta = ucrg.task.zeta if zeta is None else zeta
    cur = sorted(int(x) for x in team)
    if len(cur) < 2:
        raise ValueError("a collaboration team needs at least two members")
    removed: list[int] = []

    def pl_of(members):
        sub = np.ix_(members, members)
        return privacy_loss(ucrg.s[sub], ucrg.auc[sub])

    pl = pl_of(cur)
    path = [pl]
    while pl > zeta and len(cur) > 2:
        sub = ucrg.s[np.ix_(cur, cur)]
        mean_s = sub.sum(axis=1) / (len(cur) - 1)
        drop = int(np.argmin(mean_s))
        removed.append(cur.pop(drop))
        pl = pl_of(cur)
        path.append(pl)
    if pl <= zeta:
        return CollaborationTeam(tuple(cur), pl, True, tuple(removed), tuple(path))
    return CollaborationTeam((), pl, False, tuple(removed), tuple(path))


@dataclass
class RecruitmentOutcome:
    task_id: str
    execution_team: tuple[str, ...]
    collaboration_team: tuple[str, ...]
    qod: float
    pl: float
    feasible: bool
    iterations_used: int = 0
    best_qod_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    millis: float = 0.0


def recruit(ucrg: Ucrg, cfg: TabuConfig | None = None) -> RecruitmentOutcome:
    """TSR followed by collaboration-team selection for one task."""
    t0 = time.perf_counter()
    res = tsr_recruit(ucrg, cfg)
    millis = (time.perf_counter() - t0) * 1e3
    collab = select_collaboration_team(res.team, ucrg)
    return RecruitmentOutcome(
        ucrg.task.id, res.ids(ucrg), ucrg.ids(collab.members), res.qod, collab.pl, collab.feasible,
        res.iterations, res.trace, millis,
    )


@dataclass
class Resolution:
    teams: dict[str, tuple[str, ...]]
    unfilled: set[str]
    rounds: int
    bound: dict[str, str]


def resolve_conflicts(
    teams: Mapping[str, Sequence[str]],
    ucrgs: Mapping[str, Ucrg],
    cfg: TabuConfig | None = None,
) -> Resolution:
    """Make execution teams pairwise disjoint.

    Each round takes the smallest-id worker sitting in two or more teams and
    binds it to the team where its summed effect with teammates is largest
    (ties: smallest task id). Every losing task re-runs the tabu search over
    its candidates minus all workers bound to other tasks; a task left with
    too few candidates is marked unfilled.
    """
    cfg = cfg or TabuConfig()
    cur = {t: tuple(sorted(m)) for t, m in teams.items()}
    unfilled: set[str] = set()
    bound: dict[str, str] = {}
    rounds = 0
    while True:
        owners: dict[str, list[str]] = {}
        for t in sorted(cur):
            for w in cur[t]:
                owners.setdefault(w, []).append(t)
        conflicts = sorted(w for w, ts in owners.items() if len(ts) > 1)
        if not conflicts:
            break
        rounds += 1
        w = conflicts[0]

        def effect(t):
            g = ucrgs[t]
            i = g.index[w]
            return float(sum(g.U[i, g.index[x]] for x in cur[t] if x != w))

        contenders = owners[w]
        effects = {t: effect(t) for t in contenders}
        best_eff = max(effects.values())
        winner = min(t for t in contenders if effects[t] == best_eff)
        bound[w] = winner
        log.debug("worker %s bound to task %s (round %d)", w, winner, rounds)
        for t in contenders:
            if t == winner:
                continue
            g = ucrgs[t]
            excluded = {x for x, owner in bound.items() if owner != t}
            keep = [i for i, m in enumerate(g.members) if m not in excluded]
            if len(keep) < g.team_size:
                cur[t] = ()
                unfilled.add(t)
                log.info("task %s unfilled after conflict resolution", t)
                continue
            sub = g.subset(keep)
            res = tsr_recruit(sub, cfg)
            cur[t] = res.ids(sub)
    return Resolution(cur, unfilled, rounds, bound)
