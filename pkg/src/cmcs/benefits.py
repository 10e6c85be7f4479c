"""Worker benefits, pairwise task-completion effects, QoD and privacy loss.

A task's candidates are the workers within its recruitment range. Each
candidate gets an ability benefit (min-max normalized mileage and task
count, weighted by the task's alpha/beta) and a distance benefit
``exp(-d / kappa)``. A pair's task-completion effect is
``(a_i p_i + a_j p_j) * s_ij``; the complete graph of these effects over the
candidates (the UCRG) is what every recruiter optimizes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .geo import haversine, valid_coordinate


class OutOfRange(ValueError):
    """Distance at or beyond the task's recruitment range."""


class InfeasibleTask(ValueError):
    """Fewer candidates than the requested team size."""


@dataclass(frozen=True)
class Worker:
    id: str
    loc: tuple[float, float]
    len: float = 0.0
    num: int = 0
    trust_node: str | None = None

    def __post_init__(self):
        if self.len < 0 or self.num < 0:
            raise ValueError(f"worker {self.id!r}: negative history")
        if not valid_coordinate(*self.loc):
            raise ValueError(f"worker {self.id!r}: invalid location {self.loc}")


@dataclass(frozen=True)
class Task:
    id: str
    loc: tuple[float, float]
    alpha: float = 0.2
    beta: float = 0.8
    zeta: float = 0.7
    team_size: int = 10
    z: float = 200.0
    kappa: float = 10.0

    def __post_init__(self):
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ValueError("alpha + beta must equal 1")
        if self.team_size < 2:
            raise ValueError("team_size must be at least 2")
        if self.z <= 0 or self.kappa <= 0:
            raise ValueError("z and kappa must be positive")
        if not 0.0 < self.zeta < 1.0:
            raise ValueError("zeta must lie in (0, 1)")
        if not valid_coordinate(*self.loc):
            raise ValueError(f"task {self.id!r}: invalid location {self.loc}")


def candidate_team(task: Task, workers: Iterable[Worker]) -> list[tuple[Worker, float]]:
    """Workers strictly inside the recruitment range, sorted by id, with their distances in km."""
    workers = sorted(workers, key=lambda w: w.id)
    if not workers:
        return []
    lat = np.array([w.loc[0] for w in workers])
    lon = np.array([w.loc[1] for w in workers])
    d = haversine(lat, lon, task.loc[0], task.loc[1])
    return [(w, float(x)) for w, x in zip(workers, d) if x < task.z]


def _minmax(x: np.ndarray) -> np.ndarray:
    span = x.max() - x.min()
    if span <= 0:
        return np.zeros_like(x, dtype=np.float64)
    return (x - x.min()) / span


def normalize_ability(workers: Sequence[Worker]) -> dict[str, tuple[float, float]]:
    """Min-max normalized (len, num) over the given pool; a constant field maps to 0."""
    if not workers:
        raise ValueError("empty worker pool")
    ln = _minmax(np.array([w.len for w in workers], dtype=np.float64))
    nn = _minmax(np.array([w.num for w in workers], dtype=np.float64))
    return {w.id: (float(a), float(b)) for w, a, b in zip(workers, ln, nn)}


def ability_benefit(norms: tuple[float, float], task: Task, epsilon: float = 1.0) -> float:
    len_norm, num_norm = norms
    return epsilon * (task.alpha * len_norm + task.beta * num_norm)


def distance_benefit(d: float, kappa: float, z: float) -> float:
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if d < 0:
        raise ValueError("negative distance")
    if d >= z:
        raise OutOfRange(f"distance {d} km is not below the range {z} km")
    return math.exp(-d / kappa)


def pair_effect(a_i: float, p_i: float, a_j: float, p_j: float, s_ij: float) -> float:
    return (a_i * p_i + a_j * p_j) * s_ij


def trust_benefit_matrix(t: np.ndarray) -> np.ndarray:
    """Symmetric ``(t_ij + t_ji) * exp(-|t_ij - t_ji|)`` for a directed trust-value matrix."""
    t = np.asarray(t, dtype=np.float64)
    tt = t.T
    s = (t + tt) * np.exp(-np.abs(t - tt))
    np.fill_diagonal(s, 0.0)
    return s


@dataclass
class Ucrg:
    """Complete recruitment graph over a task's candidates.

    ``U`` is the dense symmetric effect matrix (zero diagonal); ``s`` the
    trust benefits, ``t`` the directed trust values and ``auc`` the directed
    trust-evaluation accuracies, all aligned with ``members``.
    """

    task: Task
    members: tuple[str, ...]
    U: np.ndarray
    a: np.ndarray
    p: np.ndarray
    d: np.ndarray
    s: np.ndarray
    t: np.ndarray | None = None
    auc: np.ndarray | None = None
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {m: i for i, m in enumerate(self.members)}

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def team_size(self) -> int:
        return self.task.team_size

    @property
    def weight(self) -> dict[tuple[str, str], float]:
        m = self.members
        iu, ju = np.triu_indices(self.n, 1)
        return {(m[i], m[j]): float(self.U[i, j]) for i, j in zip(iu, ju)}

    def ids(self, idx: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.members[i] for i in sorted(int(x) for x in idx))

    def indices(self, team: Iterable[str | int]) -> np.ndarray:
        return np.array(sorted(x if isinstance(x, (int, np.integer)) else self.index[x] for x in team), dtype=np.int64)

    def subset(self, keep: Sequence[int]) -> "Ucrg":
        k = np.asarray(sorted(keep), dtype=np.int64)
        sub = np.ix_(k, k)
        return Ucrg(
            self.task, tuple(self.members[i] for i in k), self.U[sub].copy(), self.a[k], self.p[k], self.d[k],
            self.s[sub].copy(),
            None if self.t is None else self.t[sub].copy(),
            None if self.auc is None else self.auc[sub].copy(),
        )


def build_ucrg(
    task: Task,
    candidates: Sequence[tuple[Worker, float]],
    trust: np.ndarray | Callable[[str, str], float],
    auc: np.ndarray | None = None,
    epsilon: float = 1.0,
    directed: bool = True,
) -> Ucrg:
    """UCRG for ``task`` over ``candidates`` (as returned by :func:`candidate_team`).

    ``trust`` is either a matrix aligned with the candidates or a callable
    ``f(i_id, j_id)``. With ``directed`` it holds trust values t_ij and the
    trust benefit is derived; otherwise it already holds s_ij.
    """
    if len(candidates) < task.team_size:
        raise InfeasibleTask(f"task {task.id!r}: {len(candidates)} candidates for a team of {task.team_size}")
    workers = [w for w, _ in candidates]
    d = np.array([x for _, x in candidates], dtype=np.float64)
    if np.any(d >= task.z):
        raise OutOfRange(f"task {task.id!r}: candidate beyond range")
    norms = normalize_ability(workers)
    a = np.array([ability_benefit(norms[w.id], task, epsilon) for w in workers])
    p = np.exp(-d / task.kappa)
    n = len(workers)
    if callable(trust):
        mat = np.array([[trust(u.id, v.id) if u.id != v.id else 0.0 for v in workers] for u in workers])
    else:
        mat = np.asarray(trust, dtype=np.float64)
        if mat.shape != (n, n):
            raise ValueError(f"trust matrix shape {mat.shape} != ({n}, {n})")
    t = mat if directed else None
    s = trust_benefit_matrix(mat) if directed else mat.copy()
    if np.any(s < 0):
        raise ValueError("negative trust benefit")
    ap = a * p
    U = (ap[:, None] + ap[None, :]) * s
    np.fill_diagonal(U, 0.0)
    return Ucrg(task, tuple(w.id for w in workers), U, a, p, d, s, t, auc)


def team_sum(U: np.ndarray, idx) -> float:
    """Sum of effects over unordered pairs of ``idx``."""
    idx = np.asarray(idx, dtype=np.int64)
    return float(U[np.ix_(idx, idx)].sum() * 0.5)


def qod_of(U: np.ndarray, idx) -> float:
    k = len(idx)
    if k < 2:
        raise ValueError("QoD needs at least two members")
    return team_sum(U, idx) * 2.0 / (k * (k - 1))


def qod(team: Iterable[str | int], ucrg: Ucrg) -> float:
    """Mean effect over ordered member pairs."""
    idx = ucrg.indices(team)
    if len(set(idx.tolist())) != len(idx):
        raise ValueError("duplicate team members")
    return qod_of(ucrg.U, idx)


def privacy_loss(s: np.ndarray, auc: np.ndarray) -> float:
    """``exp(-n / (S * P))`` for a team given its trust-benefit and AUC matrices.

    S sums ``1 - s_ij / 6`` over unordered pairs, P is one minus the product
    of AUC over ordered pairs; a zero product S*P gives 0.
    """
    s = np.asarray(s, dtype=np.float64)
    auc = np.asarray(auc, dtype=np.float64)
    n = s.shape[0]
    if n < 2:
        raise ValueError("privacy loss needs at least two members")
    iu, ju = np.triu_indices(n, 1)
    S = float(np.sum(1.0 - s[iu, ju] / 6.0))
    off = ~np.eye(n, dtype=bool)
    # log-space product keeps large teams from underflowing to an exact 0 too early
    P = -math.expm1(float(np.sum(np.log(auc[off])))) if np.all(auc[off] > 0) else 1.0
    sp_ = S * P
    if sp_ <= 0.0:
        return 0.0
    return math.exp(-n / sp_)


def team_privacy_loss(team: Iterable[str | int], ucrg: Ucrg) -> float:
    if ucrg.auc is None:
        raise ValueError("UCRG carries no pair accuracies")
    idx = ucrg.indices(team)
    sub = np.ix_(idx, idx)
    return privacy_loss(ucrg.s[sub], ucrg.auc[sub])


def write_ucrg_csv(ucrg: Ucrg, path: str | Path) -> None:
    """One row per unordered pair: ``i,j,U_ij,a_i,p_i,a_j,p_j,s_ij``."""
    m = ucrg.members
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "U_ij", "a_i", "p_i", "a_j", "p_j", "s_ij"])
        for i, j in zip(*np.triu_indices(ucrg.n, 1)):
            w.writerow([m[i], m[j], repr(float(ucrg.U[i, j])), repr(float(ucrg.a[i])), repr(float(ucrg.p[i])),
                        repr(float(ucrg.a[j])), repr(float(ucrg.p[j])), repr(float(ucrg.s[i, j]))])


def random_ucrg(n: int, team_size: int, seed: int = 0, zeta: float = 0.7) -> Ucrg:
    """Synthetic UCRG with realistic benefit structure: used for solver benchmarks."""
    rng = np.random.default_rng(seed)
    task = Task(f"rand{seed}", (0.0, 0.0), zeta=zeta, team_size=team_size)
    d = rng.uniform(0.0, 40.0, n)
    a = rng.beta(0.8, 2.0, n)
    levels = rng.choice(4, size=(n, n), p=(0.15, 0.3, 0.35, 0.2))
    t = np.array([0.5, 1.0, 2.0, 3.0])[levels]
    np.fill_diagonal(t, 0.0)
    s = trust_benefit_matrix(t)
    p = np.exp(-d / task.kappa)
    ap = a * p
    U = (ap[:, None] + ap[None, :]) * s
    np.fill_diagonal(U, 0.0)
    auc = np.where(rng.random((n, n)) < 0.05, 1.0, 0.75)
    np.fill_diagonal(auc, 1.0)
    members = tuple(f"w{i:04d}" for i in range(n))
    return Ucrg(task, members, U, a, p, d, s, t, auc)
