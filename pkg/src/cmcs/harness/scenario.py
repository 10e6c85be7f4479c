"""Recruitment scenarios: workers and tasks placed in regions, bound to trust nodes.

Workers are drawn uniformly inside their region's bounding box, take a
mileage/task-count history from a random check-in user and are mapped
one-to-one onto trust-graph nodes. Pairwise trust inside a region comes
from observed edges where they exist and from the trained trust model
otherwise; the matching accuracies (1 for observed, the model's held-out
accuracy for inferred) feed the privacy loss.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..benefits import Task, Ucrg, Worker, build_ucrg, candidate_team
from ..graph_store import TRUST_VALUES, CheckIns, TrustGraph, worker_history
from ..region_partition import Region
from ..tref.train import FittedTrust

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScenarioParams:
    workers_per_region: int = 200
    n_regions: int = 6
    tasks_per_region: int = 1
    alpha: float = 0.2
    beta: float = 0.8
    kappa: float = 10.0
    z: float = 200.0
    team_size: int = 10
    zeta: float = 0.7
    epsilon: float = 1.0


@dataclass
class RegionTrust:
    """Directed trust values, observed-edge mask and accuracies among one region's workers."""

    workers: tuple[str, ...]
    t: np.ndarray
    observed: np.ndarray
    auc: np.ndarray


@dataclass
class Scenario:
    regions: list[Region]
    workers: dict[str, Worker]
    region_workers: dict[int, tuple[str, ...]]
    tasks: list[Task]
    task_region: dict[str, int]
    trust: dict[int, RegionTrust]
    params: ScenarioParams
    seed: int
    accuracy: float
    meta: dict = field(default_factory=dict)

    def region(self, rid: int) -> Region:
        return next(r for r in self.regions if r.id == rid)

    def tasks_in(self, rid: int) -> list[Task]:
        return [t for t in self.tasks if self.task_region[t.id] == rid]

    def ucrg(self, task: Task, pool: Sequence[str] | None = None, kappa: float | None = None) -> Ucrg:
        """UCRG for ``task`` over its region's workers (optionally a subset ``pool``)."""
        rid = self.task_region[task.id]
        rt = self.trust[rid]
        if kappa is not None:
            task = replace(task, kappa=kappa)
        ids = rt.workers if pool is None else tuple(sorted(pool))
        pos = {w: i for i, w in enumerate(rt.workers)}
        cands = candidate_team(task, [self.workers[w] for w in ids])
        loc = np.array([pos[w.id] for w, _ in cands], dtype=np.int64)
        sub = np.ix_(loc, loc)
        return build_ucrg(task, cands, rt.t[sub], rt.auc[sub], epsilon=self.params.epsilon)


def _pair_levels(fitted: FittedTrust, src_idx: np.ndarray, dst_idx: np.ndarray) -> np.ndarray:
    """Argmax level for every (src, dst) combination; the head is linear so logits split per side."""
    W = fitted.model.params["W_fc"]
    d = fitted.state.final_out.shape[1]
    left = fitted.state.final_out[src_idx] @ W[:, :d].T
    right = fitted.state.final_in[dst_idx] @ W[:, d:].T
    return np.argmax(left[:, None, :] + right[None, :, :], axis=2)


def region_trust(g: TrustGraph, fitted: FittedTrust, nodes: Sequence[str], workers: Sequence[str]) -> RegionTrust:
    m = len(nodes)
    missing = [u for u in nodes if u not in g.index or u not in fitted.state.index]
    if missing:
        raise ValueError(f"trust nodes not in the graph or model: {missing[:5]}")
    gidx = np.array([g.index[u] for u in nodes], dtype=np.int64)
    local = np.full(g.n_nodes, -1, dtype=np.int64)
    local[gidx] = np.arange(m)
    levels = np.full((m, m), -1, dtype=np.int64)
    a, b = local[g.src], local[g.dst]
    ok = (a >= 0) & (b >= 0)
    levels[a[ok], b[ok]] = g.levels[ok]
    observed = levels >= 0
    fidx = np.array([fitted.state.index[u] for u in nodes], dtype=np.int64)
    pred = _pair_levels(fitted, fidx, fidx)
    levels = np.where(observed, levels, pred)
    t = TRUST_VALUES[levels]
    np.fill_diagonal(t, 0.0)
    acc = fitted.accuracy if fitted.accuracy is not None else 1.0
    if not 0.0 < acc <= 1.0:
        raise ValueError(f"trust-model accuracy {acc} outside (0, 1]")
    auc = np.where(observed, 1.0, acc)
    np.fill_diagonal(auc, 1.0)
    np.fill_diagonal(observed, False)
    return RegionTrust(tuple(workers), t, observed, auc)


def _usable(r: Region) -> bool:
    return r.n_points >= 2 and r.lat_max > r.lat_min and r.lon_max > r.lon_min


def build_scenario(
    g: TrustGraph,
    fitted: FittedTrust,
    checkins: CheckIns,
    regions: Sequence[Region],
    params: ScenarioParams | None = None,
    seed: int = 0,
) -> Scenario:
    """Seeded scenario over ``params.n_regions`` randomly chosen non-degenerate regions."""
    params = params or ScenarioParams()
    rng = np.random.default_rng(seed)
    usable = sorted((r for r in regions if _usable(r)), key=lambda r: r.id)
    if len(usable) < params.n_regions:
        raise ValueError(f"only {len(usable)} usable regions for {params.n_regions} requested")
    chosen = sorted(rng.choice(len(usable), params.n_regions, replace=False).tolist())
    active = [usable[i] for i in chosen]
    n_workers = params.workers_per_region * params.n_regions
    if n_workers > g.n_nodes:
        raise ValueError(f"{n_workers} workers exceed the {g.n_nodes} trust-graph nodes")
    nodes = [g.nodes[i] for i in rng.permutation(g.n_nodes)[:n_workers]]
    hist = worker_history(checkins)
    users = sorted(hist)
    if not users:
        raise ValueError("no check-in histories")
    pick = rng.choice(len(users), n_workers, replace=n_workers > len(users))

    workers: dict[str, Worker] = {}
    region_workers: dict[int, tuple[str, ...]] = {}
    tasks: list[Task] = []
    task_region: dict[str, int] = {}
    trust: dict[int, RegionTrust] = {}
    w = 0
    for r in active:
        locs = r.sample(rng, params.workers_per_region)
        ids = []
        for loc in locs:
            wid = f"w{w:05d}"
            length, num = hist[users[pick[w]]]
            workers[wid] = Worker(wid, (float(loc[0]), float(loc[1])), float(length), int(num), nodes[w])
            ids.append(wid)
            w += 1
        region_workers[r.id] = tuple(ids)
        for j, loc in enumerate(r.sample(rng, params.tasks_per_region)):
            tid = f"r{r.id:03d}t{j:02d}"
            tasks.append(Task(tid, (float(loc[0]), float(loc[1])), params.alpha, params.beta, params.zeta,
                              params.team_size, params.z, params.kappa))
            task_region[tid] = r.id
        trust[r.id] = region_trust(g, fitted, [workers[i].trust_node for i in ids], ids)
    acc = fitted.accuracy if fitted.accuracy is not None else 1.0
    log.info("scenario: %d regions, %d workers, %d tasks", len(active), len(workers), len(tasks))
    return Scenario(active, workers, region_workers, tasks, task_region, trust, params, seed, acc)
