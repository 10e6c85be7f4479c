"""Experiment sweeps over a scenario, one CSV row per (algorithm, setting, seed).

DE, PSO and SA get the tabu search's evaluation count on the same
instance and seed as their budget; VNS gets the same iteration count.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..baselines import (
    ALGORITHMS,
    BaselineConfig,
    de_recruit,
    gmab_recruit,
    gmdb_recruit,
    gmpl_recruit,
    pso_recruit,
    random_recruit,
    sa_recruit,
    vns_recruit,
)
from ..benefits import InfeasibleTask, Ucrg, team_privacy_loss
from ..recruit_tsr import SolveResult, TabuConfig, select_collaboration_team, tsr_recruit
from .scenario import Scenario

log = logging.getLogger(__name__)

SWEEPS = ("tasks_6regions", "workers_200_1200", "tasks_sequential", "kappa_10_70", "convergence")
ITERATIVE = ("tsr", "de", "pso", "vns", "sa")
COLUMNS = (
    "sweep", "setting", "algo", "seed", "task_id", "n_candidates", "feasible", "qod", "pl_exec",
    "collab_feasible", "collab_size", "pl_collab", "millis", "evaluations",
)


@dataclass
class SweepConfig:
    tabu: TabuConfig = field(default_factory=TabuConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    match_budget: bool = True
    kappas: tuple[float, ...] = (10, 20, 30, 40, 50, 60, 70)
    worker_steps: tuple[int, ...] = (200, 400, 600, 800, 1000, 1200)
    n_sequential: int = 6
    checkpoints: tuple[int, ...] = (1, 10, 25, 50, 100, 200, 300, 400, 500)


def run_solver(algo: str, ucrg: Ucrg, seed: int, cfg: SweepConfig | None = None,
               budget: int | None = None) -> tuple[SolveResult, float]:
    """Run one recruiter; returns the result and solver-only wall time in ms."""
    cfg = cfg or SweepConfig()
    tabu = replace(cfg.tabu, seed=seed)
    base = replace(cfg.baseline, seed=seed, budget=budget if cfg.match_budget else None)
    fn = {
        "tsr": lambda: tsr_recruit(ucrg, tabu),
        "de": lambda: de_recruit(ucrg, base),
        "pso": lambda: pso_recruit(ucrg, base),
        "sa": lambda: sa_recruit(ucrg, base),
        "vns": lambda: vns_recruit(ucrg, replace(base, iterations=tabu.iterations, budget=None)),
        "gmpl": lambda: gmpl_recruit(ucrg),
        "gmdb": lambda: gmdb_recruit(ucrg),
        "gmab": lambda: gmab_recruit(ucrg),
        "random": lambda: random_recruit(ucrg, seed),
    }.get(algo)
    if fn is None:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")
    t0 = time.perf_counter()
    res = fn()
    return res, (time.perf_counter() - t0) * 1e3


def solve_all(ucrg: Ucrg, algos: Sequence[str], seed: int, cfg: SweepConfig) -> dict[str, tuple[SolveResult, float]]:
    """All requested solvers on one instance, the tabu search first to fix the shared budget."""
    out = {}
    budget = None
    if "tsr" in algos or (cfg.match_budget and any(a in ("de", "pso", "sa") for a in algos)):
        tsr = run_solver("tsr", ucrg, seed, cfg)
        budget = tsr[0].evaluations
        if "tsr" in algos:
            out["tsr"] = tsr
    for a in algos:
        if a != "tsr":
            out[a] = run_solver(a, ucrg, seed, cfg, budget)
    return out


def _row(sweep, setting, algo, seed, task_id, ucrg: Ucrg | None, res: SolveResult | None, millis: float) -> dict:
    row = dict.fromkeys(COLUMNS, "")
    row.update(sweep=sweep, setting=setting, algo=algo, seed=seed, task_id=task_id,
               n_candidates=0 if ucrg is None else ucrg.n, feasible=res is not None)
    if res is None:
        return row
    collab = select_collaboration_team(res.team, ucrg)
    row.update(
        qod=res.qod, pl_exec=team_privacy_loss(res.team, ucrg), collab_feasible=collab.feasible,
        collab_size=len(collab.members), pl_collab=collab.pl, millis=millis, evaluations=res.evaluations,
        members=" ".join(res.ids(ucrg)), collab_members=" ".join(ucrg.ids(collab.members)),
    )
    return row


def _instance(scn: Scenario, task, pool=None, kappa=None) -> Ucrg | None:
    try:
        return scn.ucrg(task, pool, kappa)
    except InfeasibleTask as e:
        log.info("infeasible: %s", e)
        return None


def run_sweep(kind: str, scn: Scenario, algos: Sequence[str], seeds: Iterable[int],
              cfg: SweepConfig | None = None) -> list[dict]:
    cfg = cfg or SweepConfig()
    algos = list(algos)
    seeds = list(seeds)
    for a in algos:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    rows: list[dict] = []

    def emit(setting, task, ucrg, seed):
        if ucrg is None:
            rows.extend(_row(kind, setting, a, seed, task.id, None, None, 0.0) for a in algos)
            return {}
        got = solve_all(ucrg, algos, seed, cfg)
        rows.extend(_row(kind, setting, a, seed, task.id, ucrg, *got[a]) for a in algos)
        return got

    if kind == "tasks_6regions":
        for seed in seeds:
            for n, r in enumerate(scn.regions):
                task = scn.tasks_in(r.id)[0]
                emit(n, task, _instance(scn, task), seed)
    elif kind == "workers_200_1200":
        r = scn.regions[0]
        task = scn.tasks_in(r.id)[0]
        everyone = scn.region_workers[r.id]
        for seed in seeds:
            for m in cfg.worker_steps:
                if m > len(everyone):
                    raise ValueError(f"scenario has {len(everyone)} workers in region {r.id}, step needs {m}")
                emit(m, task, _instance(scn, task, everyone[:m]), seed)
    elif kind == "kappa_10_70":
        # same task and workers at every kappa
        task = scn.tasks_in(scn.regions[0].id)[0]
        for seed in seeds:
            for kappa in cfg.kappas:
                emit(kappa, task, _instance(scn, task, kappa=kappa), seed)
    elif kind == "tasks_sequential":
        r = scn.regions[0]
        tasks = scn.tasks_in(r.id)[: cfg.n_sequential]
        for seed in seeds:
            for a in algos:
                pool = set(scn.region_workers[r.id])
                for n, task in enumerate(tasks):
                    ucrg = _instance(scn, task, pool)
                    if ucrg is None:
                        rows.append(_row(kind, n, a, seed, task.id, None, None, 0.0))
                        continue
                    res, ms = solve_all(ucrg, [a], seed, cfg)[a]
                    rows.append(_row(kind, n, a, seed, task.id, ucrg, res, ms))
                    # a worker takes the next task only after finishing the current one
                    pool -= set(res.ids(ucrg))
    elif kind == "convergence":
        r = scn.regions[0]
        task = scn.tasks_in(r.id)[0]
        ucrg = _instance(scn, task)
        for seed in seeds:
            got = solve_all(ucrg, algos, seed, cfg) if ucrg is not None else {}
            for c in cfg.checkpoints:
                for a in algos:
                    if a not in got:
                        rows.append(_row(kind, c, a, seed, task.id, None, None, 0.0))
                        continue
                    res, ms = got[a]
                    row = _row(kind, c, a, seed, task.id, ucrg, res, ms)
                    if a in ITERATIVE and len(res.trace):
                        i = min(c, len(res.trace)) - 1
                        row["qod"] = float(res.trace[i])
                        if len(res.times):
                            row["millis"] = float(res.times[i]) * 1e3
                    rows.append(row)
    else:
        raise ValueError(f"unknown sweep {kind!r}; choose from {', '.join(SWEEPS)}")
    return rows


def write_csv(rows: Sequence[dict], path: str | Path, columns: Sequence[str] = COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def summarize(rows: Sequence[dict]) -> dict[tuple, float]:
    """Mean QoD per (setting, algo) over feasible rows."""
    acc: dict[tuple, list] = {}
    for r in rows:
        if r["feasible"] and r["qod"] != "":
            acc.setdefault((r["setting"], r["algo"]), []).append(float(r["qod"]))
    return {k: float(np.mean(v)) for k, v in acc.items()}
