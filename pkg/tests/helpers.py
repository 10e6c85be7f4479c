"""Instance builders shared by the test modules."""

import numpy as np

from cmcs.benefits import Task, Ucrg, Worker, build_ucrg
from cmcs.geo import haversine


def make_ucrg(U, s=None, auc=None, t=None, a=None, p=None, team_size=2, zeta=0.7, ids=None):
    """Ucrg straight from matrices, for solver tests that do not need geography."""
    U = np.asarray(U, dtype=np.float64)
    n = len(U)
    s = np.full((n, n), 6.0) if s is None else np.asarray(s, dtype=np.float64)
    if auc is None:
        auc = np.full((n, n), 0.5)
    auc = np.asarray(auc, dtype=np.float64)
    ids = tuple(ids) if ids else tuple(f"w{i + 1}" for i in range(n))
    task = Task("t", (0.0, 0.0), team_size=team_size, zeta=zeta)
    a = np.ones(n) if a is None else np.asarray(a)
    p = np.ones(n) if p is None else np.asarray(p)
    return Ucrg(task, ids, U, a, p, np.zeros(n), s, t, auc)


def geo_ucrg(n=12, team_size=4, seed=0, kappa=10.0):
    """Ucrg built through the public pipeline from random workers near the task."""
    rng = np.random.default_rng(seed)
    task = Task("t0", (40.0, -75.0), team_size=team_size, kappa=kappa)
    workers = [
        Worker(f"w{i:03d}", (40.0 + rng.uniform(-0.3, 0.3), -75.0 + rng.uniform(-0.3, 0.3)),
               float(rng.uniform(0, 500)), int(rng.integers(0, 50)), f"n{i}")
        for i in range(n)
    ]
    t = np.array([0.5, 1.0, 2.0, 3.0])[rng.integers(0, 4, (n, n))]
    np.fill_diagonal(t, 0.0)
    auc = np.where(rng.random((n, n)) < 0.1, 1.0, 0.8)
    cands = [(w, float(haversine(w.loc[0], w.loc[1], *task.loc))) for w in workers]
    return build_ucrg(task, cands, t, auc)


# acceptance results, printed by the terminal-summary hook in conftest
ACCEPTANCE: dict[int, str] = {}


def record(n: int, status: str, detail: str) -> str:
    line = f"criterion {n:2d}: {status:7s} {detail}"
    ACCEPTANCE[n] = line
    print(line)
    return line
