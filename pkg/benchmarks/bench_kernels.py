"""Compiled vs pure-Python kernel timings.

    python benchmarks/bench_kernels.py [--repeat 3]

Prints one line per kernel with the best-of-``repeat`` wall time for each
available backend and the speed-up.
"""

import argparse
import time

import numpy as np

from cmcs.benefits import random_ucrg
from cmcs.harness.synthetic import blobs, trust_graph
from cmcs.kernels import backends


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    g = trust_graph(2000, 16000, seed=0)
    indptr, indices = g.undirected_csr()
    starts = np.repeat(np.arange(g.n_nodes, dtype=np.int64), 2)
    seeds = np.arange(1, len(starts) + 1, dtype=np.uint64)
    walks = None

    def walk(k):
        nonlocal walks
        walks = k.random_walks(indptr, indices, starts, seeds, 40, 1.0, 0.5)

    def sgns(k):
        rng = np.random.default_rng(0)
        vin = np.ascontiguousarray(rng.uniform(-0.5 / 64, 0.5 / 64, (g.n_nodes, 64)))
        vout = np.zeros_like(vin)
        table = rng.integers(0, g.n_nodes, 100_000).astype(np.int64)
        k.sgns_train(walks, vin, vout, table, 5, 5, 1, 0.025, np.uint64(7))

    pts, _ = blobs(10, 20_000, 1.0, seed=0)
    cents = pts[:100].copy()
    U = np.ascontiguousarray(random_ucrg(200, 10, seed=0).U)
    team = np.arange(10, dtype=np.int64)
    outs = np.arange(10, 200, dtype=np.int64)
    r = U[:, team].sum(axis=1)
    U12 = np.ascontiguousarray(random_ucrg(16, 5, seed=0).U)

    def anneal(k):
        t, o, rr = team.copy(), outs.copy(), r.copy()
        k.anneal(U, t, o, rr, 20_000, 0.1, 0.999, 3)

    return [
        ("random_walks (4000 x 40, q=0.5)", walk),
        ("sgns_train (1 epoch, dim 64)", sgns),
        ("nearest_centroid (200k x 100)", lambda k: k.nearest_centroid(pts, cents)),
        ("best_swap x1000 (200 cand, k=10)", lambda k: [k.best_swap(U, r, team, outs) for _ in range(1000)]),
        ("best_subset C(16,5)", lambda k: k.best_subset(U12, 5)),
        ("anneal (20k proposals)", anneal),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    impls = backends()
    names = list(impls)
    print(f"{'kernel':36s}" + "".join(f"{n:>12s}" for n in names) + ("     speed-up" if len(names) > 1 else ""))
    for label, fn in cases():
        times = [best_of(lambda: fn(impls[n]), args.repeat) for n in names]
        line = f"{label:36s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(times) > 1:
            line += f"  {times[1] / times[0]:10.1f}x"
        print(line)


if __name__ == "__main__":
    main()
