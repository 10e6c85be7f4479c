"""Command-line entry point: ``cmcs <command> ...``.

Every command takes ``--seed``, ``--out`` and ``--config`` (a JSON file
whose sections ``embed``, ``train``, ``tabu``, ``baseline``, ``scenario``
and ``sweep`` override the matching defaults).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import ALGORITHMS, BaselineConfig
from .benefits import InfeasibleTask, Task, Worker, build_ucrg, candidate_team, random_ucrg, write_ucrg_csv
from .embed_init import export_csv, load_embeddings, node2vec, save_embeddings
from .graph_store import TrustLevel, load_checkins, load_trust_graph, split_edges
from .harness import synthetic
from .harness.metrics import evaluate
from .harness.scenario import ScenarioParams, build_scenario, region_trust
from .harness.sweeps import SWEEPS, SweepConfig, run_sweep, solve_all, write_csv
from .recruit_tsr import TabuConfig, resolve_conflicts, select_collaboration_team, tsr_recruit
from .region_partition import load_regions, partition, save_regions
from .tref.train import TrainConfig, evaluate_pairs, load_model, save_model, train

log = logging.getLogger("cmcs")


def _load_config(path) -> dict:
    if not path:
        return {}
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise SystemExit(f"{path}: config must be a JSON object")
    return data


def _section(cls, cfg: dict, name: str, **override):
    """Build dataclass ``cls`` from config section ``name``; explicit CLI values win."""
    raw = dict(cfg.get(name, {}))
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise SystemExit(f"config section {name!r}: unknown keys {sorted(unknown)}")
    raw.update({k: v for k, v in override.items() if v is not None})
    return cls(**raw)


def _emit(obj, out):
    text = json.dumps(obj, indent=2, default=float)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def cmd_graph(a, cfg):
    g = load_trust_graph(a.trust)
    stats = g.stats()
    stats["load_report"] = asdict(g.load_report) if g.load_report else None
    _emit(stats, a.out)


def cmd_embed(a, cfg):
    g = load_trust_graph(a.trust)
    opts = dict(cfg.get("embed", {}))
    for k in ("dim", "p", "q", "walk_len", "walks_per_node", "window", "epochs"):
        v = getattr(a, k)
        if v is not None:
            opts[k] = v
    t0 = time.perf_counter()
    table = node2vec(g, seed=a.seed, **opts)
    log.info("embedded %d nodes in %.1fs, epoch losses %s", len(table), time.perf_counter() - t0, table.losses)
    out = a.out or "embeddings.bin"
    if a.csv:
        export_csv(table, out)
    else:
        save_embeddings(table, out)
    print(f"wrote {len(table)} x {table.dim} embeddings to {out}")


def cmd_trust_train(a, cfg):
    g = load_trust_graph(a.trust)
    emb = load_embeddings(a.emb)
    tc = _section(TrainConfig, cfg, "train", seed=a.seed, epochs=a.epochs, lr=a.lr)
    split = split_edges(g, a.train_fraction, a.seed)
    fitted = train(g, split, emb, tc, use_expert=not a.no_expert)
    probs = fitted.proba([u for u, _, _ in split.test], [v for _, v, _ in split.test])
    rep = evaluate(probs, [int(l) for _, _, l in split.test])
    save_model(fitted, a.out or "model.npz")
    _emit({"pr": fitted.pr, "experts": len(fitted.experts), **rep.as_dict()}, None)


def _read_pairs(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                rows.append(line.split("\t") if "\t" in line else line.split())
    return rows


def cmd_trust_eval(a, cfg):
    fitted = load_model(a.model)
    rows = _read_pairs(a.pairs)
    if rows and all(len(r) >= 3 for r in rows):
        probs = fitted.proba([r[0] for r in rows], [r[1] for r in rows])
        rep = evaluate(probs, [int(TrustLevel.parse(r[2])) for r in rows])
        _emit(rep.as_dict(), a.out)
        return
    levels = evaluate_pairs(fitted, [(r[0], r[1]) for r in rows])
    out = open(a.out, "w", newline="") if a.out else sys.stdout
    w = csv.writer(out)
    w.writerow(["src", "dst", "level"])
    for (u, v), lvl in levels.items():
        w.writerow([u, v, lvl.name.lower()])
    if a.out:
        out.close()


def cmd_partition(a, cfg):
    ci = load_checkins(a.checkins, a.format)
    pts = ci.points()
    if a.sample and a.sample < len(pts):
        pts = pts[np.sort(np.random.default_rng(a.seed).choice(len(pts), a.sample, replace=False))]
    t0 = time.perf_counter()
    regions, res = partition(pts, k=a.k, batch=a.batch, seed=a.seed, max_iter=a.max_iter)
    save_regions(regions, a.out or "regions.json")
    print(f"{len(regions)} regions from {len(pts)} points, inertia {res.inertia:.6g} km^2, "
          f"{res.n_iter} batches, {time.perf_counter() - t0:.1f}s")


def _workers(path) -> list[dict]:
    return json.loads(Path(path).read_text())


def cmd_recruit(a, cfg):
    fitted = load_model(a.trust)
    g = load_trust_graph(a.graph) if a.graph else fitted.graph
    tabu = _section(TabuConfig, cfg, "tabu", iterations=a.iters, seed=a.seed)
    tasks_raw = json.loads(Path(a.tasks).read_text())
    workers_raw = _workers(a.workers)
    if a.region is not None:
        tasks_raw = [t for t in tasks_raw if t.get("region", a.region) == a.region]
        workers_raw = [w for w in workers_raw if w.get("region", a.region) == a.region]
    workers = sorted(
        (Worker(str(w["id"]), tuple(w["loc"]), float(w.get("len", 0.0)), int(w.get("num", 0)), str(w["trust_node"]))
         for w in workers_raw),
        key=lambda w: w.id,
    )
    rt = region_trust(g, fitted, [w.trust_node for w in workers], [w.id for w in workers])
    pos = {w.id: i for i, w in enumerate(workers)}
    ucrgs, teams, millis, unfilled = {}, {}, {}, set()
    for t in tasks_raw:
        task = Task(str(t["id"]), tuple(t["loc"]), **{k: t[k] for k in
                    ("alpha", "beta", "zeta", "team_size", "z", "kappa") if k in t})
        cands = candidate_team(task, workers)
        loc = np.array([pos[w.id] for w, _ in cands], dtype=np.int64)
        try:
            ucrg = build_ucrg(task, cands, rt.t[np.ix_(loc, loc)], rt.auc[np.ix_(loc, loc)])
        except InfeasibleTask as e:
            log.warning("%s", e)
            unfilled.add(task.id)
            continue
        if a.dump_ucrg:
            Path(a.dump_ucrg).mkdir(parents=True, exist_ok=True)
            write_ucrg_csv(ucrg, Path(a.dump_ucrg) / f"{task.id}.csv")
        t0 = time.perf_counter()
        res = tsr_recruit(ucrg, tabu)
        millis[task.id] = (time.perf_counter() - t0) * 1e3
        ucrgs[task.id], teams[task.id] = ucrg, res.ids(ucrg)
    resolved = resolve_conflicts(teams, ucrgs, tabu)
    out = open(a.out or "outcomes.csv", "w", newline="")
    w = csv.writer(out)
    w.writerow(["task_id", "members", "collab_members", "qod", "pl", "feasible", "millis"])
    for t in tasks_raw:
        tid = str(t["id"])
        team = resolved.teams.get(tid, ())
        if tid in unfilled or tid in resolved.unfilled or not team:
            w.writerow([tid, "", "", "", "", False, repr(millis.get(tid, 0.0))])
            continue
        ucrg = ucrgs[tid]
        idx = ucrg.indices(team)
        collab = select_collaboration_team(idx, ucrg)
        q = float(ucrg.U[np.ix_(idx, idx)].sum() / (len(idx) * (len(idx) - 1)))
        w.writerow([tid, " ".join(team), " ".join(ucrg.ids(collab.members)), repr(q), repr(collab.pl),
                    collab.feasible, repr(millis[tid])])
    out.close()
    print(f"{len(tasks_raw)} tasks, {len(resolved.unfilled | unfilled)} unfilled, {resolved.rounds} conflict rounds")


def cmd_bench(a, cfg):
    algos = _algos(a.algos)
    sc = SweepConfig(tabu=_section(TabuConfig, cfg, "tabu", iterations=a.iters),
                     baseline=_section(BaselineConfig, cfg, "baseline"))
    rows = []
    for inst in range(a.instances):
        ucrg = random_ucrg(a.candidates, a.team_size, seed=a.seed * 100003 + inst)
        for seed in range(a.seeds):
            got = solve_all(ucrg, algos, seed, sc)
            for algo in algos:
                res, ms = got[algo]
                rows.append({"algo": algo, "instance": inst, "seed": seed, "qod": res.qod,
                             "millis": ms, "evaluations": res.evaluations})
    with open(a.out or "bench.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["algo", "instance", "seed", "qod", "millis", "evaluations"])
        w.writeheader()
        w.writerows(rows)
    for algo in algos:
        q = [r["qod"] for r in rows if r["algo"] == algo]
        ms = [r["millis"] for r in rows if r["algo"] == algo]
        print(f"{algo:7s} mean QoD {np.mean(q):.4f}  mean {np.mean(ms):.1f} ms")


def _algos(text) -> list[str]:
    algos = [x.strip().lower() for x in text.split(",") if x.strip()]
    bad = [x for x in algos if x not in ALGORITHMS]
    if bad:
        raise SystemExit(f"unknown algorithms {bad}; choose from {', '.join(ALGORITHMS)}")
    return algos


def cmd_simulate(a, cfg):
    params = _section(ScenarioParams, cfg, "scenario")
    if a.sweep == "workers_200_1200":
        params = replace(params, n_regions=1, workers_per_region=max(params.workers_per_region, 1200))
    if a.sweep == "tasks_sequential":
        params = replace(params, tasks_per_region=max(params.tasks_per_region, 6))
    if a.synthetic:
        n_nodes = max(1500, params.workers_per_region * params.n_regions + 100)
        g = synthetic.trust_graph(n_nodes, 8 * n_nodes, seed=a.seed)
        ci = synthetic.checkins(3000, seed=a.seed)
    else:
        if not (a.trust_graph and a.checkins):
            raise SystemExit("--trust-graph and --checkins are required unless --synthetic is given")
        g = load_trust_graph(a.trust_graph)
        ci = load_checkins(a.checkins, a.format)
    if a.model:
        fitted = load_model(a.model)
    else:
        from .embed_init import deterministic_init

        log.info("no --model: training a small trust model on deterministic embeddings")
        tc = _section(TrainConfig, cfg, "train", seed=a.seed)
        fitted = train(g, split_edges(g, 0.8, a.seed), deterministic_init(g, 32, a.seed), tc)
    regions = load_regions(a.regions) if a.regions else partition(ci.points(), k=a.k, seed=a.seed)[0]
    scn = build_scenario(g, fitted, ci, regions, params, seed=a.seed)
    sc = _section(SweepConfig, {}, "sweep")
    sc = replace(sc, tabu=_section(TabuConfig, cfg, "tabu"), baseline=_section(BaselineConfig, cfg, "baseline"))
    rows = run_sweep(a.sweep, scn, _algos(a.algos), range(a.seeds), sc)
    write_csv(rows, a.out or f"{a.sweep}.csv")
    print(f"wrote {len(rows)} rows to {a.out or a.sweep + '.csv'}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmcs", description="Trust-aware worker recruitment toolkit")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")
        sp.add_argument("--config", help="JSON file with per-component overrides")
        sp.set_defaults(fn=fn)
        return sp

    sp = add("graph", cmd_graph, "load a trust graph and print its statistics")
    sp.add_argument("--trust", required=True)

    sp = add("embed", cmd_embed, "node2vec embeddings for a trust graph")
    sp.add_argument("--trust", required=True)
    sp.add_argument("--dim", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--walk-len", dest="walk_len", type=int)
    sp.add_argument("--walks", dest="walks_per_node", type=int)
    sp.add_argument("--window", type=int)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--csv", action="store_true", help="write CSV instead of the binary format")

    sp = add("trust-train", cmd_trust_train, "train the trust evaluation model")
    sp.add_argument("--trust", required=True)
    sp.add_argument("--emb", required=True)
    sp.add_argument("--train-fraction", type=float, default=0.8)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--no-expert", action="store_true", help="train without synthesized expert edges")

    sp = add("trust-eval", cmd_trust_eval, "score labelled edges or predict levels for pairs")
    sp.add_argument("--model", required=True)
    sp.add_argument("--pairs", required=True, help="TSV of src dst [level]")

    sp = add("partition", cmd_partition, "mini-batch k-means regions from check-ins")
    sp.add_argument("--checkins", required=True)
    sp.add_argument("--format", choices=("csv", "snap"), default="csv")
    sp.add_argument("--k", type=int, default=100)
    sp.add_argument("--batch", type=int, default=3100)
    sp.add_argument("--max-iter", type=int, default=100)
    sp.add_argument("--sample", type=int, help="subsample this many check-ins first")

    sp = add("recruit", cmd_recruit, "recruit teams for tasks with tabu search")
    sp.add_argument("--tasks", required=True)
    sp.add_argument("--workers", required=True)
    sp.add_argument("--trust", required=True, help="trained model file")
    sp.add_argument("--graph", help="trust graph for observed edges (default: the model's training edges)")
    sp.add_argument("--region", type=int)
    sp.add_argument("--iters", type=int, default=500)
    sp.add_argument("--dump-ucrg", help="directory for per-task UCRG CSV dumps")

    sp = add("bench", cmd_bench, "compare recruiters on random instances")
    sp.add_argument("--algos", default=",".join(ALGORITHMS))
    sp.add_argument("--instances", type=int, default=10)
    sp.add_argument("--candidates", type=int, default=200)
    sp.add_argument("--team-size", type=int, default=10)
    sp.add_argument("--seeds", type=int, default=1)
    sp.add_argument("--iters", type=int, default=500)

    sp = add("simulate", cmd_simulate, "run an experiment sweep")
    sp.add_argument("--sweep", choices=SWEEPS, required=True)
    sp.add_argument("--synthetic", action="store_true", help="use generated trust and check-in data")
    sp.add_argument("--trust-graph")
    sp.add_argument("--checkins")
    sp.add_argument("--format", choices=("csv", "snap"), default="csv")
    sp.add_argument("--model")
    sp.add_argument("--regions", help="regions JSON from 'cmcs partition'")
    sp.add_argument("--k", type=int, default=100)
    sp.add_argument("--algos", default=",".join(ALGORITHMS))
    sp.add_argument("--seeds", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args.config)
        args.fn(args, cfg)
    except (ValueError, KeyError, OSError) as e:
        if args.verbose:
            raise
        print(f"cmcs {args.command}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
