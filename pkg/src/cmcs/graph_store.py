"""Trust graphs, edge splits and check-in data."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np
import pandas as pd

from .geo import haversine

log = logging.getLogger(__name__)


class TrustLevel(IntEnum):
    OBSERVER = 0
    APPRENTICE = 1
    JOURNEYER = 2
    MASTER = 3

    @classmethod
    def parse(cls, token: str) -> "TrustLevel":
        return cls[token.strip().upper()]

    @property
    def value_real(self) -> float:
        return float(TRUST_VALUES[self])

    def one_hot(self) -> np.ndarray:
        v = np.zeros(N_LEVELS)
        v[self] = 1.0
        return v


N_LEVELS = 4
TRUST_VALUES = np.array([0.5, 1.0, 2.0, 3.0])


class GraphFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LoadReport:
    lines: int = 0
    self_loops: int = 0
    duplicates: int = 0


class TrustGraph:
    """Directed trust graph with 4-level edge labels.

    Node ids are opaque strings; ``index`` interns them (sorted order) to dense
    integers used by every matrix in the package. Instances are treated as
    immutable once built.
    """

    def __init__(self, edges: Mapping[tuple[str, str], TrustLevel], nodes: Iterable[str] = ()):
        node_set = set(nodes)
        clean: dict[tuple[str, str], TrustLevel] = {}
        for (u, v), lvl in edges.items():
            if u == v:
                raise ValueError(f"self-loop on {u!r}")
            clean[(u, v)] = TrustLevel(lvl)
            node_set.add(u)
            node_set.add(v)
        self.nodes: tuple[str, ...] = tuple(sorted(node_set))
        self.index: dict[str, int] = {u: i for i, u in enumerate(self.nodes)}
        self.edges: dict[tuple[str, str], TrustLevel] = dict(sorted(clean.items()))
        out_index: dict[str, set] = {u: set() for u in self.nodes}
        in_index: dict[str, set] = {u: set() for u in self.nodes}
        for (u, v), lvl in self.edges.items():
            out_index[u].add((v, lvl))
            in_index[v].add((u, lvl))
        self.out_index = {u: frozenset(s) for u, s in out_index.items()}
        self.in_index = {u: frozenset(s) for u, s in in_index.items()}
        self.load_report: LoadReport | None = None

        m = len(self.edges)
        self.src = np.fromiter((self.index[u] for u, _ in self.edges), dtype=np.int64, count=m)
        self.dst = np.fromiter((self.index[v] for _, v in self.edges), dtype=np.int64, count=m)
        self.levels = np.fromiter((int(l) for l in self.edges.values()), dtype=np.int64, count=m)

    @classmethod
    def from_triples(cls, triples: Iterable[tuple[str, str, TrustLevel | str]], nodes: Iterable[str] = ()):
        edges = {}
        for u, v, lvl in triples:
            edges[(u, v)] = TrustLevel.parse(lvl) if isinstance(lvl, str) else TrustLevel(lvl)
        return cls(edges, nodes)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def in_degree(self, u: str) -> int:
        return len(self.in_index[u])

    def out_degree(self, u: str) -> int:
        return len(self.out_index[u])

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self.edges

    def level(self, u: str, v: str) -> TrustLevel:
        return self.edges[(u, v)]

    def triples(self) -> list[tuple[str, str, TrustLevel]]:
        return [(u, v, l) for (u, v), l in self.edges.items()]

    def subgraph(self, triples: Iterable[tuple[str, str, TrustLevel]]) -> "TrustGraph":
        """Graph on the same node set restricted to ``triples``."""
        return TrustGraph({(u, v): l for u, v, l in triples}, self.nodes)

    def density(self) -> float:
        n = self.n_nodes
        return 2.0 * self.n_edges / (n * (n - 1)) if n > 1 else 0.0

    def average_degree(self) -> float:
        return 2.0 * self.n_edges / self.n_nodes if self.n_nodes else 0.0

    def stats(self) -> dict:
        return {
            "nodes": self.n_nodes,
            "edges": self.n_edges,
            "density": self.density(),
            "average_degree": self.average_degree(),
        }

    def undirected_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted, de-duplicated undirected adjacency as (indptr, indices)."""
        n = self.n_nodes
        a = np.concatenate([self.src, self.dst])
        b = np.concatenate([self.dst, self.src])
        key = np.unique(a * n + b)
        a, b = key // n, key % n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, a + 1, 1)
        return np.cumsum(indptr), b.astype(np.int64)

    def __eq__(self, other) -> bool:
        return isinstance(other, TrustGraph) and self.nodes == other.nodes and self.edges == other.edges

    def __repr__(self) -> str:
        return f"TrustGraph(nodes={self.n_nodes}, edges={self.n_edges})"


def load_trust_graph(path: str | Path) -> TrustGraph:
    """Read a ``src<TAB>dst<TAB>level`` edge list.

    Blank lines and lines starting with ``#`` or ``%`` are skipped. Self-loops
    are dropped and duplicate ordered pairs keep the last occurrence; both are
    counted in ``graph.load_report``.
    """
    edges: dict[tuple[str, str], TrustLevel] = {}
    loops = dups = lines = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith(("#", "%")):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise GraphFormatError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
            u, v, tok = parts
            try:
                lvl = TrustLevel.parse(tok)
            except KeyError:
                raise GraphFormatError(f"line {lineno}: unknown trust level {tok!r}") from None
            lines += 1
            if u == v:
                loops += 1
                continue
            if (u, v) in edges:
                dups += 1
            edges[(u, v)] = lvl
    g = TrustGraph(edges)
    g.load_report = LoadReport(lines=lines, self_loops=loops, duplicates=dups)
    if loops or dups:
        log.warning("%s: dropped %d self-loops, %d duplicate pairs", path, loops, dups)
    log.info("%s: %d nodes, %d edges", path, g.n_nodes, g.n_edges)
    return g


def save_trust_graph(g: TrustGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (u, v), lvl in g.edges.items():
            fh.write(f"{u}\t{v}\t{lvl.name.lower()}\n")


@dataclass(frozen=True)
class EdgeSplit:
    train: tuple[tuple[str, str, TrustLevel], ...]
    test: tuple[tuple[str, str, TrustLevel], ...]
    seed: int


def split_edges(g: TrustGraph, train_fraction: float, seed: int) -> EdgeSplit:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    triples = g.triples()
    order = np.random.default_rng(seed).permutation(len(triples))
    n_train = int(round(train_fraction * len(triples)))
    train = tuple(sorted(triples[i] for i in order[:n_train]))
    test = tuple(sorted(triples[i] for i in order[n_train:]))
    return EdgeSplit(train=train, test=test, seed=seed)


@dataclass(frozen=True)
class CheckIn:
    user: str
    time: pd.Timestamp
    lat: float
    lon: float


@dataclass
class CheckIns:
    """Column-backed sequence of :class:`CheckIn` records."""

    frame: pd.DataFrame
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.frame)

    def __iter__(self) -> Iterator[CheckIn]:
        for row in self.frame.itertuples(index=False):
            yield CheckIn(row.user_id, row.timestamp, row.lat, row.lon)

    def __getitem__(self, i: int) -> CheckIn:
        row = self.frame.iloc[i]
        return CheckIn(row.user_id, row.timestamp, row.lat, row.lon)

    def points(self) -> np.ndarray:
        """(lat, lon) array."""
        return self.frame[["lat", "lon"]].to_numpy(dtype=np.float64)

    @classmethod
    def from_records(cls, records: Iterable[CheckIn]) -> "CheckIns":
        rows = [(c.user, pd.Timestamp(c.time), c.lat, c.lon) for c in records]
        frame = pd.DataFrame(rows, columns=["user_id", "timestamp", "lat", "lon"])
        return cls(_validate_coords(frame)[0])


def _validate_coords(frame: pd.DataFrame) -> tuple[pd.DataFrame, int]:
    ok = frame["lat"].between(-90.0, 90.0) & frame["lon"].between(-180.0, 180.0)
    return frame[ok].reset_index(drop=True), int((~ok).sum())


def load_checkins(path: str | Path, fmt: str = "csv") -> CheckIns:
    """Load check-ins.

    ``fmt="csv"`` expects the header ``user_id,timestamp,lat,lon`` with ISO-8601
    timestamps. ``fmt="snap"`` reads the raw SNAP Gowalla/Brightkite dumps
    (``user<TAB>time<TAB>lat<TAB>lon<TAB>location``). Rows with out-of-range
    coordinates are dropped and counted in ``dropped``.
    """
    if fmt == "csv":
        frame = pd.read_csv(path, dtype={"user_id": str, "timestamp": str})
        missing = {"user_id", "timestamp", "lat", "lon"} - set(frame.columns)
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        frame = frame[["user_id", "timestamp", "lat", "lon"]]
    elif fmt == "snap":
        frame = pd.read_csv(
            path, sep="\t", header=None, usecols=[0, 1, 2, 3],
            names=["user_id", "timestamp", "lat", "lon"], dtype={"user_id": str, "timestamp": str},
        )
    else:
        raise ValueError(f"unknown check-in format {fmt!r}")
    stamps = pd.to_datetime(frame["timestamp"], utc=True, format="ISO8601", errors="coerce")
    bad = stamps.isna().to_numpy().nonzero()[0]
    if len(bad):
        row = int(bad[0])
        raise ValueError(f"{path}: malformed timestamp {frame['timestamp'].iloc[row]!r} on data row {row + 1}")
    frame = frame.assign(timestamp=stamps, lat=frame["lat"].astype(float), lon=frame["lon"].astype(float))
    frame, dropped = _validate_coords(frame)
    if dropped:
        log.warning("%s: dropped %d rows with invalid coordinates", path, dropped)
    return CheckIns(frame, dropped)


def worker_history(checkins: CheckIns | Iterable[CheckIn]) -> dict[str, tuple[float, int]]:
    """Per-user (total km between consecutive check-ins, check-in count)."""
    if not isinstance(checkins, CheckIns):
        checkins = CheckIns.from_records(checkins)
    f = checkins.frame
    if f.empty:
        return {}
    f = f.sort_values(["user_id", "timestamp"], kind="stable")
    users = f["user_id"].to_numpy()
    lat = f["lat"].to_numpy()
    lon = f["lon"].to_numpy()
    step = np.zeros(len(f))
    same = users[1:] == users[:-1]
    step[1:] = np.where(same, haversine(lat[:-1], lon[:-1], lat[1:], lon[1:]), 0.0)
    agg = pd.DataFrame({"user": users, "km": step}).groupby("user", sort=True)["km"].agg(["sum", "count"])
    return {u: (float(s), int(c)) for u, s, c in zip(agg.index, agg["sum"], agg["count"])}
