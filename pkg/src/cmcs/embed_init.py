"""Initial node embeddings: Node2Vec walks + skip-gram, and a seeded fallback."""

from __future__ import annotations

import csv
import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .graph_store import TrustGraph

MAGIC = b"CMCSEMB\x01"


def _node_seed(seed: int, node: str, salt: int = 0) -> int:
    h = hashlib.blake2b(f"{seed}\x1f{node}\x1f{salt}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


@dataclass
class EmbeddingTable:
    """One row of ``matrix`` per node, in ``nodes`` order."""

    dim: int
    nodes: tuple[str, ...]
    matrix: np.ndarray
    losses: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.shape != (len(self.nodes), self.dim):
            raise ValueError(f"matrix shape {self.matrix.shape} != ({len(self.nodes)}, {self.dim})")
        if not np.isfinite(self.matrix).all():
            raise ValueError("embedding contains non-finite values")
        self._row = {u: i for i, u in enumerate(self.nodes)}

    @property
    def vectors(self) -> dict[str, np.ndarray]:
        return {u: self.matrix[i] for i, u in enumerate(self.nodes)}

    def __getitem__(self, node: str) -> np.ndarray:
        return self.matrix[self._row[node]]

    def __contains__(self, node: str) -> bool:
        return node in self._row

    def __len__(self) -> int:
        return len(self.nodes)

    def aligned(self, nodes: Sequence[str]) -> np.ndarray:
        """Rows for ``nodes`` in the given order (KeyError on a missing node)."""
        return self.matrix[[self._row[u] for u in nodes]]


def deterministic_init(nodes: TrustGraph | Iterable[str], dim: int, seed: int = 0) -> EmbeddingTable:
    """Uniform values in [-1/dim, 1/dim], reproducible per (node id, seed)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    ids = tuple(nodes.nodes) if isinstance(nodes, TrustGraph) else tuple(nodes)
    bound = 1.0 / dim
    mat = np.empty((len(ids), dim))
    for i, u in enumerate(ids):
        mat[i] = np.random.default_rng(_node_seed(seed, u)).uniform(-bound, bound, dim)
    return EmbeddingTable(dim, ids, mat)


def _walk_matrix(g: TrustGraph, p, q, walk_len, walks_per_node, seed):
    if g.n_nodes == 0:
        raise ValueError("cannot walk an empty graph")
    if walk_len < 2:
        raise ValueError("walk_len must be >= 2")
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive")
    indptr, indices = g.undirected_csr()
    deg = np.diff(indptr)
    starts = np.flatnonzero(deg > 0)
    all_starts = np.tile(starts, walks_per_node)
    rounds = np.repeat(np.arange(walks_per_node), len(starts))
    seeds = np.array(
        [_node_seed(seed, g.nodes[s], r + 1) for s, r in zip(all_starts.tolist(), rounds.tolist())],
        dtype=np.uint64,
    )
    return kernels.random_walks(indptr, indices, all_starts.astype(np.int64), seeds, int(walk_len), float(p), float(q))


def generate_walks(
    g: TrustGraph,
    p: float = 1.0,
    q: float = 1.0,
    walk_len: int = 40,
    walks_per_node: int = 10,
    seed: int = 0,
) -> list[list[str]]:
    """Node2Vec biased walks over the undirected view of ``g``.

    ``walks_per_node`` walks start at every non-isolated node. A walk only
    stops early at a dead end, which cannot happen on an undirected graph
    once it has left an isolated node, so in practice every walk has
    ``walk_len`` steps.
    """
    mat = _walk_matrix(g, p, q, walk_len, walks_per_node, seed)
    nodes = g.nodes
    return [[nodes[i] for i in row if i >= 0] for row in mat.tolist()]


def _negative_table(counts: np.ndarray, size: int) -> np.ndarray:
    w = counts.astype(np.float64) ** 0.75
    cdf = np.cumsum(w / w.sum())
    return np.searchsorted(cdf, (np.arange(size) + 0.5) / size).astype(np.int64)


def train_skipgram(
    walks: Sequence[Sequence[str]],
    dim: int = 128,
    window: int = 5,
    negatives: int = 5,
    epochs: int = 3,
    lr: float = 0.025,
    seed: int = 0,
) -> EmbeddingTable:
    """Skip-gram with negative sampling over node walks.

    The input vectors start from :func:`deterministic_init`; output vectors
    start at zero. Per-epoch mean loss is kept on ``table.losses``.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not walks:
        raise ValueError("no walks to train on")
    vocab = tuple(sorted({u for w in walks for u in w}))
    row = {u: i for i, u in enumerate(vocab)}
    width = max(len(w) for w in walks)
    mat = np.full((len(walks), width), -1, dtype=np.int64)
    for i, w in enumerate(walks):
        mat[i, : len(w)] = [row[u] for u in w]
    return _train(mat, vocab, dim, window, negatives, epochs, lr, seed)


def _train(mat, vocab, dim, window, negatives, epochs, lr, seed) -> EmbeddingTable:
    init = deterministic_init(vocab, dim, seed)
    vin = init.matrix.copy()
    vout = np.zeros_like(vin)
    counts = np.bincount(mat[mat >= 0], minlength=len(vocab))
    table = _negative_table(counts, max(10_000, 100 * len(vocab)))
    losses = kernels.sgns_train(
        mat, vin, vout, table, int(window), int(negatives), int(epochs), float(lr),
        np.uint64(_node_seed(seed, "sgns")),
    )
    losses = np.asarray(losses)
    if not np.isfinite(losses).all() or not np.isfinite(vin).all():
        raise FloatingPointError("skip-gram training diverged")
    return EmbeddingTable(dim, vocab, vin, losses)


def node2vec(
    g: TrustGraph,
    dim: int = 128,
    p: float = 1.0,
    q: float = 1.0,
    walk_len: int = 40,
    walks_per_node: int = 10,
    window: int = 5,
    negatives: int = 5,
    epochs: int = 3,
    lr: float = 0.025,
    seed: int = 0,
) -> EmbeddingTable:
    """Full pipeline; isolated nodes get :func:`deterministic_init` vectors."""
    mat = _walk_matrix(g, p, q, walk_len, walks_per_node, seed)
    used = np.unique(mat[mat >= 0])
    remap = np.full(g.n_nodes, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    mat = np.where(mat >= 0, remap[np.maximum(mat, 0)], -1)
    vocab = tuple(g.nodes[i] for i in used)
    trained = _train(mat, vocab, dim, window, negatives, epochs, lr, seed)
    full = deterministic_init(g, dim, seed).matrix
    full[used] = trained.matrix
    return EmbeddingTable(dim, g.nodes, full, trained.losses)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Binary layout: magic(8) | dim u32 | count u32 | count x (len u32, id utf-8, dim f64), little endian."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", table.dim, len(table.nodes)))
        for u, vec in zip(table.nodes, table.matrix):
            raw = u.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(np.asarray(vec, dtype="<f8").tobytes())


def load_embeddings(path: str | Path) -> EmbeddingTable:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path}: not an embedding file")
        dim, count = struct.unpack("<II", fh.read(8))
        nodes, rows = [], np.empty((count, dim))
        for i in range(count):
            (n,) = struct.unpack("<I", fh.read(4))
            nodes.append(fh.read(n).decode("utf-8"))
            rows[i] = np.frombuffer(fh.read(8 * dim), dtype="<f8")
    return EmbeddingTable(dim, tuple(nodes), rows)


def export_csv(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node"] + [f"v{i}" for i in range(table.dim)])
        for u, vec in zip(table.nodes, table.matrix):
            w.writerow([u] + [repr(float(x)) for x in vec])
