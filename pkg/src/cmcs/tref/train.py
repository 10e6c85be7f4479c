"""Training loop, pair evaluation and model persistence."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..embed_init import EmbeddingTable
from ..graph_store import EdgeSplit, TrustGraph, TrustLevel
from .expert import BernoulliConfig, ExpertEdge, estimate_pr, generate_expert_knowledge
from .model import PropagationGraph, TrefModel, TrustState, backward, forward, loss, predict_proba

log = logging.getLogger(__name__)

MODEL_FORMAT = "cmcs-tref"
MODEL_VERSION = 1


@dataclass
class TrainConfig:
    lr: float = 0.01
    dropout: float = 0.0
    l2: float = 1e-5
    epochs: int = 300
    seed: int = 0
    layers: tuple[int, ...] = (64, 64, 64)
    edge_dim: int = 16
    batch_size: int = 1024
    patience: int = 20
    val_fraction: float = 0.1
    pr: float | None = None
    separate_expert: bool = False
    mask_targets: bool = True

    def __post_init__(self):
        self.layers = tuple(self.layers)
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            params[k] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class TrainingDiverged(FloatingPointError):
    def __init__(self, msg, checkpoint: TrefModel):
        super().__init__(msg)
        self.checkpoint = checkpoint


@dataclass
class FittedTrust:
    """A trained model together with everything needed to query it.

    ``graph`` is the propagation graph's real edges (the training edges);
    ``state`` the final node states; ``accuracy`` the exact-match accuracy
    on held-out edges, used as the trust-evaluation accuracy of inferred pairs.
    """

    model: TrefModel
    state: TrustState
    graph: TrustGraph
    experts: list[ExpertEdge] = field(default_factory=list)
    pr: float | None = None
    accuracy: float | None = None
    history: dict = field(default_factory=dict)
    config: TrainConfig | None = None

    def proba(self, src: Sequence[str], dst: Sequence[str]) -> np.ndarray:
        idx = self.state.index
        return predict_proba(self.state, self.model, [idx[u] for u in src], [idx[v] for v in dst])


def build_propagation(g: TrustGraph, triples, experts: Iterable[ExpertEdge] = ()) -> PropagationGraph:
    idx = g.index
    experts = list(experts)
    src = [idx[u] for u, _, _ in triples] + [idx[e.src] for e in experts]
    dst = [idx[v] for _, v, _ in triples] + [idx[e.dst] for e in experts]
    lvl = [int(l) for _, _, l in triples] + [int(e.level) for e in experts]
    is_x = [False] * len(triples) + [True] * len(experts)
    return PropagationGraph(g.n_nodes, src, dst, lvl, is_x)


def _as_arrays(g: TrustGraph, triples):
    idx = g.index
    return (
        np.array([idx[u] for u, _, _ in triples], dtype=np.int64),
        np.array([idx[v] for _, v, _ in triples], dtype=np.int64),
        np.array([int(l) for _, _, l in triples], dtype=np.int64),
    )


def train(
    g: TrustGraph,
    split: EdgeSplit,
    emb: EmbeddingTable,
    cfg: TrainConfig | None = None,
    use_expert: bool = True,
) -> FittedTrust:
    """Fit the network on ``split.train``; ``use_expert=False`` is the plain (TEF) ablation.

    A ``cfg.val_fraction`` slice of the training edges is held out of both
    the loss and message passing and drives early stopping. Expert edges are
    synthesized from the remaining training edges only.
    """
    cfg = cfg or TrainConfig()
    if not split.train:
        raise ValueError("empty training split")
    rng = np.random.default_rng(cfg.seed)
    train_edges = list(split.train)
    val_edges: list = []
    if cfg.val_fraction > 0 and len(train_edges) >= 20:
        order = rng.permutation(len(train_edges))
        n_val = int(round(cfg.val_fraction * len(train_edges)))
        val_edges = [train_edges[i] for i in sorted(order[:n_val])]
        train_edges = [train_edges[i] for i in sorted(order[n_val:])]

    fit_graph = g.subgraph(train_edges)
    experts: list[ExpertEdge] = []
    pr = None
    if use_expert:
        pr = cfg.pr if cfg.pr is not None else estimate_pr(train_edges, g)
        experts = generate_expert_knowledge(fit_graph, BernoulliConfig(pr, cfg.seed))
    prop = build_propagation(g, train_edges, experts)
    X = emb.aligned(g.nodes)
    keep = np.ones(len(prop.src), dtype=bool)

    model = TrefModel.init(X.shape[1], cfg.layers, cfg.edge_dim, cfg.seed, cfg.separate_expert)
    opt = Adam(model.params, lr=cfg.lr)
    tr_src, tr_dst, tr_lab = _as_arrays(g, train_edges)
    va = _as_arrays(g, val_edges) if val_edges else None

    history = {"train_loss": [], "val_loss": []}
    best_val, best_model, stale = np.inf, model.copy(), 0
    last_finite = model.copy()
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(tr_lab))
        total = 0.0
        for s in range(0, len(order), cfg.batch_size):
            b = order[s : s + cfg.batch_size]
            batch_prop = prop
            if cfg.mask_targets:
                # the labelled edges of this batch must not feed their own features
                keep[b] = False
                batch_prop = prop.restrict(keep)
                keep[b] = True
            try:
                state = forward(batch_prop, X, model, g.nodes, cfg.dropout, rng)
            except FloatingPointError as e:
                raise TrainingDiverged(str(e), last_finite) from e
            value, grads = backward(batch_prop, state, model, tr_src[b], tr_dst[b], tr_lab[b], cfg.l2)
            if not np.isfinite(value):
                raise TrainingDiverged(f"loss became {value} at epoch {epoch + 1}", last_finite)
            opt.step(model.params, grads)
            total += value * len(b)
        if not model.check_finite():
            raise TrainingDiverged(f"non-finite parameters after epoch {epoch + 1}", last_finite)
        last_finite = model.copy()
        history["train_loss"].append(total / len(order))
        if va is not None:
            st = forward(prop, X, model, g.nodes)
            vl = loss(predict_proba(st, model, va[0], va[1]), va[2], 0.0)
            history["val_loss"].append(vl)
            if vl < best_val - 1e-12:
                best_val, best_model, stale = vl, model.copy(), 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    log.info("early stop at epoch %d (best val %.4f)", epoch + 1, best_val)
                    break
        else:
            best_model = model
    model = best_model
    state = forward(prop, X, model, g.nodes)
    fitted = FittedTrust(model, state, fit_graph, experts, pr, None, history, cfg)
    if split.test:
        fitted.accuracy = exact_match_accuracy(fitted, split.test)
    return fitted


def exact_match_accuracy(fitted: FittedTrust, triples) -> float:
    triples = list(triples)
    p = fitted.proba([u for u, _, _ in triples], [v for _, v, _ in triples])
    return float(np.mean(np.argmax(p, axis=1) == np.array([int(l) for _, _, l in triples])))


def evaluate_pairs(fitted: FittedTrust, pairs: Iterable[tuple[str, str]]) -> dict[tuple[str, str], TrustLevel]:
    """Predicted level for ordered pairs that have no direct edge in the training graph."""
    pairs = list(pairs)
    for u, v in pairs:
        if fitted.graph.has_edge(u, v):
            raise ValueError(f"pair ({u!r}, {v!r}) has a direct trust edge")
    if not pairs:
        return {}
    p = fitted.proba([u for u, _ in pairs], [v for _, v in pairs])
    return {pair: TrustLevel(int(k)) for pair, k in zip(pairs, np.argmax(p, axis=1))}


def save_model(fitted: FittedTrust, path: str | Path) -> None:
    """Write a versioned ``.npz`` archive; layout documented in the README."""
    m = fitted.model
    meta = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "in_dim": m.in_dim,
        "layer_dims": list(m.layer_dims),
        "edge_dim": m.edge_dim,
        "separate_expert": m.separate_expert,
        "pr": fitted.pr,
        "accuracy": fitted.accuracy,
        "config": asdict(fitted.config) if fitted.config else None,
        "n_experts": len(fitted.experts),
    }
    arrays = {f"param/{k}": v for k, v in m.params.items()}
    g = fitted.graph
    with open(path, "wb") as fh:
        np.savez(
            fh,
            meta=np.array(json.dumps(meta)),
            nodes=np.array(g.nodes, dtype=object).astype(str),
            edge_src=g.src, edge_dst=g.dst, edge_level=g.levels,
            h_out=fitted.state.final_out, h_in=fitted.state.final_in,
            **arrays,
        )


def load_model(path: str | Path) -> FittedTrust:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a TREF model file")
        if meta["version"] > MODEL_VERSION:
            raise ValueError(f"{path}: model version {meta['version']} is newer than supported {MODEL_VERSION}")
        params = {k[len("param/"):]: z[k] for k in z.files if k.startswith("param/")}
        nodes = tuple(str(u) for u in z["nodes"])
        edges = {
            (nodes[a], nodes[b]): TrustLevel(int(l))
            for a, b, l in zip(z["edge_src"], z["edge_dst"], z["edge_level"])
        }
        h_out, h_in = z["h_out"], z["h_in"]
    model = TrefModel(meta["in_dim"], tuple(meta["layer_dims"]), meta["edge_dim"], meta["separate_expert"], params)
    state = TrustState([h_out], [h_in], nodes)
    cfg = TrainConfig(**meta["config"]) if meta.get("config") else None
    return FittedTrust(model, state, TrustGraph(edges, nodes), [], meta.get("pr"), meta.get("accuracy"), {}, cfg)
