"""Two-channel trust convolution network with an edge-classification head.

Each layer keeps an *active* (out-edge) and a *passive* (in-edge) state per
node. A node's active state aggregates, over its out-neighbours v, the
concatenation of v's previous active state with an embedding of the edge's
trust level; the passive state does the same over in-neighbours. Both use
degree-mean aggregation, an affine map and ReLU. The head scores an ordered
pair (u, v) from ``[h_out[u], h_in[v]]``.

Gradients are written out by hand; ``tests/test_tref_gradients.py`` checks
them against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ..graph_store import N_LEVELS, TrustLevel

CHANNELS = ("out", "in")


class PropagationGraph:
    """Normalized adjacency and per-node mean edge-level one-hots for both channels.

    ``edges`` are (src_idx, dst_idx, level, is_expert) over ``n`` nodes.
    """

    def __init__(self, n: int, src, dst, level, expert=None):
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        level = np.asarray(level, dtype=np.int64)
        expert = np.zeros(len(src), dtype=bool) if expert is None else np.asarray(expert, dtype=bool)
        self.n = n
        self.src, self.dst, self.level, self.expert = src, dst, level, expert
        self.A: dict[str, sp.csr_matrix] = {}
        self.F: dict[str, np.ndarray] = {}
        self.Fx: dict[str, np.ndarray] = {}
        for ch, (row, col) in {"out": (src, dst), "in": (dst, src)}.items():
            deg = np.bincount(row, minlength=n).astype(np.float64)
            inv = np.divide(1.0, deg, out=np.zeros(n), where=deg > 0)
            w = inv[row]
            self.A[ch] = sp.csr_matrix((w, (row, col)), shape=(n, n))
            real = ~expert
            F = np.zeros((n, N_LEVELS))
            np.add.at(F, (row[real], level[real]), w[real])
            Fx = np.zeros((n, N_LEVELS))
            np.add.at(Fx, (row[expert], level[expert]), w[expert])
            self.F[ch] = F
            self.Fx[ch] = Fx
        self.AT = {ch: a.T.tocsr() for ch, a in self.A.items()}
        self.has_expert = bool(expert.any())

    def restrict(self, keep: np.ndarray) -> "PropagationGraph":
        """Same node set with only the edges where ``keep`` is true."""
        return PropagationGraph(self.n, self.src[keep], self.dst[keep], self.level[keep], self.expert[keep])


@dataclass
class TrefModel:
    """All trainable parameters.

    Per layer ``l`` and channel ``c`` in {out, in}: ``l{l}.We_{c}`` edge-level
    embedding (edge_dim x 4), optional ``l{l}.Wx_{c}`` for expert edges,
    ``l{l}.W_{c}`` aggregation weights (d_l x (d_{l-1} + edge_dim)) and
    ``l{l}.b_{c}``. ``W_fc`` is the 4 x 2*d_L head.
    """

    in_dim: int
    layer_dims: tuple[int, ...]
    edge_dim: int = 16
    separate_expert: bool = False
    params: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def init(cls, in_dim: int, layer_dims: Sequence[int] = (64, 64, 64), edge_dim: int = 16,
             seed: int = 0, separate_expert: bool = False) -> "TrefModel":
        rng = np.random.default_rng(seed)

        def glorot(rows, cols):
            lim = np.sqrt(6.0 / (rows + cols))
            return rng.uniform(-lim, lim, (rows, cols))

        params = {}
        prev = in_dim
        for l, d in enumerate(layer_dims, 1):
            for ch in CHANNELS:
                params[f"l{l}.We_{ch}"] = glorot(edge_dim, N_LEVELS)
                if separate_expert:
                    params[f"l{l}.Wx_{ch}"] = glorot(edge_dim, N_LEVELS)
                params[f"l{l}.W_{ch}"] = glorot(d, prev + edge_dim)
                params[f"l{l}.b_{ch}"] = np.zeros(d)
            prev = d
        params["W_fc"] = glorot(N_LEVELS, 2 * prev)
        return cls(in_dim, tuple(layer_dims), edge_dim, separate_expert, params)

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims)

    def copy(self) -> "TrefModel":
        return TrefModel(self.in_dim, self.layer_dims, self.edge_dim, self.separate_expert,
                         {k: v.copy() for k, v in self.params.items()})

    def l2(self) -> float:
        return float(sum(np.sum(v * v) for v in self.params.values()))

    def check_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.params.values())


@dataclass
class TrustState:
    """Per-layer active (``h_out``) and passive (``h_in``) node states; index 0 is the input."""

    h_out: list[np.ndarray]
    h_in: list[np.ndarray]
    nodes: tuple[str, ...] = ()
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.index = {u: i for i, u in enumerate(self.nodes)}

    @property
    def final_out(self) -> np.ndarray:
        return self.h_out[-1]

    @property
    def final_in(self) -> np.ndarray:
        return self.h_in[-1]


def forward(prop: PropagationGraph, X: np.ndarray, model: TrefModel, nodes: Sequence[str] = (),
            dropout: float = 0.0, rng: np.random.Generator | None = None) -> TrustState:
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (prop.n, model.in_dim):
        raise ValueError(f"embedding shape {X.shape} != ({prop.n}, {model.in_dim})")
    P = model.params
    states = {ch: [X] for ch in CHANNELS}
    cache: dict = {}
    for l in range(1, model.n_layers + 1):
        for ch in CHANNELS:
            H = states[ch][-1]
            M = prop.A[ch] @ H
            E = prop.F[ch] @ P[f"l{l}.We_{ch}"].T
            if model.separate_expert:
                E = E + prop.Fx[ch] @ P[f"l{l}.Wx_{ch}"].T
            else:
                E = E + prop.Fx[ch] @ P[f"l{l}.We_{ch}"].T
            cat = np.hstack([M, E])
            Z = cat @ P[f"l{l}.W_{ch}"].T + P[f"l{l}.b_{ch}"]
            Hn = np.maximum(Z, 0.0)
            mask = None
            if dropout > 0.0:
                keep = 1.0 - dropout
                mask = (rng.random(Hn.shape) < keep) / keep
                Hn = Hn * mask
            if not np.isfinite(Hn).all():
                bad = int(np.argwhere(~np.isfinite(Hn))[0, 0])
                who = nodes[bad] if len(nodes) > bad else bad
                raise FloatingPointError(f"non-finite activation at layer {l}, channel {ch}, node {who!r}")
            cache[(l, ch)] = (cat, Z, mask)
            states[ch].append(Hn)
    return TrustState(states["out"], states["in"], tuple(nodes), cache)


def head_logits(state: TrustState, model: TrefModel, src_idx, dst_idx) -> np.ndarray:
    feats = np.hstack([state.final_out[src_idx], state.final_in[dst_idx]])
    return feats @ model.params["W_fc"].T


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict_proba(state: TrustState, model: TrefModel, src_idx, dst_idx) -> np.ndarray:
    return softmax(head_logits(state, model, np.atleast_1d(src_idx), np.atleast_1d(dst_idx)))


def predict_level(state: TrustState, model: TrefModel, src: str, dst: str) -> tuple[np.ndarray, TrustLevel]:
    """Distribution over the four levels and its argmax (ties toward the lower level)."""
    try:
        i, j = state.index[src], state.index[dst]
    except KeyError as e:
        raise KeyError(f"unknown node {e.args[0]!r}") from None
    p = predict_proba(state, model, i, j)[0]
    return p, TrustLevel(int(np.argmax(p)))


def loss(probs: np.ndarray, labels, lam: float, model: TrefModel | None = None) -> float:
    """Mean cross-entropy of the true levels plus ``lam * ||params||^2``."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    p_true = np.clip(probs[np.arange(len(labels)), labels], 1e-12, None)
    ce = float(-np.log(p_true).mean())
    if lam and model is not None:
        ce += lam * model.l2()
    return ce


def backward(prop: PropagationGraph, state: TrustState, model: TrefModel,
             src_idx, dst_idx, labels, lam: float) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and gradient of :func:`loss` w.r.t. every parameter, for one batch of labelled pairs."""
    P = model.params
    src_idx = np.asarray(src_idx)
    dst_idx = np.asarray(dst_idx)
    labels = np.asarray(labels)
    B = len(labels)
    d_last = model.layer_dims[-1]
    feats = np.hstack([state.final_out[src_idx], state.final_in[dst_idx]])
    probs = softmax(feats @ P["W_fc"].T)
    value = loss(probs, labels, lam, model)

    grads = {k: np.zeros_like(v) for k, v in P.items()}
    dlog = probs.copy()
    dlog[np.arange(B), labels] -= 1.0
    dlog /= B
    grads["W_fc"] += dlog.T @ feats
    dfeat = dlog @ P["W_fc"]
    dH = {ch: np.zeros_like(state.h_out[-1]) for ch in CHANNELS}
    np.add.at(dH["out"], src_idx, dfeat[:, :d_last])
    np.add.at(dH["in"], dst_idx, dfeat[:, d_last:])

    for l in range(model.n_layers, 0, -1):
        prev_dim = model.in_dim if l == 1 else model.layer_dims[l - 2]
        for ch in CHANNELS:
            cat, Z, mask = state.cache[(l, ch)]
            g = dH[ch]
            if mask is not None:
                g = g * mask
            dZ = g * (Z > 0)
            grads[f"l{l}.W_{ch}"] += dZ.T @ cat
            grads[f"l{l}.b_{ch}"] += dZ.sum(axis=0)
            dcat = dZ @ P[f"l{l}.W_{ch}"]
            dM, dE = dcat[:, :prev_dim], dcat[:, prev_dim:]
            grads[f"l{l}.We_{ch}"] += dE.T @ prop.F[ch]
            if model.separate_expert:
                grads[f"l{l}.Wx_{ch}"] += dE.T @ prop.Fx[ch]
            else:
                grads[f"l{l}.We_{ch}"] += dE.T @ prop.Fx[ch]
            if l > 1:
                dH[ch] = prop.AT[ch] @ dM
    if lam:
        for k, v in P.items():
            grads[k] += 2.0 * lam * v
    return value, grads
