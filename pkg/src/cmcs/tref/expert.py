"""Synthetic "expert" trust edges from trust propagation and composition.

Propagation: along a two-hop path a -> b -> c the propagated level is the
weaker of the two hops. Composition: when several such paths reach the
same node, a Bernoulli draw picks the strongest (probability ``pr``) or the
weakest propagated level.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from ..graph_store import TrustGraph, TrustLevel

log = logging.getLogger(__name__)

Direction = Literal["incoming", "outgoing"]


@dataclass(frozen=True)
class BernoulliConfig:
    pr: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.pr <= 1.0:
            raise ValueError(f"pr must be in [0, 1], got {self.pr}")


@dataclass(frozen=True)
class ExpertEdge:
    """Synthesized edge ``src -> dst``.

    ``direction`` is relative to ``anchor``: ``incoming`` means dst == anchor.
    ``path_levels`` are the propagated (min) levels of each two-hop path and
    ``draw`` the uniform variate used to compose them (None when the anchor
    has a single neighbour on that side, so no draw was needed).
    """

    src: str
    dst: str
    level: TrustLevel
    direction: Direction
    anchor: str
    path_levels: tuple[TrustLevel, ...]
    draw: float | None = None


def _compose(paths: list[TrustLevel], n_neighbours: int, pr: float, rng) -> tuple[TrustLevel, float | None]:
    if n_neighbours == 1:
        return paths[0], None
    rd = float(rng.random())
    return (max(paths) if rd < pr else min(paths)), rd


def generate_expert_knowledge(g: TrustGraph, cfg: BernoulliConfig) -> list[ExpertEdge]:
    """At most one incoming and one outgoing expert edge per node.

    The target is the lexicographically smallest node exactly two hops away
    (same direction) with no existing edge in that direction. Expert edges
    never duplicate a base edge or an earlier expert edge.
    """
    if g.n_nodes == 0:
        raise ValueError("empty graph")
    rng = np.random.default_rng(cfg.seed)
    taken = set(g.edges)
    out: list[ExpertEdge] = []
    for u in g.nodes:
        # incoming: v -> b -> u
        n_in = g.in_index[u]
        if n_in:
            cands: dict[str, list[TrustLevel]] = {}
            for b, w_bu in n_in:
                for v, w_vb in g.in_index[b]:
                    if v != u and (v, u) not in g.edges:
                        cands.setdefault(v, []).append(min(w_vb, w_bu))
            if cands:
                v = min(cands)
                paths = sorted(cands[v])
                lvl, rd = _compose(paths, len(n_in), cfg.pr, rng)
                if (v, u) not in taken:
                    taken.add((v, u))
                    out.append(ExpertEdge(v, u, lvl, "incoming", u, tuple(paths), rd))
        # outgoing: u -> b -> v
        n_out = g.out_index[u]
        if n_out:
            cands = {}
            for b, w_ub in n_out:
                for v, w_bv in g.out_index[b]:
                    if v != u and (u, v) not in g.edges:
                        cands.setdefault(v, []).append(min(w_ub, w_bv))
            if cands:
                v = min(cands)
                paths = sorted(cands[v])
                lvl, rd = _compose(paths, len(n_out), cfg.pr, rng)
                if (u, v) not in taken:
                    taken.add((u, v))
                    out.append(ExpertEdge(u, v, lvl, "outgoing", u, tuple(paths), rd))
    return out


def estimate_pr(
    train: Iterable[tuple[str, str, TrustLevel]], g: TrustGraph | None = None, return_count: bool = False
):
    """Fraction of multi-path triangles where the direct level equals the strongest propagated level.

    Only ordered pairs (a, c) with a direct training edge and at least two
    two-hop training paths a -> b -> c are counted. With none, returns 0.5.
    """
    train = list(train)
    if g is not None:
        unknown = {x for u, v, _ in train for x in (u, v)} - set(g.index)
        if unknown:
            raise KeyError(f"train edges reference nodes missing from the graph: {sorted(unknown)[:5]}")
    tg = TrustGraph.from_triples(train)
    matched = total = 0
    for (a, c), direct in tg.edges.items():
        paths = [min(w_ab, tg.edges[(b, c)]) for b, w_ab in tg.out_index[a] if (b, c) in tg.edges]
        if len(paths) >= 2:
            total += 1
            matched += direct == max(paths)
    if total == 0:
        log.warning("no qualifying pairs for Pr estimation; using 0.5")
        pr = 0.5
    else:
        pr = matched / total
    log.info("Pr = %.4f over %d pairs", pr, total)
    return (pr, total) if return_count else pr
