"""Trust level -> value mapping, pairwise trust benefit and trust-evaluation accuracy."""

import math

from ..graph_store import TRUST_VALUES, TrustGraph, TrustLevel


def trust_value(level: TrustLevel) -> float:
    return float(TRUST_VALUES[TrustLevel(level)])


def trust_benefit(t_ij: float, t_ji: float) -> float:
    """(t_ij + t_ji) * exp(-|t_ij - t_ji|): high mutual trust pays, asymmetry is penalized."""
    return (t_ij + t_ji) * math.exp(-abs(t_ij - t_ji))


def pair_auc(pair: tuple[str, str], g: TrustGraph, model_accuracy: float) -> float:
    """1 for an observed edge, otherwise the trust model's held-out accuracy."""
    if not 0.0 < model_accuracy <= 1.0:
        raise ValueError("model_accuracy must be in (0, 1]")
    return 1.0 if g.has_edge(*pair) else model_accuracy
