"""Classification metrics for trust evaluation and wall-clock timing."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..graph_store import N_LEVELS, TRUST_VALUES


@dataclass
class MetricReport:
    weighted_f1: float
    macro_f1: float
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    mae: float | None = None

    def as_dict(self) -> dict:
        return {
            "weighted_f1": self.weighted_f1,
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "mae": self.mae,
            "support": self.support.tolist(),
        }


def _safe_div(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.divide(a, b, out=np.zeros_like(a), where=b > 0)


def f1_score(predicted, true, n_classes: int = N_LEVELS) -> MetricReport:
    """Per-class precision/recall/F1 with support-weighted and macro averages.

    Undefined ratios (no predictions or no support for a class) count as 0.
    The macro average runs over classes present in either sequence.
    """
    pred = np.asarray(predicted, dtype=np.int64)
    true = np.asarray(true, dtype=np.int64)
    if pred.shape != true.shape:
        raise ValueError("predicted and true must be aligned")
    if len(true) == 0:
        raise ValueError("empty input")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (true, pred), 1)
    tp = np.diag(cm)
    support = cm.sum(axis=1)
    predicted_n = cm.sum(axis=0)
    precision = _safe_div(tp, predicted_n)
    recall = _safe_div(tp, support)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    present = (support + predicted_n) > 0
    return MetricReport(
        weighted_f1=float(np.sum(f1 * support) / support.sum()),
        macro_f1=float(f1[present].mean()),
        accuracy=float(tp.sum() / len(true)),
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
    )


def mae(probs, true) -> float:
    """Mean |E[value] - true value| with values mapped onto [0, 1] by (v - 0.5) / 2.5."""
    probs = np.asarray(probs, dtype=np.float64)
    true = np.asarray(true, dtype=np.int64)
    if len(true) == 0:
        raise ValueError("empty input")
    if probs.shape != (len(true), N_LEVELS):
        raise ValueError(f"expected ({len(true)}, {N_LEVELS}) probabilities, got {probs.shape}")
    expect = probs @ TRUST_VALUES
    scale = lambda v: (v - 0.5) / 2.5  # noqa: E731
    return float(np.mean(np.abs(scale(expect) - scale(TRUST_VALUES[true]))))


def evaluate(probs, true) -> MetricReport:
    """F1 report from argmax predictions (ties to the lower level) plus MAE."""
    probs = np.asarray(probs, dtype=np.float64)
    rep = f1_score(np.argmax(probs, axis=1), true)
    rep.mae = mae(probs, true)
    return rep


def timed(fn: Callable, *args, **kw):
    """(result, elapsed milliseconds) on the monotonic clock."""
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, (time.perf_counter() - t0) * 1e3
