import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.metrics import f1_score as sk_f1

from cmcs.harness.metrics import evaluate, f1_score, mae, timed
import oracles

labels = st.lists(st.integers(0, 3), min_size=1, max_size=200)


def test_perfect_predictions():
    y = [0, 1, 2, 3, 3, 1]
    rep = f1_score(y, y)
    assert rep.weighted_f1 == 1.0 and rep.macro_f1 == 1.0 and rep.accuracy == 1.0


def test_single_class_prediction_on_balanced_truth():
    true = np.repeat(np.arange(4), 25)
    rep = f1_score(np.full(100, 2), true)
    assert rep.f1.tolist() == pytest.approx([0.0, 0.0, 0.4, 0.0])
    assert rep.weighted_f1 == pytest.approx(0.1, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_f1_matches_sklearn_and_oracle(data):
    true = data.draw(labels)
    pred = data.draw(st.lists(st.integers(0, 3), min_size=len(true), max_size=len(true)))
    rep = f1_score(pred, true)
    assert rep.weighted_f1 == pytest.approx(sk_f1(true, pred, average="weighted", zero_division=0), abs=1e-12)
    assert rep.weighted_f1 == pytest.approx(oracles.weighted_f1(pred, true), abs=1e-12)
    present = sorted(set(true) | set(pred))
    assert rep.macro_f1 == pytest.approx(sk_f1(true, pred, labels=present, average="macro", zero_division=0), abs=1e-12)
    assert 0.0 <= rep.weighted_f1 <= 1.0
    assert rep.support.sum() == len(true)


def test_f1_errors():
    with pytest.raises(ValueError):
        f1_score([], [])
    with pytest.raises(ValueError):
        f1_score([0, 1], [0])


def test_mae_examples():
    true = np.array([0, 1, 2, 3])
    assert mae(np.eye(4)[true], true) == 0.0
    assert mae(np.full((5, 4), 0.25), np.full(5, 3)) == pytest.approx(0.55, abs=1e-12)


def test_mae_errors():
    with pytest.raises(ValueError):
        mae(np.zeros((0, 4)), [])
    with pytest.raises(ValueError):
        mae(np.ones((2, 3)) / 3, [0, 1])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=50), st.integers(0, 10**6))
def test_mae_zero_for_correct_one_hot(true, seed):
    true = np.array(true)
    assert mae(np.eye(4)[true], true) == 0.0
    # any wrong one-hot row makes it positive
    rng = np.random.default_rng(seed)
    i = int(rng.integers(len(true)))
    wrong = true.copy()
    wrong[i] = (wrong[i] + int(rng.integers(1, 4))) % 4
    assert mae(np.eye(4)[wrong], true) > 0.0


def test_mae_zero_for_mixed_distribution_with_matching_expectation():
    # half Apprentice, half Master has expectation 2.0, the Journeyer value
    probs = np.array([[0.0, 0.5, 0.0, 0.5]])
    assert mae(probs, [2]) == 0.0
    assert evaluate(probs, [2]).accuracy == 0.0


def test_mae_range():
    rng = np.random.default_rng(0)
    p = rng.dirichlet(np.ones(4), 300)
    t = rng.integers(0, 4, 300)
    assert 0.0 <= mae(p, t) <= 1.0


def test_evaluate_ties_go_to_lower_level():
    rep = evaluate(np.array([[0.0, 0.5, 0.5, 0.0]]), [1])
    assert rep.accuracy == 1.0 and rep.mae is not None


def test_timed_positive():
    out, ms = timed(lambda x: x + 1, 1)
    assert out == 2 and ms > 0
    _, ms = timed(time.sleep, 0.01)
    assert ms >= 10.0
