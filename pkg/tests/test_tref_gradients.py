"""Hand-written backprop against central finite differences on a 10-node graph."""

import numpy as np
import pytest

from cmcs.tref.model import PropagationGraph, TrefModel, backward, forward, loss, predict_proba

STEP = 1e-5
TOL = 1e-4


def _instance(separate_expert, seed):
    rng = np.random.default_rng(seed)
    n = 10
    pairs = {(int(a), int(b)) for a, b in rng.integers(0, n, (40, 2)) if a != b}
    pairs = sorted(pairs)
    src = [a for a, _ in pairs]
    dst = [b for _, b in pairs]
    lvl = rng.integers(0, 4, len(pairs))
    expert = rng.random(len(pairs)) < 0.25
    prop = PropagationGraph(n, src, dst, lvl, expert)
    model = TrefModel.init(6, (5, 4, 3), edge_dim=3, seed=seed, separate_expert=separate_expert)
    for k in model.params:
        if ".b_" in k:
            # biases away from zero keep ReLU kinks out of the finite-difference stencil
            model.params[k] = rng.uniform(0.05, 0.3, model.params[k].shape)
    X = rng.normal(size=(n, 6))
    b_src = rng.integers(0, n, 12)
    b_dst = rng.integers(0, n, 12)
    labels = rng.integers(0, 4, 12)
    return prop, model, X, b_src, b_dst, labels


def _objective(prop, model, X, s, d, y, lam):
    st = forward(prop, X, model)
    return loss(predict_proba(st, model, s, d), y, lam, model)


@pytest.mark.parametrize("separate_expert", [False, True])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradients_match_finite_differences(separate_expert, seed):
    prop, model, X, s, d, y, = _instance(separate_expert, seed)
    lam = 1e-3
    st = forward(prop, X, model)
    value, grads = backward(prop, st, model, s, d, y, lam)
    assert value == pytest.approx(_objective(prop, model, X, s, d, y, lam), abs=1e-12)
    for name, P in model.params.items():
        num = np.zeros_like(P)
        for ix in np.ndindex(P.shape):
            keep = P[ix]
            P[ix] = keep + STEP
            up = _objective(prop, model, X, s, d, y, lam)
            P[ix] = keep - STEP
            down = _objective(prop, model, X, s, d, y, lam)
            P[ix] = keep
            num[ix] = (up - down) / (2 * STEP)
        g = grads[name]
        denom = max(np.linalg.norm(g), np.linalg.norm(num), 1e-12)
        rel = np.linalg.norm(g - num) / denom
        assert rel < TOL, f"{name}: relative error {rel:.2e}"
