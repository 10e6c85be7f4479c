import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmcs.baselines import (
    BaselineConfig,
    de_recruit,
    gmab_recruit,
    gmdb_recruit,
    gmpl_recruit,
    mean_trust,
    pso_recruit,
    random_recruit,
    sa_recruit,
    vns_recruit,
)
from cmcs.benefits import InfeasibleTask, random_ucrg
from helpers import make_ucrg
import oracles

SEARCH = {"de": de_recruit, "pso": pso_recruit, "sa": sa_recruit, "vns": vns_recruit}


def test_config_validation():
    for bad in ({"population": 0}, {"CR": 1.5}, {"cooling": 0.0}, {"max_shake": 0}):
        with pytest.raises(ValueError):
            BaselineConfig(**bad)


@pytest.mark.parametrize("name", sorted(SEARCH))
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(4, 40), k=st.integers(2, 7))
def test_search_returns_k_distinct(name, seed, n, k):
    k = min(k, n)
    g = random_ucrg(n, k, seed)
    res = SEARCH[name](g, BaselineConfig(iterations=20, population=8, seed=seed))
    assert len(res.team) == k and len(set(res.team.tolist())) == k
    assert res.team.min() >= 0 and res.team.max() < n
    assert abs(res.qod - oracles.qod(g.U.tolist(), res.team.tolist())) <= 1e-9
    assert np.all(np.diff(res.trace) >= -1e-12)


@pytest.mark.parametrize("name", sorted(SEARCH))
def test_full_set_when_k_equals_n(name):
    g = random_ucrg(5, 5, seed=2)
    assert SEARCH[name](g, BaselineConfig(iterations=5)).team.tolist() == [0, 1, 2, 3, 4]


@pytest.mark.parametrize("name", sorted(SEARCH))
def test_infeasible(name):
    with pytest.raises(InfeasibleTask):
        SEARCH[name](random_ucrg(3, 5, seed=0))


@pytest.mark.parametrize("name", sorted(SEARCH))
def test_beats_random(name):
    wins = 0
    for i in range(100):
        g = random_ucrg(10, 3, seed=1000 + i)
        res = SEARCH[name](g, BaselineConfig(iterations=200, seed=i))
        wins += res.qod >= random_recruit(g, seed=i).qod - 1e-12
    assert wins >= 95


@pytest.mark.parametrize("name", ["de", "pso"])
def test_population_methods_match_pairs_oracle(name):
    hits = 0
    for i in range(100):
        g = random_ucrg(8, 2, seed=2000 + i)
        res = SEARCH[name](g, BaselineConfig(iterations=100, seed=i))
        hits += abs(res.qod - oracles.brute_force(g.U.tolist(), 2)[1]) <= 1e-9
    assert hits >= 90


def test_vns_matches_oracle():
    hits = 0
    for i in range(100):
        g = random_ucrg(12, 4, seed=3000 + i)
        res = vns_recruit(g, BaselineConfig(iterations=100, seed=i))
        hits += abs(res.qod - oracles.brute_force(g.U.tolist(), 4)[1]) <= 1e-9
    assert hits >= 95


def test_budget_is_respected():
    g = random_ucrg(60, 6, seed=0)
    for name in ("de", "pso", "sa"):
        res = SEARCH[name](g, BaselineConfig(budget=3000, population=30, seed=0))
        assert res.evaluations <= 3000, name


def test_search_deterministic():
    g = random_ucrg(50, 6, seed=5)
    for name, fn in SEARCH.items():
        a = fn(g, BaselineConfig(iterations=30, seed=3))
        b = fn(g, BaselineConfig(iterations=30, seed=3))
        assert np.array_equal(a.team, b.team), name


def test_mean_trust():
    t = np.array([[0, 3, 1], [1, 0, 1], [3, 1, 0]], dtype=float)
    assert mean_trust(t).tolist() == [2.0, 1.5, 1.5]


def test_gmpl_all_equal_gives_lowest_ids():
    n = 6
    t = np.full((n, n), 2.0)
    g = make_ucrg(np.ones((n, n)), t=t, team_size=3)
    assert gmpl_recruit(g).team.tolist() == [0, 1, 2]


def test_gmpl_includes_master_everywhere():
    rng = np.random.default_rng(0)
    n = 10
    t = np.array([0.5, 1.0, 2.0])[rng.integers(0, 3, (n, n))]
    t[7, :] = t[:, 7] = 3.0
    g = make_ucrg(np.ones((n, n)), t=t, team_size=3)
    assert 7 in gmpl_recruit(g).team


def test_gmpl_needs_trust():
    with pytest.raises(ValueError):
        gmpl_recruit(make_ucrg(np.ones((3, 3))))


def test_gmdb_includes_zero_distance_worker():
    d = np.array([5.0, 12.0, 0.0, 30.0, 7.0])
    g = make_ucrg(np.ones((5, 5)), p=np.exp(-d / 10.0), team_size=2)
    assert 2 in gmdb_recruit(g).team


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(4, 11), st.integers(2, 4))
def test_gmab_optimal_with_constant_trust_and_distance(seed, n, k):
    rng = np.random.default_rng(seed)
    a = rng.permutation(n) / n  # distinct abilities
    p, s = 0.6, 2.0
    U = (a[:, None] * p + a[None, :] * p) * s
    np.fill_diagonal(U, 0.0)
    g = make_ucrg(U, s=np.full((n, n), s), a=a, p=np.full(n, p), team_size=k)
    assert gmab_recruit(g).qod == pytest.approx(oracles.brute_force(U.tolist(), k)[1], abs=1e-12)


def test_random_reproducible():
    g = random_ucrg(40, 5, seed=0)
    assert np.array_equal(random_recruit(g, 4).team, random_recruit(g, 4).team)
    assert not np.array_equal(random_recruit(g, 4).team, random_recruit(g, 5).team)
