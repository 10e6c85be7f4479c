import csv
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmcs.benefits import (
    InfeasibleTask,
    OutOfRange,
    Task,
    Worker,
    ability_benefit,
    build_ucrg,
    candidate_team,
    distance_benefit,
    normalize_ability,
    pair_effect,
    privacy_loss,
    qod,
    random_ucrg,
    team_privacy_loss,
    trust_benefit_matrix,
    write_ucrg_csv,
)
from cmcs.geo import haversine
from helpers import geo_ucrg, make_ucrg
import oracles

TASK = Task("t", (0.0, 0.0))


def east(km):
    """Point on the equator ``km`` east of (0, 0)."""
    return (0.0, math.degrees(km / oracles.R_EARTH))


def test_task_validation():
    with pytest.raises(ValueError):
        Task("t", (0, 0), alpha=0.5, beta=0.6)
    with pytest.raises(ValueError):
        Task("t", (0, 0), team_size=1)
    with pytest.raises(ValueError):
        Task("t", (0, 0), zeta=1.0)
    with pytest.raises(ValueError):
        Worker("w", (0, 0), len=-1)
    with pytest.raises(ValueError):
        Worker("w", (91, 0))


def test_candidate_at_task_location():
    (w, d), = candidate_team(TASK, [Worker("w", (0.0, 0.0))])
    assert w.id == "w" and d == 0.0


def test_candidate_boundary_is_strict():
    w = Worker("edge", east(200.0))
    d = float(haversine(*w.loc, *TASK.loc))
    assert candidate_team(Task("t", (0.0, 0.0), z=d), [w]) == []
    assert len(candidate_team(Task("t", (0.0, 0.0), z=np.nextafter(d, np.inf)), [w])) == 1


def test_candidates_50_150_250():
    ws = [Worker(f"w{k}", east(k)) for k in (250, 50, 150)]
    got = candidate_team(Task("t", (0.0, 0.0), z=200.0), ws)
    assert [w.id for w, _ in got] == ["w150", "w50"]
    assert [d for _, d in got] == pytest.approx([150.0, 50.0], abs=1e-9)


def test_normalize_examples():
    ws = [Worker("a", (0, 0), 0, 1), Worker("b", (0, 0), 50, 3), Worker("c", (0, 0), 100, 5)]
    n = normalize_ability(ws)
    assert n["c"] == (1.0, 1.0)
    assert [n[w][0] for w in "abc"] == [0.0, 0.5, 1.0]
    same = [Worker(x, (0, 0), 7, 2) for x in "xyz"]
    assert set(normalize_ability(same).values()) == {(0.0, 0.0)}


def test_ability_examples():
    assert ability_benefit((1, 1), TASK, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert ability_benefit((0, 0), TASK) == 0.0
    assert ability_benefit((0.5, 0.25), Task("t", (0, 0), alpha=0.2, beta=0.8), 1.0) == pytest.approx(0.3, abs=1e-12)


@settings(max_examples=100)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.5))
def test_ability_monotone(x, y, alpha, bump):
    t = Task("t", (0, 0), alpha=alpha, beta=1 - alpha)
    base = ability_benefit((x, y), t)
    assert ability_benefit((min(1, x + bump), y), t) >= base - 1e-15
    assert ability_benefit((x, min(1, y + bump)), t) >= base - 1e-15


def test_distance_examples():
    assert distance_benefit(0.0, 10, 200) == 1.0
    assert distance_benefit(10.0, 10, 200) == pytest.approx(math.exp(-1), abs=1e-12)
    with pytest.raises(OutOfRange):
        distance_benefit(200.0, 10, 200)


@settings(max_examples=100)
@given(st.floats(0.01, 150), st.floats(0.01, 40), st.floats(1, 100))
def test_distance_strictly_monotone(d, dd, kappa):
    z = 200.0
    assert distance_benefit(d + dd, kappa, z) < distance_benefit(d, kappa, z)
    assert distance_benefit(d, kappa + 1.0, z) > distance_benefit(d, kappa, z)


def test_pair_effect_examples():
    assert pair_effect(1, 1, 1, 1, 6) == 12.0
    s = oracles.trust_benefit(0.5, 0.5)
    assert s == 1.0
    assert pair_effect(0.25, 1.0, 0.5, 0.5, s) == pytest.approx(0.5, abs=1e-12)


@given(*[st.floats(0, 10)] * 5)
def test_pair_effect_symmetric(ai, pi, aj, pj, s):
    assert pair_effect(ai, pi, aj, pj, s) == pair_effect(aj, pj, ai, pi, s)


def _workers(n, rng):
    return [Worker(f"w{i:03d}", (rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)),
                   float(rng.uniform(0, 100)), int(rng.integers(0, 20))) for i in range(n)]


@pytest.mark.parametrize("n", [3, 200])
def test_ucrg_weight_count(n):
    rng = np.random.default_rng(n)
    ws = _workers(n, rng)
    cands = candidate_team(Task("t", (0, 0), team_size=2), ws)
    t = np.full((n, n), 2.0)
    g = build_ucrg(Task("t", (0, 0), team_size=2), cands, t)
    assert len(g.weight) == n * (n - 1) // 2


def test_ucrg_matches_oracle():
    rng = np.random.default_rng(7)
    ws = _workers(9, rng)
    task = Task("t", (0, 0), alpha=0.3, beta=0.7, team_size=3, kappa=15)
    cands = candidate_team(task, ws)
    t = np.array([0.5, 1.0, 2.0, 3.0])[rng.integers(0, 4, (9, 9))]
    g = build_ucrg(task, cands, t, epsilon=1.5)
    lens = [w.len for w, _ in cands]
    nums = [w.num for w, _ in cands]
    for i, (wi, di) in enumerate(cands):
        ln = (wi.len - min(lens)) / (max(lens) - min(lens))
        nn = (wi.num - min(nums)) / (max(nums) - min(nums))
        assert g.a[i] == pytest.approx(1.5 * (0.3 * ln + 0.7 * nn), abs=1e-12)
        assert g.p[i] == pytest.approx(math.exp(-oracles.haversine_km(*wi.loc, 0, 0) / 15), abs=1e-12)
    for i, j in itertools.combinations(range(9), 2):
        s = oracles.trust_benefit(t[i, j], t[j, i])
        assert g.s[i, j] == pytest.approx(s, abs=1e-12)
        want = oracles.pair_effect(g.a[i], g.p[i], g.a[j], g.p[j], s)
        assert g.U[i, j] == pytest.approx(want, abs=1e-12)
        assert g.U[i, j] == g.U[j, i]
        assert g.weight[(g.members[i], g.members[j])] == g.U[i, j]


def test_ucrg_callable_trust_and_infeasible():
    ws = [Worker(f"w{i}", (0.0, 0.01 * i), i, i) for i in range(3)]
    task = Task("t", (0, 0), team_size=2)
    cands = candidate_team(task, ws)
    g = build_ucrg(task, cands, lambda u, v: 3.0 if u < v else 1.0)
    assert g.s[0, 1] == pytest.approx(4 * math.exp(-2))
    with pytest.raises(InfeasibleTask):
        build_ucrg(Task("t", (0, 0), team_size=4), cands, np.ones((3, 3)))


def test_fig6_style_instance():
    # three workers, team of two: w1 and w3 are able, nearby and trust each other fully
    ws = [Worker("w1", (0.0, 0.0), 100, 10), Worker("w2", east(30.0), 10, 1), Worker("w3", east(5.0), 80, 9)]
    task = Task("t", (0, 0), team_size=2)
    t = np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=float)
    g = build_ucrg(task, candidate_team(task, ws), t)
    w = g.weight
    assert max(w, key=w.get) == ("w1", "w3")
    from cmcs.recruit_tsr import brute_force_recruit, tsr_recruit

    assert brute_force_recruit(g).ids(g) == ("w1", "w3")
    assert tsr_recruit(g).ids(g) == ("w1", "w3")


def test_qod_examples():
    U = np.array([[0, 2.5, 1.0], [2.5, 0, 4.0], [1.0, 4.0, 0]])
    g = make_ucrg(U, team_size=2)
    assert qod(["w1", "w2"], g) == 2.5
    assert qod([0, 1, 2], make_ucrg(np.ones((3, 3)) - np.eye(3))) == pytest.approx(1.0, abs=1e-12)
    Z = np.array([[0, 3.0, 0], [3.0, 0, 0], [0, 0, 0]])
    gz = make_ucrg(Z)
    assert qod([0, 1, 2], gz) < qod([0, 1], gz)
    with pytest.raises(ValueError):
        qod([0], g)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 8))
def test_qod_permutation_invariant_and_oracle(seed, k):
    g = random_ucrg(12, k, seed)
    rng = np.random.default_rng(seed)
    team = rng.choice(12, k, replace=False)
    q = qod(team, g)
    assert q == pytest.approx(oracles.qod(g.U.tolist(), team.tolist()), abs=1e-9)
    assert q == qod(rng.permutation(team), g)
    assert qod(g.ids(team), g) == q


def test_privacy_loss_examples():
    s = np.array([[0, 1.0], [1.0, 0]])
    assert privacy_loss(s, np.ones((2, 2))) == 0.0
    auc = np.full((2, 2), 0.5)
    want = math.exp(-2 / ((5 / 6) * 0.75))
    assert privacy_loss(s, auc) == pytest.approx(want, abs=1e-12)
    assert privacy_loss(s, auc) == pytest.approx(0.0408, abs=1e-4)
    # all pairs maximally trusted: S = 0
    assert privacy_loss(np.full((3, 3), 6.0), np.full((3, 3), 0.5)) == 0.0


def test_privacy_loss_rises_as_trust_falls():
    # lower s means larger S, a larger exponent denominator and so a larger loss
    auc = np.full((3, 3), 0.8)
    prev = None
    for sv in (6.0, 5.0, 3.0, 1.0, 0.2):
        s = np.full((3, 3), 6.0)
        s[0, 1] = s[1, 0] = sv
        pl = privacy_loss(s, auc)
        if prev is not None:
            assert pl > prev
        prev = pl


sym_matrices = st.integers(2, 7).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0.01, 6.0), min_size=n * n, max_size=n * n),
    st.lists(st.floats(0.05, 1.0), min_size=n * n, max_size=n * n),
    st.just(n),
    st.permutations(range(n)),
))


@settings(max_examples=150, deadline=None)
@given(sym_matrices)
def test_privacy_loss_oracle_range_and_relabel(data):
    sv, av, n, perm = data
    s = np.array(sv).reshape(n, n)
    s = (s + s.T) / 2
    auc = np.array(av).reshape(n, n)
    pl = privacy_loss(s, auc)
    assert 0.0 <= pl < 1.0
    assert pl == pytest.approx(oracles.privacy_loss(list(range(n)), s.tolist(), auc.tolist()), rel=1e-9, abs=1e-12)
    p = list(perm)
    assert privacy_loss(s[np.ix_(p, p)], auc[np.ix_(p, p)]) == pytest.approx(pl, rel=1e-12, abs=1e-15)


def test_team_privacy_loss_uses_submatrices():
    g = geo_ucrg(8, 3, seed=2)
    team = [1, 4, 6]
    want = oracles.privacy_loss(team, g.s.tolist(), g.auc.tolist())
    assert team_privacy_loss(team, g) == pytest.approx(want, rel=1e-12)


def test_trust_benefit_matrix_symmetric():
    t = np.array([[0, 3, 0.5], [1, 0, 2], [2, 2, 0]], dtype=float)
    s = trust_benefit_matrix(t)
    assert np.array_equal(s, s.T)
    assert np.all(np.diag(s) == 0)
    assert s[0, 1] == pytest.approx(oracles.trust_benefit(3, 1))


def test_ucrg_csv(tmp_path):
    g = geo_ucrg(4, 2, seed=1)
    write_ucrg_csv(g, tmp_path / "u.csv")
    rows = list(csv.reader(open(tmp_path / "u.csv")))
    assert rows[0] == ["i", "j", "U_ij", "a_i", "p_i", "a_j", "p_j", "s_ij"]
    assert len(rows) == 1 + 6
    i, j = g.index[rows[1][0]], g.index[rows[1][1]]
    assert float(rows[1][2]) == g.U[i, j]
    assert float(rows[1][7]) == g.s[i, j]


def test_subset_keeps_alignment():
    g = geo_ucrg(10, 3, seed=3)
    sub = g.subset([7, 2, 5])
    assert sub.members == (g.members[2], g.members[5], g.members[7])
    assert sub.U[0, 2] == g.U[2, 7]
    assert sub.auc[1, 2] == g.auc[5, 7]
