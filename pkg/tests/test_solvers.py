import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import battery_model, one_state, points_in, rng
from subsetvi.geometry import VectorSet, values_at
from subsetvi.io.generators import example3, maze1, near_discernible_grid, random_model
from subsetvi.model import PomdpModel
from subsetvi.solvers import (ITERATION_CAP, RESIDUAL_MET, SPVI_RICH, ActionClassification,
                              HistorySet, SolveConfig, classify_actions_heuristic,
                              expand_subset, initial_histories, loose_threshold, solve,
                              solve_infovi, solve_spvi, solve_ssvi, solve_vi,
                              spvi_history_bound, spvi_should_stop, strict_threshold,
                              subset_vi, tau_bases, zero_set)


# -- thresholds and config -------------------------------------------------------------

def test_thresholds():
    assert loose_threshold(0.01, 0.95) == pytest.approx(2.6316e-4, rel=1e-4)
    assert strict_threshold(0.01, 0.95, 2) == pytest.approx(1.3850e-4, rel=1e-4)
    assert loose_threshold(0.01, 0.0) == strict_threshold(0.01, 0.0, 3) > 0


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 1.0), st.floats(0.01, 0.999), st.integers(1, 40))
def test_strict_implies_loose(eps, lam, nz):
    if lam * nz >= 1:
        assert strict_threshold(eps, lam, nz) <= loose_threshold(eps, lam) * (1 + 1e-12)


@pytest.mark.parametrize("kw", [dict(epsilon=0), dict(max_iterations=0), dict(mode="x"),
                                dict(criterion="tight"), dict(enum_cap=0)])
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        SolveConfig(**kw)


# -- VI ------------------------------------------------------------------------------

def test_vi_one_state():
    r = solve_vi(one_state(), SolveConfig(epsilon=0.01))
    assert r.reason == RESIDUAL_MET and r.converged
    assert abs(r.value.values[0, 0] - 20.0) <= 0.01
    assert len(r.stats) == r.iterations
    # the returned set is the one before the final update
    assert r.extra["latest"].values[0, 0] > r.value.values[0, 0]


def test_vi_myopic_stops_after_second_update():
    m = one_state(discount=0.0)
    r = solve_vi(m)
    assert r.reason == RESIDUAL_MET and r.iterations == 2 and r.residual == 0.0
    m = battery_model(4).with_reward(battery_model(4).reward)
    m0 = PomdpModel(m.transition, m.observation, m.reward, 0.0)
    r = solve_vi(m0)
    assert r.iterations == 2
    b = rng(1).dirichlet(np.ones(m.num_states), size=50)
    np.testing.assert_allclose(values_at(r.value, b), (b @ m.reward).max(axis=1))


def test_vi_iteration_cap():
    r = solve_vi(battery_model(3), SolveConfig(max_iterations=2))
    assert r.reason == ITERATION_CAP and r.iterations == 2


@pytest.mark.parametrize("i", range(6))
def test_vi_converges_with_shrinking_residual(i):
    m = random_model(seed=500 + i, states=2, actions=2, observations=2, discount=0.8)
    r = solve_vi(m, SolveConfig(max_iterations=400))
    assert r.reason == RESIDUAL_MET
    res = [s.residual for s in r.stats]
    tail = res[len(res) // 2:]
    assert all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))


def test_solver_bounds_all_algorithms(gen):
    m = battery_model(7, states=3)
    lo, hi = m.reward.min() / (1 - m.discount), m.reward.max() / (1 - m.discount)
    P = gen.dirichlet(np.ones(3), size=300)
    for algo in ("vi", "ssvi"):
        r = solve(m, algo, SolveConfig(max_iterations=25))
        v = values_at(r.value, P)
        assert v.max() <= hi + 1e-6 and v.min() >= lo - 1e-6


# -- ssVI ----------------------------------------------------------------------------

@pytest.mark.parametrize("i", range(5))
def test_vi_and_ssvi_agree_on_tau(i):
    m = battery_model(i, states=2 + i % 3)
    g = rng(i)
    bases = tau_bases(m)
    P = np.vstack([points_in(B, 500 // len(bases), g) for B in bases])
    for k in range(1, 6):
        cfg = SolveConfig(max_iterations=k)
        a, b = solve_vi(m, cfg), solve_ssvi(m, cfg)
        if a.iterations == k and b.iterations == k and a.reason == b.reason == ITERATION_CAP:
            np.testing.assert_allclose(values_at(b.value, P), values_at(a.value, P), atol=1e-8)


def test_ssvi_example3_counts_not_above_vi():
    m = example3(reward=[[1.0, 0.0], [0.0, 1.0], [0.5, 0.2]])
    cfg = SolveConfig(max_iterations=8)
    vi, ss = solve_vi(m, cfg), solve_ssvi(m, cfg)
    for a, b in zip(vi.stats, ss.stats):
        assert b.kept <= a.kept


def test_ssvi_individual_mode_runs():
    m = example3(reward=[[1.0, 0.0], [0.0, 1.0], [0.5, 0.2]])
    r = solve_ssvi(m, SolveConfig(mode="individual", max_iterations=5))
    assert r.iterations == 5 and r.value.total_count() >= 4


# -- infoVI --------------------------------------------------------------------------

def test_infovi_full_support_equals_vi(gen):
    m = battery_model(9)
    cfg = SolveConfig(max_iterations=4)
    vi, info = solve_vi(m, cfg), solve_infovi(m, cfg)
    fam = info.value
    P = gen.dirichlet(np.ones(m.num_states), size=200)
    for key in fam.keys():
        np.testing.assert_allclose(values_at(fam.vectors(key), P), values_at(vi.value, P),
                                   atol=1e-8)


def test_infovi_maze1_low_dimension():
    r = solve_infovi(maze1(), SolveConfig(max_iterations=3))
    assert r.algorithm == "infovi" and r.iterations == 3
    assert all(r.value.vectors(k).dim <= 2 for k in r.value.keys())


# -- classification ------------------------------------------------------------------

def test_classify_grid_look_rich_moves_poor():
    m = near_discernible_grid(seed=1)
    c = classify_actions_heuristic(m)
    assert c.information_rich == (m.action_names.index("look"),)
    assert set(c.information_poor) == set(range(6)) - set(c.information_rich)
    assert c.z_poor == (m.num_observations - 1,)


def test_classify_deterministic_all_rich():
    c = classify_actions_heuristic(maze1())
    assert c.information_rich == tuple(range(5)) and c.information_poor == ()


def test_classify_build_partitions():
    m = near_discernible_grid(seed=1)
    c = ActionClassification.build(m, [4])
    assert sorted(c.information_rich + c.information_poor) == list(range(6))


# -- SPVI pieces ---------------------------------------------------------------------

def look_model(n_poor=4, rich_bonus=0.0):
    """3 states; action 0 observes z0 in s0 else z1; the others observe null only."""
    A = 1 + n_poor
    T = np.tile(np.array([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4]])[:, None, :], (1, A, 1))
    O = np.zeros((A, 3, 3))
    O[0, 0, 0] = 1.0
    O[0, 1:, 1] = 1.0
    O[1:, :, 2] = 1.0
    R = np.zeros((3, A))
    R[:, 1:] = rng(3).uniform(-1, 0, size=(3, n_poor))
    R[:, 0] = rich_bonus
    return PomdpModel(T, O, R, 0.9)


def test_expand_subset_counts():
    m = look_model()
    c = ActionClassification.build(m, [0])
    assert c.z_poor == (2,)
    h = ((0, 0),)
    H = HistorySet(m, [h])
    V = VectorSet(np.zeros((1, 3)), actions=[1]).with_histories((h,))
    H2 = expand_subset(m, V, H, c)
    assert len(H2) == 5 and H2.generation == 1
    # not maximal any more: nothing new
    V2 = VectorSet(np.zeros((1, 3)), actions=[2]).with_histories((h,))
    assert len(expand_subset(m, V2, H2, c)) == 5
    # rich action: no expansion
    V3 = VectorSet(np.zeros((1, 3)), actions=[0]).with_histories((h,))
    assert len(expand_subset(m, V3, H, c)) == 1


def test_should_stop_examples():
    m = look_model()
    c = ActionClassification.build(m, [0])
    h = ((0, 1),)
    H = HistorySet(m, [h])
    assert spvi_should_stop(VectorSet(np.zeros((1, 3)), actions=[0]).with_histories((h,)), H, c)
    assert not spvi_should_stop(VectorSet(np.zeros((1, 3)), actions=[3]).with_histories((h,)), H, c)
    every = ActionClassification.build(m, range(5))
    assert spvi_should_stop(VectorSet(np.zeros((1, 3)), actions=[3]).with_histories((h,)), H, every)


def test_spvi_rich_everywhere_zero_expansions():
    m = look_model(rich_bonus=1.0)
    r = solve_spvi(m, SolveConfig(), ActionClassification.build(m, [0]))
    assert r.reason == SPVI_RICH
    assert len(r.extra["generations"]) == 1


def test_spvi_requires_rich_actions():
    m = look_model()
    with pytest.raises(ValueError):
        solve_spvi(m, SolveConfig(), ActionClassification.build(m, []))


def test_spvi_max_expansions_is_anytime_cap():
    m = look_model()
    r = solve_spvi(m, SolveConfig(max_expansions=0), ActionClassification.build(m, [0]))
    assert r.reason in (ITERATION_CAP, SPVI_RICH)
    assert len(r.extra["generations"]) == 1


def test_subset_vi_monotone_and_bounded():
    m = look_model()
    c = ActionClassification.build(m, [0])
    H = initial_histories(m, c)
    V = VectorSet(np.full((1, 3), m.reward.min()))
    pts = np.vstack([b.points for b in H.basis_list()])
    prev = values_at(V, pts)
    hi = m.reward.max() / (1 - m.discount)
    for _ in range(6):
        V, _ = subset_vi(m, V, H, 1e-3, SolveConfig(max_iterations=1))
        cur = values_at(V, pts)
        assert np.all(cur >= prev - 1e-9) and cur.max() <= hi + 1e-6
        prev = cur


def test_subset_vi_from_optimal_one_iteration():
    m = look_model(rich_bonus=1.0)
    c = ActionClassification.build(m, [0])
    H = initial_histories(m, c)
    V = VectorSet(np.full((1, 3), 1.0 / (1 - m.discount)), actions=[0])
    stats = []
    U, reason = subset_vi(m, V, H, 1e-6, SolveConfig(), stats)
    assert reason == RESIDUAL_MET and len(stats) == 1 and stats[0].residual < 1e-9


def test_spvi_history_bound_and_monotone_generations():
    m = look_model()
    c = ActionClassification.build(m, [0])
    r = solve_spvi(m, SolveConfig(max_expansions=3), c)
    gens = r.extra["generations"]
    for g in gens:
        assert len(g["histories"]) <= spvi_history_bound(c, g["generation"])
    H = HistorySet(m)
    for a, b in zip(gens, gens[1:]):
        for h in a["histories"]:
            H.add(h)
        pts = np.vstack([H.bases[tuple(h)].points for h in a["histories"]])
        old = values_at(a["value"].with_histories(None), pts)
        new = values_at(b["value"].with_histories(None), pts)
        assert np.all(new >= old - 1e-9)


def test_solve_dispatch_unknown():
    with pytest.raises(ValueError):
        solve(one_state(), "pbvi")
