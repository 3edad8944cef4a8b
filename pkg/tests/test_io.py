import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import battery_model, rng
from subsetvi.geometry import VectorSet
from subsetvi.io.files import (FileFormatError, format_classes, parse_classes, parse_region,
                               parse_vector_sets, read_stats, read_value, region_tag,
                               write_stats, write_value, format_vector_set)
from subsetvi.io.generators import (GeneratorError, elevator, example3, generate, maze1, maze2,
                                    near_discernible_grid, office)
from subsetvi.io.pomdpfile import (PomdpSyntaxError, RewardMarginalizedWarning, parse_pomdp,
                                   serialize_pomdp)
from subsetvi.model import (ModelError, analyze_properness, informativeness_report,
                            transformational_matrix)
from subsetvi.solvers import SolveConfig, solve_infovi, solve_ssvi, solve_vi

EXAMPLE3_TEXT = """\
# three states, two actions, two observations
discount: 0.95
values: reward
states: s1 s2 s3
actions: a1 a2
observations: z1 z2

T: a1
0.5 0.5 0.0
0.4 0.4 0.2
0.1 0.1 0.8

T: a2
0.45 0.45 0.1
0.25 0.25 0.5
0.05 0.05 0.9

O: * uniform
"""


def same_model(m1, m2):
    for f in ("transition", "observation", "reward"):
        np.testing.assert_array_equal(getattr(m1, f), getattr(m2, f))
    assert m1.discount == m2.discount
    assert m1.state_names == m2.state_names and m1.action_names == m2.action_names
    assert m1.observation_names == m2.observation_names


# -- parser --------------------------------------------------------------------------

def test_parse_example3_matches_transformational_matrix():
    m = parse_pomdp(EXAMPLE3_TEXT)
    assert m.discount == 0.95
    P = transformational_matrix(m, 0, 0).entries
    expected = 0.5 * np.array([[0.5, 0.4, 0.1], [0.5, 0.4, 0.1], [0.0, 0.2, 0.8]])
    np.testing.assert_array_equal(P, expected)
    np.testing.assert_array_equal(P, transformational_matrix(example3(), 0, 0).entries)


def test_identity_keyword_and_wildcards():
    text = """discount: 0.9
values: reward
states: 3
actions: 2
observations: 2
T: 0 identity
T: 1 : * uniform
O: * : * : 0 1.0
R: 1 : 2 : * : * 4.5
"""
    m = parse_pomdp(text)
    np.testing.assert_array_equal(m.transition[:, 0, :], np.eye(3))
    np.testing.assert_allclose(m.transition[:, 1, :], np.full((3, 3), 1 / 3))
    assert m.observation[:, :, 0].min() == 1.0
    assert m.reward[2, 1] == 4.5 and m.reward.sum() == 4.5


def test_cost_values_are_negated():
    text = """discount: 0.5
values: cost
states: 1
actions: 1
observations: 1
T: * identity
O: * uniform
R: * : * : * : * 3
"""
    assert parse_pomdp(text).reward[0, 0] == -3.0


def test_named_entries_and_single_values():
    text = """discount: 0.9
states: left right
actions: listen open
observations: hl hr
T: listen : left : left 1.0
T: listen : right : right 1.0
T: open : * uniform
O: listen : left : hl 0.85
O: listen : left : hr 0.15
O: listen : right : hl 0.15
O: listen : right : hr 0.85
O: open : * uniform
R: listen : * : * : * -1
"""
    m = parse_pomdp(text)
    assert m.state_names == ("left", "right")
    assert m.observation[0, 0, 0] == 0.85
    np.testing.assert_array_equal(m.reward[:, 0], [-1, -1])


def test_reward_marginalization_warns():
    text = """discount: 0.9
states: 2
actions: 1
observations: 2
T: 0 uniform
O: 0 uniform
R: 0 : * : * : 0 2
"""
    with pytest.warns(RewardMarginalizedWarning):
        m = parse_pomdp(text)
    np.testing.assert_allclose(m.reward[:, 0], [1.0, 1.0])


@pytest.mark.parametrize("text,line", [
    ("discount: 0.9\nstates: 2\nactions: 1\nobservations: 1\nT: 0 : 0 : 5 1.0\n", 5),
    ("discount: 0.9\nstates: 2\nactions: 1\nobservations 1\n", 4),
    ("discount: 0.9\nvalues: profit\n", 2),
    ("discount: 0.9\nT: 0 identity\n", 2),
])
def test_syntax_errors_carry_location(text, line):
    with pytest.raises(PomdpSyntaxError) as exc:
        parse_pomdp(text)
    assert exc.value.line == line


def test_non_stochastic_rows_rejected():
    text = "discount: 0.9\nstates: 2\nactions: 1\nobservations: 1\nT: 0 : 0\n0.5 0.4\nT: 0 : 1\n0 1\nO: 0 uniform\n"
    with pytest.raises((ModelError, ValueError)) as exc:
        parse_pomdp(text)
    assert "s=0" in str(exc.value)


def test_missing_discount():
    with pytest.raises(PomdpSyntaxError):
        parse_pomdp("states: 1\nactions: 1\nobservations: 1\nT: 0 identity\nO: 0 uniform\n")


@pytest.mark.parametrize("make", [example3, maze1, maze2, elevator, office,
                                  lambda: near_discernible_grid(seed=4)])
def test_round_trip_generators(make):
    m = make()
    m2 = parse_pomdp(serialize_pomdp(m))
    same_model(m, m2)
    # parse, serialize, parse is a fixed point (the generator note is a comment)
    text = serialize_pomdp(m2)
    assert serialize_pomdp(parse_pomdp(text)) == text


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 99))
def test_round_trip_battery(i):
    m = battery_model(i)
    same_model(m, parse_pomdp(serialize_pomdp(m)))


# -- generators ----------------------------------------------------------------------

def test_generator_determinism():
    for name, kw in [("random", dict(seed=3, states=4, actions=2, observations=3)),
                     ("grid", dict(seed=2)), ("elevator", {}), ("office", {})]:
        assert serialize_pomdp(generate(name, **kw)) == serialize_pomdp(generate(name, **kw))
    assert serialize_pomdp(generate("grid", seed=2)) != serialize_pomdp(generate("grid", seed=3))


def test_generator_errors():
    with pytest.raises(GeneratorError):
        generate("tiger")
    with pytest.raises((GeneratorError, TypeError)):
        generate("example3", colour=3)


def test_generated_structure():
    assert analyze_properness(example3()).proper
    m = elevator()
    assert (m.num_states, m.num_actions, m.num_observations) == (96, 3, 32)
    assert set(informativeness_report(m).sizes.values()) == {3}
    m = office()
    assert (m.num_states, m.num_actions, m.num_observations) == (35, 6, 23)
    m = maze1()
    assert (m.num_states, m.num_actions, m.num_observations) == (10, 5, 6)


# -- vector set files -----------------------------------------------------------------

def test_region_tags():
    for region in [("space",), ("tau", (1, 0)), ("phi", 3), ("union",)]:
        assert parse_region(region_tag(region)) == region


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2 ** 31))
def test_vector_set_round_trip(n, dim, seed):
    g = rng(seed)
    vs = VectorSet(g.normal(size=(n, dim)) * 10.0 ** g.integers(-5, 5),
                   g.integers(0, 4, size=n), region=("space",))
    back, = parse_vector_sets(format_vector_set(vs))
    np.testing.assert_array_equal(back.values, vs.values)
    np.testing.assert_array_equal(back.actions, vs.actions)
    assert back.region == vs.region


def test_low_dimension_set_keeps_support_and_history():
    vs = VectorSet(np.array([[1.5, -2.0]]), [3], None, (((0, 1), (2, 0)),), (1, 4), ("phi", 2))
    back, = parse_vector_sets(format_vector_set(vs))
    assert back.support == (1, 4) and back.histories == (((0, 1), (2, 0)),)
    assert back.region == ("phi", 2)


@pytest.mark.parametrize("text,line", [
    ("dim=2 region=space\naction=0\n1.0\n", 3),
    ("dim=2 region=space\naction=x\n1 2\n", 2),
    ("action=0\n1 2\n", 1),
    ("dim=2 region=space\naction=0\n1 2\n\naction=1 support=0,1\n1 2\n", None),
])
def test_malformed_set_files(text, line):
    with pytest.raises(FileFormatError) as exc:
        parse_vector_sets(text, "v.txt")
    if line is not None:
        assert exc.value.line == line and "v.txt" in str(exc.value)


def test_value_files_round_trip(tmp_path, gen):
    m = maze1()
    for value in (solve_vi(example3(reward=[[1, 0], [0, 1], [0.5, 0.5]]),
                           SolveConfig(max_iterations=3)).value,
                  solve_infovi(m, SolveConfig(max_iterations=2)).value):
        model = m if not isinstance(value, VectorSet) else example3()
        p = tmp_path / "v.txt"
        write_value(value, p)
        back = read_value(p, model)
        if isinstance(value, VectorSet):
            np.testing.assert_array_equal(back.values, value.values)
        else:
            for k in value.keys():
                np.testing.assert_array_equal(back.vectors(k).values, value.vectors(k).values)
                assert back.vectors(k).support == value.vectors(k).support


def test_tau_family_round_trip(tmp_path):
    m = example3(reward=[[1, 0], [0, 1], [0.5, 0.5]])
    fam = solve_ssvi(m, SolveConfig(mode="individual", max_iterations=3)).value
    p = tmp_path / "f.txt"
    write_value(fam, p)
    back = read_value(p, m)
    assert back.keys() == fam.keys()
    for k in fam.keys():
        np.testing.assert_array_equal(back.vectors(k).values, fam.vectors(k).values)


def test_read_value_dimension_mismatch(tmp_path):
    p = tmp_path / "v.txt"
    write_value(VectorSet(np.zeros((1, 4))), p)
    with pytest.raises(FileFormatError):
        read_value(p, example3())


# -- stats and classes ---------------------------------------------------------------

def test_stats_csv_one_row_per_iteration(tmp_path):
    r = solve_vi(example3(reward=[[1, 0], [0, 1], [0.5, 0.5]]), SolveConfig(max_iterations=4))
    p = tmp_path / "s.csv"
    write_stats(r.stats, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "iteration,region,enumerated,kept,lp_count,residual,seconds"
    back = read_stats(p)
    assert len(back) == r.iterations and back == r.stats
    write_stats(r.stats, p, append=True)
    assert len(read_stats(p)) == 2 * r.iterations


def test_stats_bad_header(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("a,b\n")
    with pytest.raises(FileFormatError):
        read_stats(p)


def test_classes_file():
    m = near_discernible_grid(seed=1)
    c = parse_classes("# grid\nlook rich\neast poor\n", m)
    assert c.information_rich == (4,)
    assert parse_classes(format_classes(m, c), m) == c
    with pytest.raises(FileFormatError) as exc:
        parse_classes("look rich\nfly poor\n", m, "c.txt")
    assert exc.value.line == 2
    with pytest.raises(FileFormatError):
        parse_classes("look rich\nlook poor\n", m)
    with pytest.raises(FileFormatError):
        parse_classes("look sometimes\n", m)
