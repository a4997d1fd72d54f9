from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import all_strings, bsc, model_and_rule, random_model, random_rule
from trackstop.model import (
    Alphabet,
    ConditioningError,
    JointModel,
    node_stats,
    simulate,
    stop_cdf_given_y,
    validate_model,
)
from trackstop.rules import FixedTime, PrefixTable, SumThreshold, stop_cdf
from trackstop.tree import complete_tree, tree_from_leaves


def test_alphabet_round_trip():
    a = Alphabet(("0", "1", "e"))
    assert a.encode("1e0") == (1, 2, 0)
    assert a.decode((1, 2, 0)) == "1e0"
    multi = Alphabet(("lo", "hi"))
    assert multi.encode("hi,lo") == (1, 0)
    with pytest.raises(ValueError, match="unknown symbol"):
        a.encode("2")


def test_validate_uniform_ok():
    m = JointModel("01", "01", [["1/4", "1/4"], ["1/4", "1/4"]], 3)
    assert validate_model(m) == []


def test_validate_mass_and_kappa():
    m = JointModel("01", "01", [["0.3", "0.2"], ["0.2", "0.2"]], 3)
    assert any("mass sum != 1" in p for p in validate_model(m))
    m = JointModel("01", "01", [["1/4", "1/4"], ["1/4", "1/4"]], 0)
    assert any("kappa >= 1" in p for p in validate_model(m))
    m = JointModel("01", "01", [["1/2", "1/4"], ["1/2", "-1/4"]], 2)
    assert any("negative mass" in p for p in validate_model(m))


def test_ex6_conditional_stop(ex6):
    model, rule = ex6
    # P(X1 = 1 | Y1 = 1) = 3/4 by Bayes for the BSC(1/4) with a uniform input
    assert stop_cdf_given_y(model, rule, "1", 1) == F(3, 4)
    assert stop_cdf_given_y(model, rule, "0", 1) == F(1, 4)
    assert stop_cdf_given_y(model, FixedTime(1), "0", 1) == 1


def test_conditioning_on_null_raises():
    m = JointModel("01", "ab", [["1/2", "0"], ["1/2", "0"]], 2)
    with pytest.raises(ConditioningError):
        stop_cdf_given_y(m, FixedTime(2), "b", 1)


def test_ex6_node_stats(ex6):
    model, rule = ex6
    assert tuple(node_stats(model, rule, "")) == (1, 1, 0)
    assert tuple(node_stats(model, rule, "1")) == (F(1, 2), F(1, 8), 0)
    assert tuple(node_stats(model, rule, "10")) == (F(1, 4), 0, F(3, 16))


def test_zero_probability_prefix_has_zero_stats():
    m = JointModel("01", "ab", [["1/2", "0"], ["1/2", "0"]], 2)
    assert tuple(node_stats(m, FixedTime(2), "b")) == (0, 0, 0)


@settings(max_examples=40, deadline=None)
@given(model_and_rule(max_kappa=4))
def test_state_path_matches_enumeration(mr):
    model, rule = mr
    for y in all_strings(model.n_y, model.kappa):
        assert node_stats(model, rule, y) == node_stats(model, rule, y, method="enumerate")


@settings(max_examples=40, deadline=None)
@given(model_and_rule(max_kappa=4))
def test_node_stat_recursions(mr):
    model, rule = mr
    for n in range(model.kappa + 1):
        assert sum(node_stats(model, rule, y).w for y in all_strings(model.n_y, n) if len(y) == n) == 1
    for y in all_strings(model.n_y, model.kappa - 1):
        st = node_stats(model, rule, y)
        kids = [node_stats(model, rule, y + (j,)) for j in range(model.n_y)]
        assert 0 <= st.a <= st.w <= 1
        assert 0 <= st.b <= st.w * max(0, len(y) - 1)
        assert sum(k.w for k in kids) == st.w
        assert sum(k.a for k in kids) <= st.a
        if st.w:
            F_y = stop_cdf_given_y(model, rule, y, len(y))
            assert sum(k.b for k in kids) - st.b == st.w * F_y


def test_stop_cdf_is_monotone_and_bounded():
    rng = np.random.default_rng(3)
    for _ in range(20):
        rule = random_rule(rng, 3, 4)
        for xs in all_strings(3, 3):
            for g in range(3):
                assert stop_cdf(rule, xs, 4) <= stop_cdf(rule, xs + (g,), 4)
        assert all(stop_cdf(rule, xs, 4) == 1 for xs in all_strings(3, 4) if len(xs) == 4)


def test_simulate_ex6_complete_tree(ex6):
    model, rule = ex6
    tree = complete_tree(model, rule)
    res = simulate(model, rule, tree, 100_000, seed=1)
    assert res.alarm == 0.0
    assert res.covers(0, F(1, 2))


def test_simulate_exact_when_T_equals_S():
    model = bsc("1/2", "1/4", 3)
    rule = FixedTime(1)
    tree = tree_from_leaves(complete_tree(model, rule).table, ["0", "1"])
    res = simulate(model, rule, tree, 1000, seed=0)
    assert (res.alarm, res.delay) == (0.0, 0.0)


def test_simulate_is_deterministic():
    rng = np.random.default_rng(0)
    model = random_model(rng, 2, 3, 3)
    rule = random_rule(rng, 2, 3, "table")
    tree = complete_tree(model, rule)
    assert simulate(model, rule, tree, 5000, seed=7) == simulate(model, rule, tree, 5000, seed=7)


def test_simulate_rejects_zero_samples(ex6):
    model, rule = ex6
    with pytest.raises(ValueError):
        simulate(model, rule, complete_tree(model, rule), 0)


def test_simulate_slow_path_agrees_with_fast_path(monkeypatch):
    import trackstop.model as mod

    model = bsc("3/4", "1/4", 3)
    rule = SumThreshold((0, 1), 2)
    tree = complete_tree(model, rule)
    fast = simulate(model, rule, tree, 2000, seed=5)
    monkeypatch.setattr(mod, "_TABLE_LIMIT", 0)
    slow = simulate(model, rule, tree, 2000, seed=5)
    assert fast == slow


def test_prefix_table_inherits_longest_prefix():
    rule = PrefixTable({(1,): F(1, 2), (1, 0): 1})
    assert rule.cdf((0, 1)) == 0
    assert rule.cdf((1, 1, 1)) == F(1, 2)
    assert rule.cdf((1, 0, 1)) == 1
