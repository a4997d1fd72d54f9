from fractions import Fraction as F

import pytest
from hypothesis import given, settings

from conftest import bsc, model_and_rule
from trackstop import build_example
from trackstop._numeric import INF
from trackstop.rules import FirstHit, FixedTime
from trackstop.solver import (
    OracleRefusal,
    breakpoint_sweep,
    brute_force_breakpoints,
    count_trees,
    curve_head,
    d_zero,
    evaluate_curve,
    g_index,
    lower_bound,
    lower_left_hull,
    optimal_subtree,
)
from trackstop.tree import complete_tree, cost, tree_from_leaves

EX6_VERTICES = [(0, F(1, 2)), (F(1, 8), F(1, 8)), (F(1, 2), 0)]


def test_g_index_examples(ex6):
    full = complete_tree(*ex6)
    assert g_index(full, "1") == 3
    assert g_index(full, "0") == F(1, 3)
    assert g_index(full, ()) == F(1, 2)
    with pytest.raises(ValueError, match="internal"):
        g_index(full, "10")


def test_optimal_subtree_examples(ex6):
    full = complete_tree(*ex6)
    assert optimal_subtree(full, 0).is_trivial
    assert optimal_subtree(full, 4) == full
    assert optimal_subtree(full, 1) == tree_from_leaves(full.table, ["1", "00", "01"])
    assert optimal_subtree(full, INF) == full
    with pytest.raises(ValueError):
        optimal_subtree(full, -1)


def test_optimal_subtree_matches_exhaustive_minimum(ex6):
    full = complete_tree(*ex6)
    candidates = [
        tree_from_leaves(full.table, leaves)
        for leaves in ([""], ["0", "1"], ["00", "01", "1"], ["0", "10", "11"], ["00", "01", "10", "11"])
    ]
    for lam in (0, F(1, 5), F(1, 3), 1, 3, 5):
        best = min(cost(t, lam) for t in candidates)
        smallest = min((t for t in candidates if cost(t, lam) == best), key=len)
        assert optimal_subtree(full, lam) == smallest


def test_sweep_ex6(ex6):
    curve = breakpoint_sweep(*ex6)
    assert curve.M == 2
    assert curve.lambdas == [3, F(1, 3)]
    assert curve.entries[0].point == (0, F(1, 2)) and curve.entries[0].lam == INF
    assert [e.point for e in curve.breakpoints] == EX6_VERTICES[1:]
    assert curve.vertices() == EX6_VERTICES
    assert curve.terminal.lam == 0 and curve.terminal.tree.is_trivial
    assert curve.breakpoints[0].tree == tree_from_leaves(curve.entries[0].tree.table, ["1", "00", "01"])


@pytest.mark.parametrize("kappa", [1, 2, 4])
def test_sweep_fixed_one(kappa):
    curve = breakpoint_sweep(bsc("1/2", "1/4", kappa), FixedTime(1))
    assert curve.vertices() == [(0, 0)]
    assert curve.M == (0 if kappa == 1 else 1)


def test_sweep_ex7_infinite_first_multiplier():
    curve = breakpoint_sweep(*build_example("ex7-bec", eps="1/2", p="1/5", kappa=3))
    assert curve.lambdas[0] == INF
    assert curve.vertices() == brute_force_breakpoints(*build_example("ex7-bec", kappa=3)).vertices()


def test_evaluate_curve_examples(ex6):
    curve = breakpoint_sweep(*ex6)
    assert curve(0) == F(1, 2)
    d, mix = evaluate_curve(curve, F(1, 8))
    assert d == F(1, 8) and len(mix) == 1 and mix[0][1] == 1
    d, mix = evaluate_curve(curve, F(5, 16))
    assert d == F(1, 16)
    assert [w for _, w in mix] == [F(1, 2), F(1, 2)]
    assert curve(1) == 0
    with pytest.raises(ValueError):
        evaluate_curve(curve, F(3, 2))


def test_mixture_achieves_alpha_and_delay(ex6):
    curve = breakpoint_sweep(*ex6)
    for alpha in (F(1, 16), F(1, 5), F(3, 7)):
        d, mix = evaluate_curve(curve, alpha)
        assert sum(w * t.alarm for t, w in mix) == alpha
        assert sum(w * t.delay for t, w in mix) == d


@pytest.mark.parametrize("p", ["1/10", "1/4", "2/5"])
@pytest.mark.parametrize("kappa", [2, 3, 5])
def test_ex6_lower_bound(p, kappa):
    model, rule = build_example("ex6-bsc", p=p, kappa=kappa)
    p = F(p)
    for alpha in (0, F(1, 100), F(1, 20)):
        expected = max((kappa - 1) * (F(1, 2) - alpha * (1 - p) / p), 0)
        assert lower_bound(model, rule, alpha) == expected
        assert lower_bound(model, rule, alpha) <= breakpoint_sweep(model, rule)(alpha)


def test_lower_bound_uses_second_multiplier_when_first_is_infinite():
    model, rule = build_example("ex7-bec", kappa=3)
    curve = breakpoint_sweep(model, rule)
    lam2 = curve.lambdas[1]
    alpha = F(1, 50)
    assert lower_bound(model, rule, alpha) == max(curve.d0() - alpha * lam2, 0)
    assert lower_bound(model, rule, alpha, steps=1) == 0
    assert lower_bound(model, rule, 0) == curve.d0() == d_zero(model, rule)
    with pytest.raises(ValueError):
        lower_bound(model, rule, alpha, steps=3)


def test_curve_head_agrees_with_full_sweep():
    model, rule = build_example("ex12-geometric", kappa=5)
    full = breakpoint_sweep(model, rule)
    for method in ("string", "composition"):
        head = curve_head(model, rule, 2, method)
        assert [(e.lam, e.point) for e in head] == [(e.lam, e.point) for e in full.entries[:3]]


def test_oracle_examples(ex6):
    assert brute_force_breakpoints(*ex6).vertices() == EX6_VERTICES
    assert brute_force_breakpoints(bsc("1/2", "1/4", 3), FixedTime(1)).vertices() == [(0, 0)]


def test_oracle_refuses_above_cap():
    model = bsc("1/2", "1/4", 4)
    total = count_trees(model)
    assert total == 1 + (1 + (1 + (1 + 1) ** 2) ** 2) ** 2
    with pytest.raises(OracleRefusal) as info:
        brute_force_breakpoints(model, FirstHit({1}), cap=100)
    assert info.value.count == total and str(total) in str(info.value)


def test_lower_left_hull():
    pts = [(0, 4), (1, 1), (2, 1), (F(1, 2), 3), (3, 0), (1, 2)]
    assert lower_left_hull(pts) == [(0, 4), (1, 1), (3, 0)]


@settings(max_examples=40, deadline=None)
@given(model_and_rule(max_kappa=3))
def test_duality(mr):
    model, rule = mr
    curve = breakpoint_sweep(model, rule)
    full = curve.entries[0].tree
    lams = [lam for lam in curve.lambdas if lam != INF] + [0]
    dual_at = {lam: cost(optimal_subtree(full, lam), lam) for lam in lams}
    alphas = sorted({a for a, _ in curve.vertices()} | {F(1, 3), F(1, 2), F(1)})
    for alpha in alphas:
        if alpha < curve.vertices()[0][0]:
            continue
        assert curve(alpha) == max(j - lam * alpha for lam, j in dual_at.items())


@settings(max_examples=40, deadline=None)
@given(model_and_rule(max_kappa=3))
def test_backward_induction_nesting(mr):
    model, rule = mr
    full = complete_tree(model, rule)
    lams = [0, F(1, 7), F(1, 2), 1, 2, 9, 100]
    trees = [optimal_subtree(full, lam) for lam in lams]
    assert all(s <= t for s, t in zip(trees, trees[1:]))


@settings(max_examples=40, deadline=None)
@given(model_and_rule(max_kappa=3))
def test_g_parts_are_nonnegative(mr):
    model, rule = mr
    full = complete_tree(model, rule)
    for y in full.internal:
        st = full.stats(y)
        a_sub, b_sub = full.subtree_stats(y)
        assert b_sub >= st.b and st.a >= a_sub


@settings(max_examples=40, deadline=None)
@given(model_and_rule(max_kappa=3))
def test_sweep_trees_are_optimal_on_their_interval(mr):
    model, rule = mr
    curve = breakpoint_sweep(model, rule)
    full = curve.entries[0].tree
    entries = curve.all_entries
    for cur, nxt in zip(entries, entries[1:]):
        if nxt.lam == INF:
            # the interval above an infinite multiplier is empty
            continue
        hi = cur.lam if cur.lam != INF else nxt.lam + 1
        mid = (hi + nxt.lam) / 2
        assert optimal_subtree(full, hi) == cur.tree
        assert optimal_subtree(full, mid) == cur.tree
        assert optimal_subtree(full, nxt.lam) == nxt.tree


def test_float_mode_matches_exact(ex6):
    model, rule = ex6
    exact = breakpoint_sweep(model, rule)
    approx = breakpoint_sweep(model.to_float(), rule)
    assert approx.M == exact.M
    for e, f in zip(exact.all_entries, approx.all_entries):
        assert f.alpha == pytest.approx(float(e.alpha), rel=1e-12, abs=1e-15)
        assert f.delay == pytest.approx(float(e.delay), rel=1e-12, abs=1e-15)
        assert e.tree.internal == f.tree.internal
