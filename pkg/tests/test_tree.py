from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from conftest import bsc, exact_operating_point, model_and_rule
from trackstop import build_example
from trackstop._numeric import INF
from trackstop.model import NodeStats
from trackstop.rules import FixedTime
from trackstop.solver import optimal_subtree
from trackstop.tree import (
    NodeTable,
    StoppingTree,
    complete_tree,
    cost,
    induced_stop,
    prune_at,
    trivial_tree,
    tree_from_leaves,
)


@pytest.fixture
def split(ex6):
    full = complete_tree(*ex6)
    return tree_from_leaves(full.table, ["1", "00", "01"])


def test_complete_tree_depth_one():
    model = bsc("1/2", "1/4", 1)
    tree = complete_tree(model, FixedTime(1))
    assert sorted(tree.nodes()) == [(), (0,), (1,)]
    assert tree.operating_point == (0, 0)


@pytest.mark.parametrize("kappa, d0", [(2, F(1, 2)), (5, 2)])
def test_complete_tree_ex6_delay(kappa, d0):
    tree = complete_tree(*build_example("ex6-bsc", p="1/4", kappa=kappa))
    assert tree.operating_point == (0, d0)


def test_complete_tree_keeps_null_branches_as_leaves():
    from trackstop.model import JointModel

    m = JointModel("01", "ab", [["1/2", "0"], ["1/2", "0"]], 3)
    tree = complete_tree(m, FixedTime(3))
    assert tree.is_leaf((1,)) and not tree.is_leaf((0,))
    assert tree.is_leaf((0, 0, 1))
    assert tree.internal == {(), (0,), (0, 0)}


def test_split_tree_structure(split):
    assert split.internal == {(), (0,)}
    assert sorted(split.leaves()) == [(0, 0), (0, 1), (1,)]
    assert len(split) == 5
    assert induced_stop(split, "10") == 1
    assert induced_stop(split, "01") == 2


def test_induced_stop_complete_tree():
    tree = complete_tree(*build_example("ex6-bsc", kappa=3))
    for y in ("000", "101", "111"):
        assert induced_stop(tree, y) == 3


def test_prune_examples(ex6, split):
    full = complete_tree(*ex6)
    assert prune_at(full, ["1"]) == split
    root = prune_at(full, [()])
    assert root.is_trivial and root == trivial_tree(full.table)
    assert root.subtree_stats(()) == (1, 0)
    assert prune_at(full, []) is full
    # nested requests collapse at the shallowest node
    assert prune_at(full, ["", "1"]) == root


def test_prune_errors(split):
    with pytest.raises(ValueError, match="leaf"):
        prune_at(split, ["1"])
    with pytest.raises(ValueError, match="not in the tree"):
        prune_at(split, ["11"])


@settings(max_examples=40, deadline=None)
@given(model_and_rule(max_kappa=3), st.randoms(use_true_random=False))
def test_incremental_aggregates_match_fresh(mr, rnd):
    model, rule = mr
    tree = complete_tree(model, rule)
    while tree.internal:
        y = rnd.choice(sorted(tree.internal))
        tree = prune_at(tree, [y])
        fresh = StoppingTree(tree.table, tree.internal)
        assert tree.agg == fresh.agg


@settings(max_examples=30, deadline=None)
@given(model_and_rule(max_kappa=3, max_symbols=2), st.randoms(use_true_random=False))
def test_leaf_sums_match_enumeration(mr, rnd):
    model, rule = mr
    tree = complete_tree(model, rule)
    internal = sorted(tree.internal)
    if internal:
        tree = prune_at(tree, [rnd.choice(internal)])
    assert tree.operating_point == exact_operating_point(model, rule, tree)


def _synthetic_split(ex6):
    """Split tree (leaves 1, 00, 01) over a table whose J_1 values are root 4, "0" 2, others 1."""
    table = NodeTable(*ex6)
    for y, j in {(): 4, (0,): 2, (1,): 1, (0, 0): 1, (0, 1): 1}.items():
        table.stats[y] = NodeStats(1, j, 0)
    return tree_from_leaves(table, ["1", "00", "01"])


def test_cost_worked_values(ex6):
    tree = _synthetic_split(ex6)
    assert cost(tree, 1) == 3
    best = optimal_subtree(tree, 1)
    assert best.internal == {()}
    assert cost(best, 1) == 3


def test_cost_special_lambdas(ex6, split):
    full = complete_tree(*ex6)
    assert cost(split, 0) == split.delay
    for lam in (0, 1, 10**6, INF):
        assert cost(full, lam) == full.delay
    assert cost(split, INF) == INF


def test_tree_from_leaves_rejects_partial(ex6):
    table = NodeTable(*ex6)
    with pytest.raises(ValueError):
        tree_from_leaves(table, ["1", "00"])


def test_renderings_are_deterministic(split):
    dot = split.to_dot()
    assert dot == split.to_dot()
    assert dot.startswith("digraph T {")
    assert '"root" -> "0" [label="0"];' in dot
    assert '"1" [label="1 | 1/8 | 0", shape=box];' in dot
    text = split.dump()
    assert text.splitlines()[0].startswith("root [internal]")
    d = split.to_dict()
    assert d["leaves"] == ["00", "01", "1"]
    assert (d["alarm"], d["delay"]) == ("1/8", "1/8")


def test_tree_order_is_subset_order(ex6, split):
    full = complete_tree(*ex6)
    root = trivial_tree(full.table)
    assert root < split < full
    assert not full <= split
