import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from trackstop import build_example
from trackstop.model import JointModel
from trackstop.rules import (
    CompositionTable,
    FirstHit,
    FixedTime,
    PrefixTable,
    SumThreshold,
    random_composition_table,
    random_prefix_table,
    stop_cdf,
)

F = Fraction


@pytest.fixture
def ex6():
    """Built-in ex6-bsc model and rule, p = 1/4, kappa = 2."""
    return build_example("ex6-bsc", p="1/4", kappa=2)


def bsc(prior, p, kappa):
    prior, p = F(prior), F(p)
    pmf = [[(1 - prior) * (1 - p), (1 - prior) * p], [prior * p, prior * (1 - p)]]
    return JointModel("01", "01", pmf, kappa)


def random_model(rng, n_x, n_y, kappa, zeros=True):
    """Random rational pmf; with ``zeros`` some cells (and possibly whole y columns) are empty."""
    while True:
        low = 0 if zeros else 1
        cells = rng.integers(low, 6, size=(n_x, n_y))
        if cells.sum() > 0:
            break
    total = int(cells.sum())
    pmf = [[F(int(v), total) for v in row] for row in cells]
    return JointModel([str(i) for i in range(n_x)], "abc"[:n_y], pmf, kappa)


def random_rule(rng, n_x, kappa, kind=None):
    kind = kind or rng.choice(["table", "table_by_composition", "first_hit", "sum_threshold", "fixed"])
    if kind == "table":
        return random_prefix_table(rng, n_x, kappa, randomized=bool(rng.integers(2)))
    if kind == "table_by_composition":
        return random_composition_table(rng, n_x, kappa, randomized=bool(rng.integers(2)))
    if kind == "first_hit":
        targets = {int(i) for i in rng.choice(n_x, size=int(rng.integers(1, n_x + 1)), replace=False)}
        return FirstHit(targets)
    if kind == "sum_threshold":
        return SumThreshold(tuple(int(v) for v in rng.integers(0, 3, size=n_x)), int(rng.integers(1, 4)))
    return FixedTime(int(rng.integers(1, kappa + 1)))


@st.composite
def model_and_rule(draw, max_kappa=3, max_symbols=3, kinds=None, zeros=True):
    n_x = draw(st.integers(2, max_symbols))
    n_y = draw(st.integers(2, max_symbols))
    kappa = draw(st.integers(1, max_kappa))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    kind = draw(st.sampled_from(kinds)) if kinds else None
    return random_model(rng, n_x, n_y, kappa, zeros), random_rule(rng, n_x, kappa, kind)


def exact_operating_point(model, rule, tree):
    """``(P(T < S), E(T - S)^+)`` by enumerating every (x^kappa, y^kappa) pair.

    Independent of node statistics: uses only the pmf, q and the tree's
    induced stopping index.
    """
    kappa = model.kappa
    alarm = delay = F(0)
    for pairs in itertools.product(range(model.n_x * model.n_y), repeat=kappa):
        prob = F(1)
        xs, ys = [], []
        for c in pairs:
            i, j = divmod(c, model.n_y)
            prob *= model.pmf[i][j]
            xs.append(i)
            ys.append(j)
        if prob == 0:
            continue
        T = next(n for n in range(kappa + 1) if tree.is_leaf(tuple(ys[:n])))
        prev = F(0)
        for n in range(1, kappa + 1):
            q = stop_cdf(rule, xs[:n], kappa)
            ps = q - prev
            prev = q
            if ps:
                if T < n:
                    alarm += prob * ps
                delay += prob * ps * max(T - n, 0)
    return alarm, delay


def all_strings(n_sym, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(range(n_sym), repeat=n)
