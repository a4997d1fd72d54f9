"""One-step lookahead stopping and the monotone condition.

The lookahead rule ``T*_lambda`` stops at ``y^n`` as soon as stopping now is
no worse than waiting exactly one more step:

    F(y^n) >= lambda * P(S = n + 1 | Y^n = y^n),    F(y^n) = P(S <= n | Y^n = y^n).

The test is applied for ``n >= 1``.  When ``P(S = n | Y^{n-1}) >= P(S = n + 1 | Y^n)``
for every ``n >= 2`` and history (the monotone condition), the stop regions
are nested along every path and ``T*_lambda`` minimizes ``b + lambda * a``
among stopping times ``T >= 1``.  The root-only tree (``T = 0``) is then
compared directly, so the result matches backward induction on the complete
tree, including its preference for the smallest tree on ties.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from ._numeric import INF, leq
from .model import JointModel, Refusal
from .rules import StoppingRule
from .solver import optimal_subtree
from .tree import NodeTable, StoppingTree, complete_tree


def _next_stop(table: NodeTable, y):
    """``P(S = n + 1 | Y^n = y)``; zero at the horizon."""
    if len(y) >= table.kappa:
        return 0
    py = table.model.py
    ahead = sum((py[j] * table.cdf[y + (j,)] for j in range(table.n_y) if py[j] != 0), 0)
    return ahead - table.cdf[y]


def stops_here(table: NodeTable, y, lam) -> bool:
    """Membership test of the lookahead stop region at ``y`` (ties stop)."""
    if len(y) >= table.kappa or table[y].w == 0:
        return True
    return leq(lam * _next_stop(table, y), table.cdf[y])


@dataclass(frozen=True)
class MonotoneReport:
    """``passed`` is True when no history violates the monotone condition.

    ``witness`` is ``(n, history, left, right)``: ``history`` is ``y^n`` as a
    string, ``left = P(S = n | Y^{n-1})`` and ``right = P(S = n + 1 | Y^n)``.
    """

    passed: bool
    witness: Optional[tuple] = None

    def __bool__(self):
        return self.passed


def monotone_check(model: JointModel, rule: StoppingRule, table: NodeTable | None = None) -> MonotoneReport:
    """Exhaustive check of ``P(S = n | Y^{n-1}) >= P(S = n + 1 | Y^n)`` for ``n = 2..kappa``."""
    table = table or NodeTable(model, rule)
    for n in range(2, model.kappa + 1):
        for y in sorted(k for k in table.stats if len(k) == n and table[k].w != 0):
            left = _next_stop(table, y[:-1])
            right = _next_stop(table, y)
            if not leq(right, left):
                return MonotoneReport(False, (n, model.y_alphabet.decode(y), left, right))
    return MonotoneReport(True)


def lookahead_tree(model: JointModel, rule: StoppingRule, lam, table: NodeTable | None = None) -> StoppingTree:
    """Tree of the one-step lookahead stopping time ``T*_lambda``, built top-down."""
    if lam == INF:
        raise ValueError("lambda must be finite for the lookahead rule")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    table = table or NodeTable(model, rule)
    internal = {()}
    stack = [(j,) for j in range(table.n_y)]
    while stack:
        y = stack.pop()
        if not stops_here(table, y, lam):
            internal.add(y)
            stack.extend(y + (j,) for j in range(table.n_y))
    tree = StoppingTree(table, internal)
    root = table[()]
    if leq(root.b + lam * root.a, tree.delay + lam * tree.alarm):
        return StoppingTree(table, ())
    return tree


def nestedness_violations(model: JointModel, rule: StoppingRule, lam, table: NodeTable | None = None) -> list:
    """Pairs ``(y, y gamma)``, ``|y| >= 1``, where the stop test holds at ``y`` but fails at ``y gamma``."""
    table = table or NodeTable(model, rule)
    bad = []
    for y in sorted(table.stats, key=lambda k: (len(k), k)):
        if 1 <= len(y) < model.kappa and table[y].w != 0 and stops_here(table, y, lam):
            for j in range(model.n_y):
                z = y + (j,)
                if table[z].w != 0 and not stops_here(table, z, lam):
                    bad.append((y, z))
    return bad


@dataclass
class EquivalenceReport:
    equal: bool
    checked: list = field(default_factory=list)
    mismatches: list = field(default_factory=list)

    def __bool__(self):
        return self.equal


def lookahead_equivalence(model: JointModel, rule: StoppingRule, lambdas: Sequence, monotone: MonotoneReport | None = None) -> EquivalenceReport:
    """Compare ``T*_lambda`` with backward induction on every grid value.

    Requires a passed :func:`monotone_check` (run here unless supplied).
    Each mismatch is ``(lambda, first differing node)``.
    """
    table = NodeTable(model, rule)
    monotone = monotone if monotone is not None else monotone_check(model, rule, table)
    if not monotone.passed:
        n, history, left, right = monotone.witness
        raise Refusal(f"monotone condition fails at n={n}, history {history!r} ({left} < {right})")
    full = complete_tree(model, rule, table)
    report = EquivalenceReport(True)
    for lam in lambdas:
        look = lookahead_tree(model, rule, lam, table)
        best = optimal_subtree(full, lam)
        report.checked.append(lam)
        if look != best:
            diff = sorted(look.internal ^ best.internal, key=lambda y: (len(y), y))[0]
            report.mismatches.append((lam, full.label(diff)))
            report.equal = False
    return report
