"""Break-points of the optimal delay / false-alarm tradeoff ``d(alpha)``.

The main entry point is :func:`breakpoint_sweep`, a weakest-link pruning
sweep in the style of CART cost-complexity pruning: starting from the
complete tree, each step computes the multiplier

    lambda_m = max_y g(y, T^{m-1}),   g(y, T) = (b(T_y) - b(y)) / (a(y) - a(T_y)),

collapses every internal node attaining it, and records the operating point
``(alpha_m, d_m) = (P(T^m < S), E(T^m - S)^+)``.  The recorded points are the
vertices of the convex, piecewise-linear curve ``d(alpha)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Optional

from ._numeric import INF, close, leq, ratio, sub
from .model import JointModel, Refusal, node_stats
from .rules import StoppingRule
from .tree import NodeTable, StoppingTree, complete_tree


class OracleRefusal(Refusal):
    """The exhaustive oracle would need to enumerate more trees than allowed."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"exhaustive search needs {count} trees, above the cap of {cap}")
        self.count = count
        self.cap = cap


# -- g index and backward induction -------------------------------------------


def g_index(tree: StoppingTree, node):
    """Delay saved per unit of alarm added when the subtree at ``node`` is collapsed."""
    y = node if isinstance(node, tuple) else tree.y_alphabet.encode(node)
    if y not in tree.internal:
        raise ValueError(f"g is only defined on internal nodes; {tree.label(y)!r} is not internal")
    st = tree.table[y]
    a_sub, b_sub = tree.agg[y]
    return ratio(sub(b_sub, st.b), sub(st.a, a_sub))


def _cost(a, b, lam):
    return (a, b) if lam == INF else b + lam * a


def _add(u, v):
    return (u[0] + v[0], u[1] + v[1]) if isinstance(u, tuple) else u + v


def _leq(u, v):
    if isinstance(u, tuple):
        return (u[0] < v[0] and not close(u[0], v[0])) or (close(u[0], v[0]) and leq(u[1], v[1]))
    return leq(u, v)


def optimal_subtree(tree: StoppingTree, lam) -> StoppingTree:
    """Smallest subtree (same root) minimizing ``b + lam * a``; ties collapse.

    ``lam = inf`` minimizes alarm first and delay second.
    """
    if not (lam == INF or lam >= 0):
        raise ValueError("lambda must be nonnegative")
    table = tree.table
    best = {}
    stop = set()
    for y in sorted(tree.internal, key=len, reverse=True):
        st = table[y]
        here = _cost(st.a, st.b, lam)
        below = None
        for c in tree.children(y):
            if c in tree.internal:
                v = best[c]
            else:
                cs = table[c]
                v = _cost(cs.a, cs.b, lam)
            below = v if below is None else _add(below, v)
        if _leq(here, below):
            stop.add(y)
            best[y] = here
        else:
            best[y] = below
    keep = set()
    for y in sorted(tree.internal, key=len):
        if y not in stop and (not y or y[:-1] in keep):
            keep.add(y)
    return StoppingTree(table, keep)


# -- curves -------------------------------------------------------------------


@dataclass(frozen=True)
class Breakpoint:
    m: int
    lam: object
    alpha: object
    delay: object
    _factory: Callable = field(repr=False, compare=False)

    @cached_property
    def tree(self):
        return self._factory()

    @property
    def trivial(self) -> bool:
        """Achieved by the root-only tree (``T = 0``)."""
        return self.tree.is_trivial

    @property
    def point(self) -> tuple:
        return (self.alpha, self.delay)


@dataclass
class BreakpointCurve:
    """Sweep result.

    ``entries[0]`` is the complete tree (``lambda = inf``); ``entries[1:]`` are
    the break-points ``m = 1..M``.  ``terminal`` is the final ``lambda = 0``
    step, kept for curve evaluation but not counted in ``M``.
    """

    entries: list
    terminal: Optional[Breakpoint] = None

    @property
    def M(self) -> int:
        return len(self.entries) - 1

    @property
    def breakpoints(self) -> list:
        return self.entries[1:]

    @property
    def all_entries(self) -> list:
        return self.entries + ([self.terminal] if self.terminal is not None else [])

    @property
    def lambdas(self) -> list:
        return [e.lam for e in self.entries[1:]]

    def vertex_entries(self) -> list:
        """Entries that are vertices of ``d(alpha)``.

        When ``lambda_1 = inf`` the complete tree is dominated by ``T^1``
        (same zero alarm, smaller delay) and is skipped.
        """
        if len(self.entries) > 1 and self.entries[1].lam == INF:
            return self.entries[1:]
        return list(self.entries)

    def vertices(self) -> list:
        return [e.point for e in self.vertex_entries()]

    def d0(self):
        return self.vertex_entries()[0].delay

    def __call__(self, alpha):
        return evaluate_curve(self, alpha)[0]


def _sweep_steps(tree0: StoppingTree) -> Iterator[tuple]:
    """Yield ``(m, lam, alpha, delay, removed_at)`` for every sweep step.

    ``removed_at`` maps an internal node of ``tree0`` to the step at which it
    stopped being internal; it is shared and grows as the sweep advances.
    The last yielded step has ``lam == 0``.
    """
    table = tree0.table
    internal = set(tree0.internal)
    agg = dict(tree0.agg)
    removed_at = {}

    def g_of(y):
        st = table[y]
        a_sub, b_sub = agg[y]
        return ratio(sub(b_sub, st.b), sub(st.a, a_sub))

    g = {y: g_of(y) for y in internal}
    a0, b0 = agg[()] if () in internal else (table[()].a, table[()].b)
    yield 0, INF, a0, b0, removed_at
    m = 0
    while True:
        m += 1
        if not internal:
            st = table[()]
            yield m, 0, st.a, st.b, removed_at
            return
        lam = max(g.values())
        hits = [y for y, v in g.items() if close(v, lam)]
        hitset = set(hits)
        roots = [y for y in hits if not any(y[:k] in hitset for k in range(len(y)))]
        touched = set()
        for r in roots:
            old_a, old_b = agg[r]
            st = table[r]
            da, db = st.a - old_a, st.b - old_b
            stack = [r]
            while stack:
                y = stack.pop()
                if y in internal:
                    internal.discard(y)
                    del agg[y]
                    del g[y]
                    removed_at[y] = m
                    stack.extend(y + (j,) for j in range(table.n_y))
            for k in range(len(r)):
                anc = r[:k]
                a, b = agg[anc]
                agg[anc] = (a + da, b + db)
                touched.add(anc)
        for y in touched:
            if y in internal:
                g[y] = g_of(y)
        if () in internal:
            alpha, delay = agg[()]
        else:
            alpha, delay = table[()].a, table[()].b
        yield m, lam, alpha, delay, removed_at
        if lam == 0:
            return


def _tree_at(tree0: StoppingTree, removed_at: dict, m: int) -> StoppingTree:
    return StoppingTree(tree0.table, (y for y in tree0.internal if removed_at.get(y, math.inf) > m))


def iter_sweep(tree0: StoppingTree) -> Iterator[Breakpoint]:
    """Lazy sweep over ``tree0``; yields entry 0, the break-points, then the terminal step."""
    for m, lam, alpha, delay, removed_at in _sweep_steps(tree0):
        yield Breakpoint(m, lam, alpha, delay, lambda m=m, r=removed_at: _tree_at(tree0, r, m))


def sweep_tree(tree0: StoppingTree) -> BreakpointCurve:
    steps = list(iter_sweep(tree0))
    return BreakpointCurve(steps[:-1], steps[-1])


def breakpoint_sweep(model: JointModel, rule: StoppingRule) -> BreakpointCurve:
    """All break-points of ``d(alpha)`` by the string-level pruning sweep."""
    return sweep_tree(complete_tree(model, rule))


# -- curve evaluation and bounds ----------------------------------------------


def evaluate_curve(curve: BreakpointCurve, alpha) -> tuple:
    """``(d(alpha), mixture)`` where ``mixture`` lists ``(tree, weight)`` with at most two trees.

    Mixing the two trees with these weights achieves false-alarm ``alpha``
    (or less, past the last vertex) at delay ``d(alpha)``.
    """
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    vs = curve.vertex_entries()
    if alpha >= vs[-1].alpha:
        return vs[-1].delay, [(vs[-1].tree, 1)]
    if alpha <= vs[0].alpha:
        return vs[0].delay, [(vs[0].tree, 1)]
    for left, right in zip(vs, vs[1:]):
        if left.alpha <= alpha < right.alpha:
            t = (alpha - left.alpha) / (right.alpha - left.alpha)
            d = (1 - t) * left.delay + t * right.delay
            if t == 0:
                return d, [(left.tree, 1)]
            return d, [(left.tree, 1 - t), (right.tree, t)]
    raise AssertionError("unreachable: vertices are sorted by alpha")  # pragma: no cover


def lower_bound(model: JointModel, rule: StoppingRule, alpha, steps: int = 2, method: str = "auto"):
    """Linear lower bound on ``d(alpha)`` from the first one or two sweep steps.

    ``steps=2``: ``d(0) - alpha * lambda_1`` when ``lambda_1`` is finite, else
    ``d(0) - alpha * lambda_2``.  ``steps=1``: ``d(0) - alpha * lambda_1``.
    The result is clamped at zero.
    """
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if steps not in (1, 2):
        raise ValueError("steps must be 1 or 2")
    entries = curve_head(model, rule, 2, method)
    lam1 = entries[1].lam
    d0 = entries[0].delay if lam1 != INF else entries[1].delay
    if steps == 1 or lam1 != INF:
        slope = lam1
    else:
        slope = entries[2].lam if len(entries) > 2 else 0
    if alpha == 0:
        return d0
    if slope == INF:
        return 0
    return max(d0 - alpha * slope, 0)


def curve_head(model: JointModel, rule: StoppingRule, steps: int, method: str = "auto") -> list:
    """Sweep entries ``0..steps`` (fewer if the sweep ends first), computed lazily.

    ``method`` is ``"string"``, ``"composition"`` or ``"auto"`` (composition
    when the rule is invariant by construction).
    """
    entries = []
    for e in _lazy_sweep(model, rule, method):
        entries.append(e)
        if e.m >= steps or e.lam == 0:
            break
    return entries


def d_zero(model: JointModel, rule: StoppingRule, method: str = "auto"):
    """``d(0)``: delay at the left end of the curve (from at most two sweep steps)."""
    head = curve_head(model, rule, 1, method)
    return head[1].delay if len(head) > 1 and head[1].lam == INF else head[0].delay


def _lazy_sweep(model, rule, method):
    from . import perm

    if method == "auto":
        method = "composition" if perm.rule_is_structurally_invariant(rule) else "string"
    if method == "composition":
        return perm.iter_comp_sweep(model, rule)
    if method == "string":
        return iter_sweep(complete_tree(model, rule))
    raise ValueError(f"unknown method {method!r}")


# -- exhaustive oracle --------------------------------------------------------


def count_trees(model: JointModel) -> int:
    """Number of full subtrees of the complete tree (zero-probability branches are leaves)."""

    def count(y):
        if len(y) >= model.kappa or model.prefix_prob(y) == 0:
            return 1
        prod = 1
        for j in range(model.n_y):
            prod *= count(y + (j,))
        return 1 + prod

    return count(())


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_left_hull(points) -> list:
    """Vertices of the decreasing lower convex hull of ``(alpha, delay)`` points."""
    pts = sorted(set(points))
    hull = []
    for p in pts:
        while len(hull) >= 2 and leq(_cross(hull[-2], hull[-1], p), 0):
            hull.pop()
        hull.append(p)
    dmin = min(p[1] for p in hull)
    for i, p in enumerate(hull):
        if close(p[1], dmin):
            return hull[: i + 1]
    return hull  # pragma: no cover


def brute_force_breakpoints(model: JointModel, rule: StoppingRule, cap: int = 10**6) -> BreakpointCurve:
    """Oracle: enumerate every stopping-time tree and take the hull of operating points.

    Node statistics are computed by direct enumeration over x-prefixes, not
    by the state recursion the sweep uses.  Each vertex is labelled with its
    smallest achieving tree; multipliers are the hull slopes.
    """
    total = count_trees(model)
    if total > cap:
        raise OracleRefusal(total, cap)
    kappa = model.kappa
    stats = {}

    def options(y):
        st = stats.setdefault(y, node_stats(model, rule, y, method="enumerate"))
        out = [(st.a, st.b, frozenset())]
        if len(y) < kappa and st.w != 0:
            kids = [options(y + (j,)) for j in range(model.n_y)]
            for combo in itertools.product(*kids):
                a = sum((c[0] for c in combo), 0)
                b = sum((c[1] for c in combo), 0)
                out.append((a, b, frozenset().union(*(c[2] for c in combo)) | {y}))
        return out

    best = {}
    for a, b, internal in options(()):
        key = (a, b)
        if key not in best or len(internal) < len(best[key]):
            best[key] = internal
    hull = lower_left_hull(best)
    table = NodeTable(model, rule)
    entries = []
    for m, (a, b) in enumerate(hull):
        lam = INF if m == 0 else (hull[m - 1][1] - b) / (a - hull[m - 1][0])
        internal = best[(a, b)]
        entries.append(Breakpoint(m, lam, a, b, lambda i=internal: StoppingTree(table, i)))
    return BreakpointCurve(entries, None)
