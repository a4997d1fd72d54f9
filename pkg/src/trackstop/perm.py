"""Polynomial-time path for permutation-invariant rules on i.i.d. models.

When ``q`` depends on an x-prefix only through its composition, every
per-string quantity the sweep needs (``w``, ``a``, ``F`` and the subtree
aggregates of a permutation-closed tree) depends on a y-prefix only through
its composition.  The sweep then runs on composition classes: there are
``O(kappa^{|Y|})`` of them instead of ``|Y|^kappa`` strings.

Per-string recursions used on a class ``c`` of length ``n``::

    A(c) = a(c)                       if c is a leaf
         = sum_gamma A(c + gamma)     otherwise
    N(c) = 0                          if c is a leaf
         = w(c) - a(c) + sum_gamma N(c + gamma)

``N`` equals ``b_sub - b`` because ``sum_gamma b(y gamma) - b(y) = w(y) F(y)``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

from ._numeric import INF, close, ratio, snap, sub
from .model import JointModel, NodeStats, Refusal, ZERO_STATS
from .rules import StoppingRule, stop_cdf
from .solver import Breakpoint, BreakpointCurve, iter_sweep
from .tree import NodeTable, StoppingTree, complete_tree


class ClassBreakWarning(UserWarning):
    """The class-level sweep hit a step that would split a composition class."""


#: largest complete string tree the class-break fallback will build
STRING_FALLBACK_LIMIT = 2_000_000

#: default number of x-prefixes the invariance check may enumerate
CHECK_BUDGET = 1_000_000


# -- compositions -------------------------------------------------------------


@dataclass(frozen=True)
class Composition:
    """Symbol counts of a string; ``counts[j]`` is the number of occurrences of symbol ``j``."""

    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValueError("composition counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def of(cls, seq, n_symbols: int) -> "Composition":
        counts = [0] * n_symbols
        for j in seq:
            counts[j] += 1
        return cls(tuple(counts))

    @classmethod
    def from_mapping(cls, alphabet, mapping: Mapping) -> "Composition":
        for s in mapping:
            alphabet.index(s)
        return cls(tuple(int(mapping.get(s, 0)) for s in alphabet))

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def multiplicity(self) -> int:
        return multinomial(self.counts)

    def representative(self) -> tuple:
        """The sorted string with this composition."""
        return tuple(j for j, c in enumerate(self.counts) for _ in range(c))


def multinomial(counts) -> int:
    out, total = 1, 0
    for c in counts:
        total += c
        out *= math.comb(total, c)
    return out


def _up(c, j):
    return c[:j] + (c[j] + 1,) + c[j + 1:]


def _down(c, j):
    return c[:j] + (c[j] - 1,) + c[j + 1:]


def _parents(c):
    return [_down(c, j) for j in range(len(c)) if c[j]]


def _as_counts(c, model: JointModel) -> tuple:
    if isinstance(c, Composition):
        counts = c.counts
    elif isinstance(c, Mapping):
        counts = Composition.from_mapping(model.y_alphabet, c).counts
    else:
        counts = tuple(int(v) for v in c)
    if len(counts) != model.n_y:
        raise ValueError(f"composition needs {model.n_y} counts, got {len(counts)}")
    if sum(counts) > model.kappa:
        raise ValueError(f"composition length {sum(counts)} exceeds kappa = {model.kappa}")
    return counts


# -- rule invariance ----------------------------------------------------------


def rule_is_structurally_invariant(rule: StoppingRule) -> bool:
    return bool(rule.structurally_invariant)


@dataclass(frozen=True)
class InvarianceReport:
    invariant: bool
    witness: Optional[tuple] = None
    structural: bool = False

    def __bool__(self):
        return self.invariant


def is_rule_perm_invariant(model: JointModel, rule: StoppingRule, budget: int = CHECK_BUDGET) -> InvarianceReport:
    """Check ``q(x^n) = q(pi(x^n))`` over adjacent transpositions ``pi``.

    First-hit, nonnegative sum-threshold, fixed and composition-table rules
    are invariant by construction.  Otherwise every x-prefix of length
    ``2..kappa-1`` is enumerated (shorter and full-length prefixes are
    trivially invariant after truncation); the witness is the first pair
    ``(x^n, pi(x^n))`` with different values.
    """
    if rule_is_structurally_invariant(rule):
        return InvarianceReport(True, None, True)
    kappa, n_x = model.kappa, model.n_x
    total = sum(n_x**n for n in range(2, kappa))
    if total > budget:
        raise Refusal(f"invariance check needs {total} x-prefixes, above the budget of {budget}")
    for n in range(2, kappa):
        for xs in itertools.product(range(n_x), repeat=n):
            q = stop_cdf(rule, xs, kappa)
            for i in range(n - 1):
                if xs[i] < xs[i + 1]:
                    ys = xs[:i] + (xs[i + 1], xs[i]) + xs[i + 2:]
                    if not close(q, stop_cdf(rule, ys, kappa)):
                        dec = model.x_alphabet.decode
                        return InvarianceReport(False, (dec(xs), dec(ys)))
    return InvarianceReport(True)


def _require_invariant(model, rule):
    report = is_rule_perm_invariant(model, rule)
    if not report:
        a, b = report.witness
        raise Refusal(
            f"stopping rule is not permutation invariant (q({a!r}) != q({b!r})); use the string-level sweep"
        )


# -- class statistics ---------------------------------------------------------


class ClassStats:
    """Per-string ``w``, ``F`` and ``a`` for y-composition classes, memoized.

    ``F(c)`` is obtained from the distribution of the x-composition given
    any y-string of class ``c``, built one symbol at a time.
    """

    def __init__(self, model: JointModel, rule: StoppingRule):
        self.model = model
        self.rule = rule
        self.kappa = model.kappa
        self._structural = rule_is_structurally_invariant(rule)
        self._dist = {(0,) * model.n_y: {(0,) * model.n_x: 1}}
        self._F = {}
        self._q = {}
        self._w = {}
        self._a = {}

    def w(self, c):
        out = self._w.get(c)
        if out is None:
            out = 1
            for j, k in enumerate(c):
                if k:
                    out = out * self.model.py[j] ** k
            self._w[c] = out
        return out

    def _qx(self, xc):
        q = self._q.get(xc)
        if q is None:
            if self._structural:
                q = self.rule.comp_cdf(xc)
            else:
                q = self.rule.cdf(Composition(xc).representative())
            self._q[xc] = q
        return q

    def dist(self, c) -> dict:
        d = self._dist.get(c)
        if d is None:
            j = next(j for j, k in enumerate(c) if k)
            row = self.model.cond[j]
            d = {}
            for xc, p in self.dist(_down(c, j)).items():
                for x, px in enumerate(row):
                    if px != 0:
                        key = _up(xc, x)
                        d[key] = d.get(key, 0) + p * px
            self._dist[c] = d
        return d

    def F(self, c):
        """``P(S <= n | Y^n = y)`` for any ``y`` of class ``c`` (requires ``w(c) > 0``)."""
        f = self._F.get(c)
        if f is None:
            n = sum(c)
            if n == 0:
                f = 0
            elif n >= self.kappa:
                f = 1
            else:
                f = sum((p * self._qx(xc) for xc, p in self.dist(c).items()), 0)
            self._F[c] = f
        return f

    def a(self, c):
        out = self._a.get(c)
        if out is None:
            w = self.w(c)
            out = 0 if w == 0 else w * (1 - self.F(c))
            self._a[c] = out
        return out

    def string_stats(self, c) -> NodeStats:
        """``(w, a, b)`` of one string of class ``c``, with ``b`` for its sorted ordering."""
        w = self.w(c)
        if w == 0:
            return ZERO_STATS
        rep = Composition(c).representative()
        cum = 0
        k = [0] * len(c)
        for j in rep[:-1]:
            k[j] += 1
            cum = cum + self.F(tuple(k))
        return NodeStats(w, w * (1 - self.F(c)), w * cum)


def comp_node_stats(model: JointModel, rule: StoppingRule, c) -> NodeStats:
    """Class totals ``(sum w, sum a, sum b)`` over every y-string of composition ``c``.

    ``w`` and ``a`` are the same for every string of the class, so their
    totals are the multiplicity times the per-string value.  ``b`` depends
    on the ordering; its total sums ``F`` over every prefix class weighted by
    the number of strings passing through it.
    """
    _require_invariant(model, rule)
    counts = _as_counts(c, model)
    stats = ClassStats(model, rule)
    w = stats.w(counts)
    if w == 0:
        return ZERO_STATS
    mult = multinomial(counts)
    n = sum(counts)
    total = 0
    for sub in itertools.product(*(range(k + 1) for k in counts)):
        k = sum(sub)
        if 0 < k < n:
            rest = tuple(a - b for a, b in zip(counts, sub))
            total = total + multinomial(sub) * multinomial(rest) * stats.F(sub)
    return NodeStats(mult * w, mult * stats.a(counts), w * total)


def iter_compositions(n_symbols: int, kappa: int) -> Iterator[tuple]:
    """Every composition of length ``0..kappa``, by increasing length."""
    for n in range(kappa + 1):
        for cut in itertools.combinations(range(n + n_symbols - 1), n_symbols - 1):
            bounds = (-1,) + cut + (n + n_symbols - 1,)
            yield tuple(bounds[i + 1] - bounds[i] - 1 for i in range(n_symbols))


# -- composition trees --------------------------------------------------------


class CompositionTree:
    """Permutation-closed stopping tree stored by its internal composition classes.

    A y-string is internal iff its composition is in ``internal``; the set is
    closed under sub-compositions.
    """

    def __init__(self, model: JointModel, rule: StoppingRule, internal, alarm=None, delay=None):
        self.model = model
        self.rule = rule
        self.internal = frozenset(internal)
        self.alarm = alarm
        self.delay = delay

    @property
    def kappa(self):
        return self.model.kappa

    @property
    def y_alphabet(self):
        return self.model.y_alphabet

    @property
    def is_trivial(self) -> bool:
        return not self.internal

    @property
    def operating_point(self):
        return (self.alarm, self.delay)

    def _comp(self, y):
        return Composition.of(y, self.model.n_y).counts

    def is_internal(self, y) -> bool:
        return self._comp(tuple(y)) in self.internal

    def __contains__(self, y) -> bool:
        y = tuple(y)
        return not y or self._comp(y[:-1]) in self.internal

    def is_leaf(self, y) -> bool:
        y = tuple(y)
        return y in self and self._comp(y) not in self.internal

    def induced_stop(self, y_sequence) -> int:
        y = self.y_alphabet.encode(y_sequence)
        for n in range(len(y) + 1):
            if self._comp(y[:n]) not in self.internal:
                return n
        raise ValueError(f"sequence of length {len(y)} does not reach a leaf")

    def internal_strings(self) -> Iterator[tuple]:
        stack = [()] if (0,) * self.model.n_y in self.internal else []
        while stack:
            y = stack.pop()
            yield y
            for j in range(self.model.n_y):
                z = y + (j,)
                if self._comp(z) in self.internal:
                    stack.append(z)

    def expand(self, table: NodeTable | None = None) -> StoppingTree:
        """The equivalent string-level tree (exponential in ``kappa``)."""
        table = table or NodeTable(self.model, self.rule)
        return StoppingTree(table, self.internal_strings())

    def __eq__(self, other):
        return isinstance(other, CompositionTree) and self.kappa == other.kappa and self.internal == other.internal

    def __hash__(self):
        return hash((self.kappa, self.internal))

    def __le__(self, other):
        return self.internal <= other.internal

    def __lt__(self, other):
        return self.internal < other.internal

    def to_dict(self) -> dict:
        from ._numeric import fmt

        ys = self.y_alphabet
        return {
            "internal_classes": [
                {ys[j]: k for j, k in enumerate(c) if k} for c in sorted(self.internal, key=lambda c: (sum(c), c))
            ],
            "alarm": None if self.alarm is None else fmt(self.alarm),
            "delay": None if self.delay is None else fmt(self.delay),
        }

    def dump(self) -> str:
        ys = self.y_alphabet
        lines = []
        for c in sorted(self.internal, key=lambda c: (sum(c), c)):
            label = " ".join(f"{ys[j]}:{k}" for j, k in enumerate(c) if k) or "root"
            lines.append(f"{'  ' * sum(c)}{label} [internal, {multinomial(c)} strings]")
        return "\n".join(lines) + ("\n" if lines else "")

    def __repr__(self):
        return f"CompositionTree(kappa={self.kappa}, classes={len(self.internal)})"


# -- class-level sweep --------------------------------------------------------


def _fallback_size(model: JointModel) -> int:
    return sum(model.n_y**n for n in range(model.kappa + 1))


def iter_comp_sweep(model: JointModel, rule: StoppingRule) -> Iterator[Breakpoint]:
    """Lazy class-level sweep; same step semantics as :func:`trackstop.solver.iter_sweep`.

    If a step would split a composition class, a :class:`ClassBreakWarning`
    is issued and the remaining steps come from the string-level sweep.
    """
    _require_invariant(model, rule)
    st = ClassStats(model, rule)
    kappa, n_y = model.kappa, model.n_y
    root = (0,) * n_y

    internal = set()
    frontier = [root]
    while frontier:
        c = frontier.pop()
        if sum(c) < kappa and st.w(c) != 0 and c not in internal:
            internal.add(c)
            frontier.extend(_up(c, j) for j in range(n_y))
    internal0 = frozenset(internal)
    A, N, g = {}, {}, {}

    def refresh(c):
        a_sum = n_sum = 0
        for j in range(n_y):
            k = _up(c, j)
            if k in internal:
                a_sum, n_sum = a_sum + A[k], n_sum + N[k]
            else:
                a_sum = a_sum + st.a(k)
        a_here = st.a(c)
        A[c] = a_sum
        N[c] = st.w(c) - a_here + n_sum
        g[c] = ratio(snap(N[c]), sub(a_here, a_sum))

    for c in sorted(internal, key=sum, reverse=True):
        refresh(c)

    removed_at = {}

    def point():
        return (A[root], N[root]) if root in internal else (1, 0)

    def make(m, lam, alpha, delay):
        def factory():
            kept = (c for c in internal0 if removed_at.get(c, math.inf) > m)
            return CompositionTree(model, rule, kept, alpha, delay)

        return Breakpoint(m, lam, alpha, delay, factory)

    yield make(0, INF, *point())
    m = 0
    while True:
        m += 1
        if not internal:
            yield make(m, 0, 1, 0)
            return
        lam = max(g.values())
        hits = {c for c, v in g.items() if close(v, lam)}
        removed = set()
        stack = list(hits)
        while stack:
            c = stack.pop()
            if c in internal and c not in removed:
                removed.add(c)
                stack.extend(_up(c, j) for j in range(n_y))
        avoid = {}
        broken = False
        for c in sorted(removed, key=sum):
            avoid[c] = c not in hits and any(avoid.get(p, p in internal) for p in _parents(c))
            if avoid[c]:
                broken = True
                break
        if broken:
            yield from _string_fallback(model, rule, m)
            return
        internal -= removed
        for c in removed:
            removed_at[c] = m
            del A[c], N[c], g[c]
        affected = set()
        stack = [p for c in removed for p in _parents(c) if p in internal]
        while stack:
            c = stack.pop()
            if c not in affected:
                affected.add(c)
                stack.extend(p for p in _parents(c) if p in internal)
        for c in sorted(affected, key=sum, reverse=True):
            refresh(c)
        yield make(m, lam, *point())
        if lam == 0:
            return


def _string_fallback(model, rule, m):
    size = _fallback_size(model)
    if size > STRING_FALLBACK_LIMIT:
        raise Refusal(
            f"class-level sweep would split a composition class at step {m} and the string-level "
            f"fallback needs {size} nodes, above the limit of {STRING_FALLBACK_LIMIT}"
        )
    warnings.warn(
        f"step {m} would split a composition class; continuing with the string-level sweep",
        ClassBreakWarning,
        stacklevel=3,
    )
    for e in iter_sweep(complete_tree(model, rule)):
        if e.m >= m:
            yield e


def comp_breakpoint_sweep(model: JointModel, rule: StoppingRule) -> BreakpointCurve:
    """All break-points of ``d(alpha)`` by the class-level sweep."""
    steps = list(iter_comp_sweep(model, rule))
    return BreakpointCurve(steps[:-1], steps[-1])


# -- tree invariance ----------------------------------------------------------


def is_tree_perm_invariant(tree) -> InvarianceReport:
    """Whether the internal-node set is closed under adjacent transpositions.

    The witness is ``(y, pi(y))`` with ``y`` internal and ``pi(y)`` not.
    """
    if isinstance(tree, CompositionTree):
        return InvarianceReport(True, None, True)
    internal = tree.internal
    for y in sorted(internal, key=lambda y: (len(y), y)):
        for i in range(len(y) - 1):
            if y[i] != y[i + 1]:
                z = y[:i] + (y[i + 1], y[i]) + y[i + 2:]
                if z not in internal:
                    return InvarianceReport(False, (tree.label(y), tree.label(z)))
    return InvarianceReport(True)
