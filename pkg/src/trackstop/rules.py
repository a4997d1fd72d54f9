"""Stopping rules on the X side.

A rule is described by its cumulative stop probability
``q(x^n) = P(S <= n | X^n = x^n)``.  Rules work on symbol *indices*; use the
``from_symbols`` constructors (or :mod:`trackstop.io`) to build them from
labels.  Truncation at the horizon (``S <= kappa``) is applied by
:func:`stop_cdf`, not by the rules themselves.

Rules that can be simulated by a small state machine expose it through
:meth:`StoppingRule.state_machine`; the model code uses it to propagate a
distribution over states instead of enumerating every x-prefix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Mapping, Sequence

from ._numeric import is_exact, parse_number


@dataclass(frozen=True)
class RuleState:
    """Finite state machine reproducing ``q`` along any x-prefix."""

    initial: Hashable
    step: Callable[[Hashable, int], Hashable]
    stop: Callable[[Hashable], object]

    def run(self, xs: Sequence[int]):
        s = self.initial
        for x in xs:
            s = self.step(s, x)
        return s


class StoppingRule:
    kind = "abstract"
    #: ``True`` when q depends on the prefix only through its composition
    structurally_invariant = False

    def cdf(self, xs: Sequence[int]):
        """``P(S <= n | X^n = xs)`` before horizon truncation."""
        raise NotImplementedError

    def comp_cdf(self, counts: Sequence[int]):
        """Same as :meth:`cdf` but keyed by the x-composition."""
        raise TypeError(f"{self.kind} rule is not composition-determined")

    def state_machine(self) -> RuleState:
        # every prefix is its own state; equivalent to full enumeration
        return RuleState((), lambda s, x: s + (x,), self.cdf)

    @property
    def exact(self) -> bool:
        return True

    def to_float(self) -> "StoppingRule":
        return self


def stop_cdf(rule: StoppingRule, xs: Sequence[int], kappa: int):
    """Horizon-truncated ``P(S <= n | X^n = xs)`` (``S <= kappa`` a.s.)."""
    if len(xs) >= kappa:
        return 1
    if not xs:
        return 0
    return rule.cdf(xs)


@dataclass(frozen=True)
class FirstHit(StoppingRule):
    """``S = inf{i : X_i in targets}``."""

    targets: frozenset

    kind = "first_hit"
    structurally_invariant = True

    def __post_init__(self):
        object.__setattr__(self, "targets", frozenset(self.targets))

    @classmethod
    def from_symbols(cls, x_alphabet, symbols):
        return cls(frozenset(x_alphabet.index(s) for s in symbols))

    def cdf(self, xs):
        return 1 if any(x in self.targets for x in xs) else 0

    def comp_cdf(self, counts):
        return 1 if any(counts[i] for i in self.targets) else 0

    def state_machine(self):
        targets = self.targets
        return RuleState(False, lambda hit, x: hit or x in targets, lambda hit: 1 if hit else 0)


@dataclass(frozen=True)
class SumThreshold(StoppingRule):
    """``S = inf{i : sum_{k<=i} f(X_k) >= threshold}`` with integer weights ``f``."""

    weights: tuple
    threshold: int

    kind = "sum_threshold"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(v) for v in self.weights))

    @classmethod
    def from_symbols(cls, x_alphabet, weights: Mapping[str, int], threshold: int):
        return cls(tuple(int(weights.get(s, 0)) for s in x_alphabet), int(threshold))

    def cdf(self, xs):
        total = 0
        for x in xs:
            total += self.weights[x]
            if total >= self.threshold:
                return 1
        return 0

    def comp_cdf(self, counts):
        # composition-determined only when the running sum cannot dip back
        # below the threshold, i.e. all weights are nonnegative
        if any(w < 0 for w in self.weights):
            raise TypeError("sum_threshold with negative weights is not composition-determined")
        return 1 if sum(c * w for c, w in zip(counts, self.weights)) >= self.threshold else 0

    @property
    def structurally_invariant(self) -> bool:
        return all(w >= 0 for w in self.weights)

    def state_machine(self):
        weights, threshold = self.weights, self.threshold

        def step(s, x):
            if s is None:
                return None
            s += weights[x]
            return None if s >= threshold else s

        initial = None if threshold <= 0 else 0
        return RuleState(initial, step, lambda s: 1 if s is None else 0)


@dataclass(frozen=True)
class FixedTime(StoppingRule):
    """``S = time`` deterministically."""

    time: int

    kind = "fixed"
    structurally_invariant = True

    def cdf(self, xs):
        return 1 if len(xs) >= self.time else 0

    def comp_cdf(self, counts):
        return 1 if sum(counts) >= self.time else 0

    def state_machine(self):
        t = self.time
        return RuleState(0, lambda n, x: min(n + 1, t), lambda n: 1 if n >= t else 0)


def _check_q(value, where):
    q = parse_number(value)
    if not 0 <= q <= 1:
        raise ValueError(f"{where}: stop probability {value!r} outside [0, 1]")
    return q


@dataclass(frozen=True)
class PrefixTable(StoppingRule):
    """Cumulative stop probabilities listed per x-prefix.

    Missing prefixes inherit the value of their longest listed prefix (the
    empty prefix has value 0), so a sparse table describes a rule that only
    adds stopping mass where an entry is given.  Values may be fractional,
    which describes a randomized stopping time.
    """

    table: Mapping[tuple, object] = field(default_factory=dict)

    kind = "table"

    def __post_init__(self):
        clean = {}
        for key, value in dict(self.table).items():
            clean[tuple(int(i) for i in key)] = _check_q(value, f"table entry {key!r}")
        object.__setattr__(self, "table", clean)

    @classmethod
    def from_symbols(cls, x_alphabet, table: Mapping):
        return cls({tuple(x_alphabet.index(s) for s in key): v for key, v in table.items()})

    def cdf(self, xs):
        xs = tuple(xs)
        for n in range(len(xs), 0, -1):
            q = self.table.get(xs[:n])
            if q is not None:
                return q
        return 0

    @property
    def exact(self):
        return all(is_exact(v) for v in self.table.values())

    def to_float(self):
        return PrefixTable({k: float(v) for k, v in self.table.items()})

    def monotonicity_violations(self):
        """Entries whose value is below the value inherited from a shorter prefix."""
        bad = []
        for key, q in self.table.items():
            parent = self.cdf(key[:-1]) if len(key) > 1 else 0
            if q < parent:
                bad.append((key, parent, q))
        return bad


@dataclass(frozen=True)
class CompositionTable(StoppingRule):
    """Cumulative stop probabilities keyed by x-composition (count vector).

    Missing compositions take the largest value among their immediate
    sub-compositions, which keeps ``q`` monotone along prefix extension.
    Rules of this kind are permutation invariant by construction.
    """

    table: Mapping[tuple, object] = field(default_factory=dict)
    n_symbols: int = 2

    kind = "table_by_composition"
    structurally_invariant = True

    def __post_init__(self):
        clean = {}
        for key, value in dict(self.table).items():
            key = tuple(int(c) for c in key)
            if len(key) != self.n_symbols:
                raise ValueError(f"composition {key!r} does not have {self.n_symbols} counts")
            clean[key] = _check_q(value, f"composition entry {key!r}")
        object.__setattr__(self, "table", clean)
        object.__setattr__(self, "_memo", {})

    @classmethod
    def from_symbols(cls, x_alphabet, table: Mapping):
        out = {}
        for counts, v in table.items():
            out[tuple(int(counts.get(s, 0)) for s in x_alphabet)] = v
        return cls(out, len(x_alphabet))

    def comp_cdf(self, counts):
        counts = tuple(counts)
        memo = self._memo
        if counts in memo:
            return memo[counts]
        q = self.table.get(counts)
        if q is None:
            q = 0
            for i, c in enumerate(counts):
                if c:
                    sub = counts[:i] + (c - 1,) + counts[i + 1:]
                    q = max(q, self.comp_cdf(sub))
        memo[counts] = q
        return q

    def cdf(self, xs):
        counts = [0] * self.n_symbols
        for x in xs:
            counts[x] += 1
        return self.comp_cdf(counts)

    def state_machine(self):
        def step(counts, x):
            return counts[:x] + (counts[x] + 1,) + counts[x + 1:]

        return RuleState((0,) * self.n_symbols, step, self.comp_cdf)

    @property
    def exact(self):
        return all(is_exact(v) for v in self.table.values())

    def to_float(self):
        return CompositionTable({k: float(v) for k, v in self.table.items()}, self.n_symbols)


RULE_KINDS = ("first_hit", "sum_threshold", "table", "table_by_composition", "fixed")


def random_prefix_table(rng, n_x: int, kappa: int, randomized: bool = True) -> PrefixTable:
    """Random monotone prefix table, used by test batteries."""
    table = {}

    def grow(prefix, parent_q):
        if len(prefix) >= kappa:
            return
        for x in range(n_x):
            key = prefix + (x,)
            if parent_q == 1:
                q = Fraction(1)
            elif randomized and rng.random() < 0.5:
                q = parent_q + (1 - parent_q) * Fraction(int(rng.integers(0, 5)), 4)
            else:
                q = Fraction(int(rng.random() < 0.4)) if parent_q == 0 else parent_q
            table[key] = q
            grow(key, q)

    grow((), Fraction(0))
    return PrefixTable(table)


def random_composition_table(rng, n_x: int, kappa: int, randomized: bool = True) -> CompositionTable:
    from itertools import product

    table = {}
    for n in range(1, kappa):
        for counts in product(range(n + 1), repeat=n_x):
            if sum(counts) != n:
                continue
            base = 0
            for i, c in enumerate(counts):
                if c:
                    sub = counts[:i] + (c - 1,) + counts[i + 1:]
                    base = max(base, table.get(sub, Fraction(0)))
            if base == 1:
                q = Fraction(1)
            elif randomized:
                q = base + (1 - base) * Fraction(int(rng.integers(0, 4)), 4)
            else:
                q = Fraction(1) if rng.random() < 0.35 else base
            table[counts] = q
    return CompositionTable(table, n_x)
