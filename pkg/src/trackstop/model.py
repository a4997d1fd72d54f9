"""Joint process, per-node statistics and Monte Carlo validation.

The process ``(X_i, Y_i)`` is i.i.d. with joint pmf ``p(x, y)``.  Everything
the solvers need is derived from the conditional stop probabilities

    F(y^n) = P(S <= n | Y^n = y^n),

which for an i.i.d. pair process also equals ``P(S <= n | Y^m = y^m)`` for
any extension ``y^m`` of ``y^n``.  The per-node statistics are then

    w(y^n) = P(Y^n = y^n)
    a(y^n) = w * (1 - F(y^n))                   (alarm mass)
    b(y^n) = w * sum_{k<n} F(y^k)               (delay mass)
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist
from typing import Iterator, Sequence

import numpy as np

from ._numeric import is_exact, parse_number
from .rules import StoppingRule, stop_cdf


class ConditioningError(ValueError):
    """Raised when conditioning on a zero-probability observation prefix."""


class Refusal(RuntimeError):
    """A computation was declined: a size cap or a precondition would be violated."""


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(symbols)})

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def index(self, symbol) -> int:
        try:
            return self._index[str(symbol)]
        except KeyError:
            raise ValueError(f"unknown symbol {symbol!r}; alphabet is {list(self.symbols)}") from None

    def encode(self, seq) -> tuple:
        """Indices for ``seq``: a tuple of ints is returned as-is, strings are split per symbol."""
        if isinstance(seq, str):
            if all(len(s) == 1 for s in self.symbols):
                return tuple(self.index(c) for c in seq)
            seq = seq.split(",") if seq else []
        out = []
        for s in seq:
            if isinstance(s, (int, np.integer)):
                if not 0 <= s < len(self.symbols):
                    raise ValueError(f"symbol index {s} out of range")
                out.append(int(s))
            else:
                out.append(self.index(s))
        return tuple(out)

    def decode(self, idx: Sequence[int]) -> str:
        parts = [self.symbols[i] for i in idx]
        if all(len(s) == 1 for s in self.symbols):
            return "".join(parts)
        return ",".join(parts)


@dataclass(frozen=True)
class NodeStats:
    w: object
    a: object
    b: object

    def __iter__(self):
        return iter((self.w, self.a, self.b))

    def cost(self, lam):
        return self.b + lam * self.a


ZERO_STATS = NodeStats(0, 0, 0)


class JointModel:
    """I.i.d. pair process on finite alphabets with horizon ``kappa``.

    ``pmf[i][j]`` is ``P(X = x_alphabet[i], Y = y_alphabet[j])``.  Entries may
    be ints, Fractions, ``"p/q"`` strings or floats; any float switches the
    model to float mode.
    """

    def __init__(self, x_alphabet, y_alphabet, pmf, kappa: int):
        self.x_alphabet = x_alphabet if isinstance(x_alphabet, Alphabet) else Alphabet(tuple(x_alphabet))
        self.y_alphabet = y_alphabet if isinstance(y_alphabet, Alphabet) else Alphabet(tuple(y_alphabet))
        rows = [list(r) for r in pmf]
        if len(rows) != len(self.x_alphabet):
            raise ValueError(f"pmf: expected {len(self.x_alphabet)} rows (one per x symbol), got {len(rows)}")
        for i, r in enumerate(rows):
            if len(r) != len(self.y_alphabet):
                raise ValueError(
                    f"pmf: row {i} has {len(r)} entries, expected {len(self.y_alphabet)} (one per y symbol)"
                )
        self.pmf = tuple(tuple(parse_number(v) for v in r) for r in rows)
        self.kappa = int(kappa)
        nx, ny = len(self.x_alphabet), len(self.y_alphabet)
        self.py = tuple(sum((self.pmf[i][j] for i in range(nx)), 0) for j in range(ny))
        self.px = tuple(sum(self.pmf[i], 0) for i in range(nx))
        # cond[j][i] = P(X = i | Y = j), None when P(Y = j) = 0
        self.cond = tuple(
            tuple(self.pmf[i][j] / self.py[j] for i in range(nx)) if self.py[j] != 0 else None
            for j in range(ny)
        )

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for r in self.pmf for v in r)

    @property
    def n_x(self) -> int:
        return len(self.x_alphabet)

    @property
    def n_y(self) -> int:
        return len(self.y_alphabet)

    def with_kappa(self, kappa: int) -> "JointModel":
        return JointModel(self.x_alphabet, self.y_alphabet, self.pmf, kappa)

    def to_float(self) -> "JointModel":
        return JointModel(self.x_alphabet, self.y_alphabet, [[float(v) for v in r] for r in self.pmf], self.kappa)

    def prefix_prob(self, y) -> object:
        w = 1
        for j in y:
            w = w * self.py[j]
        return w

    def __eq__(self, other):
        return (
            isinstance(other, JointModel)
            and self.x_alphabet == other.x_alphabet
            and self.y_alphabet == other.y_alphabet
            and self.pmf == other.pmf
            and self.kappa == other.kappa
        )

    def __repr__(self):
        return (
            f"JointModel(x={list(self.x_alphabet)}, y={list(self.y_alphabet)}, "
            f"kappa={self.kappa}, exact={self.exact})"
        )


def validate_model(model: JointModel) -> list:
    """Return a list of violation messages; empty means the model is usable."""
    problems = []
    if len(model.x_alphabet) == 0:
        problems.append("x_alphabet is empty")
    if len(model.y_alphabet) == 0:
        problems.append("y_alphabet is empty")
    for name, alph in (("x_alphabet", model.x_alphabet), ("y_alphabet", model.y_alphabet)):
        if len(set(alph.symbols)) != len(alph.symbols):
            problems.append(f"{name} has repeated symbols")
    for i, row in enumerate(model.pmf):
        for j, v in enumerate(row):
            if v < 0:
                problems.append(f"negative mass at pmf[{i}][{j}] = {v}")
    total = sum((v for r in model.pmf for v in r), 0)
    if model.exact:
        if total != 1:
            problems.append(f"mass sum != 1 (got {total})")
    elif abs(total - 1) > 1e-12:
        problems.append(f"mass sum != 1 (got {total!r})")
    if model.kappa < 1:
        problems.append(f"kappa >= 1 required (got {model.kappa})")
    return problems


def validate_rule(model: JointModel, rule: StoppingRule) -> list:
    problems = []
    monotone = getattr(rule, "monotonicity_violations", None)
    if monotone is not None:
        for key, parent, q in monotone():
            problems.append(
                f"table entry {model.x_alphabet.decode(key)!r} = {q} is below its prefix value {parent}"
            )
    targets = getattr(rule, "targets", None)
    if targets is not None and any(not 0 <= t < model.n_x for t in targets):
        problems.append("first_hit target outside the x alphabet")
    weights = getattr(rule, "weights", None)
    if weights is not None and len(weights) != model.n_x:
        problems.append("sum_threshold weights do not match the x alphabet")
    n_symbols = getattr(rule, "n_symbols", None)
    if n_symbols is not None and n_symbols != model.n_x:
        problems.append("composition table does not match the x alphabet")
    return problems


# -- conditional stop probabilities ------------------------------------------


def _push(dist: dict, machine, cond_row) -> dict:
    out = {}
    for s, p in dist.items():
        for x, px in enumerate(cond_row):
            if px == 0:
                continue
            t = machine.step(s, x)
            out[t] = out.get(t, 0) + p * px
    return out


def _stop_mass(dist: dict, machine, depth: int, kappa: int):
    if depth >= kappa:
        return 1
    if depth == 0:
        return 0
    return sum((p * machine.stop(s) for s, p in dist.items()), 0)


def cdf_path(model: JointModel, rule: StoppingRule, y: Sequence[int]) -> list:
    """``[F(y^0), F(y^1), ..., F(y^n)]`` by forward state recursion."""
    machine = rule.state_machine()
    dist = {machine.initial: 1}
    out = [0]
    for k, j in enumerate(y, start=1):
        row = model.cond[j]
        if row is None:
            raise ConditioningError(f"P(Y = {model.y_alphabet[j]!r}) = 0; cannot condition on this prefix")
        dist = _push(dist, machine, row)
        out.append(_stop_mass(dist, machine, k, model.kappa))
    return out


def cdf_enumerate(model: JointModel, rule: StoppingRule, y: Sequence[int], k: int):
    """``P(S <= k | Y^k = y^k)`` by summing over every x-prefix of length ``k``."""
    y = tuple(y)[:k]
    for j in y:
        if model.cond[j] is None:
            raise ConditioningError(f"P(Y = {model.y_alphabet[j]!r}) = 0; cannot condition on this prefix")
    total = 0
    for xs in itertools.product(range(model.n_x), repeat=k):
        weight = 1
        for x, j in zip(xs, y):
            weight = weight * model.cond[j][x]
            if weight == 0:
                break
        if weight != 0:
            total = total + weight * stop_cdf(rule, xs, model.kappa)
    return total


def stop_cdf_given_y(model: JointModel, rule: StoppingRule, y_prefix, k: int, method: str = "state"):
    """``P(S <= k | Y^n = y^n)`` for ``k <= n``."""
    y = model.y_alphabet.encode(y_prefix)
    if not 0 <= k <= len(y):
        raise ValueError(f"k must lie in [0, {len(y)}], got {k}")
    if len(y) > model.kappa:
        raise ValueError(f"prefix length {len(y)} exceeds kappa = {model.kappa}")
    if model.prefix_prob(y) == 0:
        raise ConditioningError(f"P(Y^n = {y_prefix!r}) = 0; cannot condition on this prefix")
    if method == "state":
        return cdf_path(model, rule, y[:k])[k]
    if method == "enumerate":
        return cdf_enumerate(model, rule, y, k)
    raise ValueError(f"unknown method {method!r}")


def node_stats(model: JointModel, rule: StoppingRule, y_prefix, method: str = "state") -> NodeStats:
    y = model.y_alphabet.encode(y_prefix)
    n = len(y)
    if n > model.kappa:
        raise ValueError(f"prefix length {n} exceeds kappa = {model.kappa}")
    w = model.prefix_prob(y)
    if w == 0:
        return ZERO_STATS
    if method == "state":
        F = cdf_path(model, rule, y)
    elif method == "enumerate":
        F = [cdf_enumerate(model, rule, y, k) if 0 < k < model.kappa else (0 if k == 0 else 1) for k in range(n + 1)]
    else:
        raise ValueError(f"unknown method {method!r}")
    return NodeStats(w, w * (1 - F[n]), w * sum(F[1:n], 0))


def iter_complete_stats(model: JointModel, rule: StoppingRule) -> Iterator[tuple]:
    """Yield ``(prefix, NodeStats, F)`` for every node of the complete tree.

    Depth-first, children in alphabet order.  Zero-probability prefixes are
    yielded with zero stats and ``F = None`` and are not expanded.
    """
    machine = rule.state_machine()
    kappa = model.kappa
    # stack entries: prefix, w, state distribution, running sum of F over strict prefixes, F
    stack = [((), 1, {machine.initial: 1}, 0, 0)]
    while stack:
        y, w, dist, cum, F = stack.pop()
        n = len(y)
        if w == 0:
            yield y, ZERO_STATS, None
            continue
        yield y, NodeStats(w, w * (1 - F), w * cum), F
        if n >= kappa:
            continue
        children = []
        for j in range(model.n_y):
            py = model.py[j]
            if py == 0:
                children.append((y + (j,), 0, None, 0, None))
                continue
            d = _push(dist, machine, model.cond[j])
            children.append((y + (j,), w * py, d, cum + F, _stop_mass(d, machine, n + 1, kappa)))
        stack.extend(reversed(children))


# -- Monte Carlo --------------------------------------------------------------


@dataclass(frozen=True)
class SimulationResult:
    alarm: float
    delay: float
    alarm_radius: float
    delay_radius: float
    samples: int
    level: float = 0.99

    def covers(self, alarm, delay) -> bool:
        """True when both analytic values lie inside the confidence intervals."""
        return (
            abs(float(alarm) - self.alarm) <= self.alarm_radius
            and abs(float(delay) - self.delay) <= self.delay_radius
        )


_TABLE_LIMIT = 2_000_000


def _prefix_tables(n_sym, depth, value):
    """Per-depth arrays indexed by base-``n_sym`` prefix codes."""
    tables = []
    for n in range(depth + 1):
        size = n_sym ** n
        arr = np.empty(size, dtype=float if value is not None else bool)
        for code, prefix in enumerate(itertools.product(range(n_sym), repeat=n)):
            arr[code] = value(prefix)
        tables.append(arr)
    return tables


def simulate(model: JointModel, rule: StoppingRule, tree, samples: int, seed: int = 0, level: float = 0.99):
    """Monte Carlo estimates of ``P(T < S)`` and ``E(T - S)^+`` for the tree's stopping time.

    ``tree`` is anything with ``is_leaf(prefix)`` over the model's y alphabet
    (a :class:`~trackstop.tree.StoppingTree` or a composition tree).
    Deterministic for a given ``seed``.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    kappa = model.kappa
    rng = np.random.default_rng(seed)
    flat = np.array([float(v) for r in model.pmf for v in r])
    flat = flat / flat.sum()
    cells = rng.choice(flat.size, size=(samples, kappa), p=flat)
    xs, ys = np.divmod(cells, model.n_y)
    u = rng.random(samples)

    if model.n_x ** kappa <= _TABLE_LIMIT and model.n_y ** kappa <= _TABLE_LIMIT:
        q_tables = _prefix_tables(model.n_x, kappa, lambda p: float(stop_cdf(rule, p, kappa)))
        leaf_tables = [
            np.array([tree.is_leaf(p) for p in itertools.product(range(model.n_y), repeat=n)], dtype=bool)
            for n in range(kappa + 1)
        ]
        S = np.full(samples, kappa, dtype=np.int64)
        T = np.full(samples, kappa, dtype=np.int64)
        s_open = np.ones(samples, dtype=bool)
        t_open = ~np.full(samples, leaf_tables[0][0])
        T[~t_open] = 0
        xcode = np.zeros(samples, dtype=np.int64)
        ycode = np.zeros(samples, dtype=np.int64)
        for n in range(1, kappa + 1):
            xcode = xcode * model.n_x + xs[:, n - 1]
            ycode = ycode * model.n_y + ys[:, n - 1]
            hit = s_open & (u < q_tables[n][xcode])
            S[hit] = n
            s_open &= ~hit
            stop = t_open & leaf_tables[n][ycode]
            T[stop] = n
            t_open &= ~stop
    else:
        S = np.empty(samples, dtype=np.int64)
        T = np.empty(samples, dtype=np.int64)
        for r in range(samples):
            xr, yr = tuple(int(v) for v in xs[r]), tuple(int(v) for v in ys[r])
            S[r] = next(n for n in range(1, kappa + 1) if u[r] < float(stop_cdf(rule, xr[:n], kappa)))
            T[r] = next(n for n in range(kappa + 1) if tree.is_leaf(yr[:n]))

    alarm = (T < S).astype(float)
    delay = np.maximum(T - S, 0).astype(float)
    z = NormalDist().inv_cdf(0.5 + level / 2)
    rad = lambda v: z * float(v.std(ddof=1)) / math.sqrt(samples) if samples > 1 else math.inf
    return SimulationResult(float(alarm.mean()), float(delay.mean()), rad(alarm), rad(delay), samples, level)

