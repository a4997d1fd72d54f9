"""Stopping-time trees.

A bounded non-randomized stopping time ``T`` on the Y side is a full
``|Y|``-ary tree: a node ``y^n`` is a leaf when ``T = n`` on that history.
Trees share one :class:`NodeTable` (the statistics of the complete tree of
depth ``kappa``) and differ only in their set of internal nodes, so pruning
never recomputes node statistics.
"""

from __future__ import annotations

from typing import Iterable, Iterator

from ._numeric import INF, fmt
from .model import JointModel, NodeStats, ZERO_STATS, iter_complete_stats
from .rules import StoppingRule


class NodeTable:
    """Statistics ``(w, a, b)`` and ``F = P(S <= n | Y^n)`` for every node of the complete tree."""

    def __init__(self, model: JointModel, rule: StoppingRule):
        self.model = model
        self.rule = rule
        self.kappa = model.kappa
        self.n_y = model.n_y
        self.y_alphabet = model.y_alphabet
        self.stats = {}
        self.cdf = {}
        for y, st, F in iter_complete_stats(model, rule):
            self.stats[y] = st
            self.cdf[y] = F

    def __getitem__(self, y) -> NodeStats:
        return self.stats.get(y, ZERO_STATS)

    def expandable(self, y) -> bool:
        """Whether ``y`` may be an internal node (depth below kappa, positive probability)."""
        return len(y) < self.kappa and self.stats[y].w != 0

    def __len__(self):
        return len(self.stats)


class StoppingTree:
    """Immutable stopping-time tree over a :class:`NodeTable`.

    Parameters
    ----------
    table : NodeTable
        Statistics of the complete tree this tree is a subtree of.
    internal : iterable of tuple
        Prefix-closed set of internal nodes (tuples of y indices).
    """

    def __init__(self, table: NodeTable, internal: Iterable[tuple], _agg: dict | None = None):
        self.table = table
        self.internal = frozenset(internal)
        self._agg = _agg

    # -- structure -----------------------------------------------------------

    @property
    def kappa(self) -> int:
        return self.table.kappa

    @property
    def y_alphabet(self):
        return self.table.y_alphabet

    @property
    def is_trivial(self) -> bool:
        return not self.internal

    def __contains__(self, y) -> bool:
        y = tuple(y)
        return y == () or (y[:-1] in self.internal)

    def is_leaf(self, y) -> bool:
        y = tuple(y)
        return y in self and y not in self.internal

    def children(self, y) -> list:
        return [y + (j,) for j in range(self.table.n_y)] if y in self.internal else []

    def nodes(self) -> Iterator[tuple]:
        """Preorder traversal, children in alphabet order."""
        stack = [()]
        while stack:
            y = stack.pop()
            yield y
            stack.extend(reversed(self.children(y)))

    def leaves(self) -> Iterator[tuple]:
        return (y for y in self.nodes() if y not in self.internal)

    def __len__(self):
        return 1 + self.table.n_y * len(self.internal)

    def __eq__(self, other):
        return isinstance(other, StoppingTree) and self.kappa == other.kappa and self.internal == other.internal

    def __hash__(self):
        return hash((self.kappa, self.internal))

    def expand(self, table=None) -> "StoppingTree":
        """Already string-level; present so sweep results share one interface."""
        return self

    def __le__(self, other):
        return self.internal <= other.internal

    def __lt__(self, other):
        return self.internal < other.internal

    # -- statistics ----------------------------------------------------------

    def stats(self, y) -> NodeStats:
        return self.table[tuple(y)]

    @property
    def agg(self) -> dict:
        if self._agg is None:
            agg = {}
            for y in sorted(self.internal, key=len, reverse=True):
                a = b = 0
                for c in self.children(y):
                    ca, cb = agg[c] if c in self.internal else (self.table[c].a, self.table[c].b)
                    a, b = a + ca, b + cb
                agg[y] = (a, b)
            self._agg = agg
        return self._agg

    def subtree_stats(self, y) -> tuple:
        """``(a_sub, b_sub)``: leaf sums of the subtree rooted at ``y``."""
        y = tuple(y)
        if y in self.internal:
            return self.agg[y]
        if y not in self:
            raise KeyError(f"{y!r} is not a node of this tree")
        st = self.table[y]
        return st.a, st.b

    @property
    def alarm(self):
        """``P(T < S)``."""
        return self.subtree_stats(())[0]

    @property
    def delay(self):
        """``E(T - S)^+``."""
        return self.subtree_stats(())[1]

    @property
    def operating_point(self) -> tuple:
        return self.subtree_stats(())

    # -- rendering -----------------------------------------------------------

    def label(self, y) -> str:
        return self.y_alphabet.decode(y) if y else "root"

    def to_dot(self, name: str = "T") -> str:
        """Graphviz source; leaves are boxes, labels read ``y-string | a | b``."""
        lines = [f"digraph {name} {{", "  node [shape=ellipse];"]
        for y in self.nodes():
            st = self.table[y]
            shape = "" if y in self.internal else ", shape=box"
            lines.append(f'  "{self.label(y)}" [label="{self.label(y)} | {fmt(st.a)} | {fmt(st.b)}"{shape}];')
        for y in self.nodes():
            for c in self.children(y):
                sym = self.y_alphabet[c[-1]]
                lines.append(f'  "{self.label(y)}" -> "{self.label(c)}" [label="{sym}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def dump(self) -> str:
        """Indented text listing, one node per line."""
        out = []
        for y in self.nodes():
            st = self.table[y]
            pad = "  " * len(y)
            if y in self.internal:
                a_sub, b_sub = self.agg[y]
                out.append(
                    f"{pad}{self.label(y)} [internal] a={fmt(st.a)} b={fmt(st.b)} "
                    f"a_sub={fmt(a_sub)} b_sub={fmt(b_sub)}"
                )
            else:
                out.append(f"{pad}{self.label(y)} [leaf] a={fmt(st.a)} b={fmt(st.b)}")
        return "\n".join(out) + "\n"

    def to_dict(self) -> dict:
        return {
            "internal": sorted(self.label(y) if y else "" for y in self.internal),
            "leaves": [self.label(y) if y else "" for y in self.leaves()],
            "alarm": fmt(self.alarm),
            "delay": fmt(self.delay),
        }

    def __repr__(self):
        return f"StoppingTree(kappa={self.kappa}, internal={len(self.internal)}, alarm={self.alarm}, delay={self.delay})"


def complete_tree(model: JointModel, rule: StoppingRule, table: NodeTable | None = None) -> StoppingTree:
    """The complete tree of depth ``kappa``; zero-probability branches stay leaves."""
    table = table or NodeTable(model, rule)
    return StoppingTree(table, (y for y in table.stats if table.expandable(y)))


def trivial_tree(table: NodeTable) -> StoppingTree:
    return StoppingTree(table, ())


def induced_stop(tree: StoppingTree, y_sequence) -> int:
    """Depth of the leaf reached along ``y_sequence`` (the stopping index ``T``)."""
    y = tree.y_alphabet.encode(y_sequence)
    for n in range(len(y) + 1):
        if tuple(y[:n]) not in tree.internal:
            return n
    raise ValueError(f"sequence of length {len(y)} does not reach a leaf (tree has depth up to {tree.kappa})")


def _normalize(tree: StoppingTree, nodes) -> list:
    enc = [tree.y_alphabet.encode(y) if not isinstance(y, tuple) else y for y in nodes]
    for y in enc:
        if y not in tree.internal:
            what = "a leaf" if y in tree else "not in the tree"
            raise ValueError(f"cannot prune {tree.label(y)!r}: node is {what}")
    chosen = set(enc)
    # keep only the shallowest of nested requests
    return sorted(y for y in chosen if not any(y[:k] in chosen for k in range(len(y))))


def prune_at(tree: StoppingTree, nodes) -> StoppingTree:
    """Turn every given internal node into a leaf, dropping its descendants.

    Aggregates are updated along ancestor paths only.
    """
    roots = _normalize(tree, nodes)
    if not roots:
        return tree
    rootset = set(roots)

    def removed(y):
        return any(y[:k] in rootset for k in range(len(y) + 1))

    internal = {y for y in tree.internal if not removed(y)}
    agg = {y: tree.agg[y] for y in internal}
    for r in roots:
        old_a, old_b = tree.agg[r]
        st = tree.table[r]
        da, db = st.a - old_a, st.b - old_b
        for k in range(len(r)):
            anc = r[:k]
            a, b = agg[anc]
            agg[anc] = (a + da, b + db)
    return StoppingTree(tree.table, internal, agg)


def cost(tree: StoppingTree, lam):
    """Lagrangian ``J = E(T - S)^+ + lam * P(T < S)``; ``lam`` may be ``inf``."""
    a, b = tree.operating_point
    if lam == INF:
        return b if a == 0 else INF
    return b + lam * a


def tree_from_leaves(table: NodeTable, leaves) -> StoppingTree:
    """Build a tree from its leaf set (the internal nodes are the strict prefixes)."""
    enc = [table.y_alphabet.encode(y) if not isinstance(y, tuple) else y for y in leaves]
    internal = {y[:k] for y in enc for k in range(len(y))}
    tree = StoppingTree(table, internal)
    if sorted(tree.leaves()) != sorted(set(enc)):
        raise ValueError("leaf set does not describe a full tree")
    return tree
