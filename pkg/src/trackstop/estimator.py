"""Estimator-style facade over the solver.

``fit`` solves the tradeoff for a model and rule and keeps the optimal
(possibly randomized) stopping time for the false-alarm budget ``alpha``;
``predict`` applies it to observation sequences.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_random_state

from ._numeric import parse_number
from .io import load_model, parse_model
from .model import JointModel
from .solver import breakpoint_sweep, evaluate_curve
from .perm import comp_breakpoint_sweep, rule_is_structurally_invariant


class TrackingStopper(BaseEstimator):
    """Optimal stopping time on the Y side for a false-alarm budget.

    Parameters
    ----------
    alpha : float or str, default=0
        False-alarm budget ``P(T < S) <= alpha``; strings such as ``"1/8"``
        are read exactly.
    method : {"auto", "string", "composition"}, default="auto"
        Sweep implementation; ``"auto"`` uses the composition sweep for
        rules that are permutation invariant by construction.
    mode : {"auto", "exact", "float"}, default="auto"
        Numeric mode when fitting from a model file or dict.
    random_state : int, Generator or None, default=None
        Randomizes between the two trees of a mixture in :meth:`predict`.

    Attributes
    ----------
    curve_ : BreakpointCurve
    delay_ : optimal delay ``d(alpha)``
    mixture_ : list of ``(tree, weight)``
    model_, rule_ : fitted model and stopping rule
    """

    def __init__(self, alpha=0, method="auto", mode="auto", random_state=None):
        self.alpha = alpha
        self.method = method
        self.mode = mode
        self.random_state = random_state

    def _validate(self):
        alpha = parse_number(self.alpha)
        if not 0 <= alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if self.method not in ("auto", "string", "composition"):
            raise ValueError(f"unknown method {self.method!r}")
        return alpha

    def fit(self, model, rule=None):
        """Solve for ``model`` (a JointModel with ``rule``, a model-file dict, or a path)."""
        alpha = self._validate()
        if isinstance(model, JointModel):
            if rule is None:
                raise ValueError("a stopping rule is required with a JointModel")
        elif isinstance(model, dict):
            model, rule, _ = parse_model(model, self.mode)
        else:
            model, rule, _ = load_model(model, self.mode)
        method = self.method
        if method == "auto":
            method = "composition" if rule_is_structurally_invariant(rule) else "string"
        curve = comp_breakpoint_sweep(model, rule) if method == "composition" else breakpoint_sweep(model, rule)
        if not model.exact:
            alpha = float(alpha)
        self.model_ = model
        self.rule_ = rule
        self.curve_ = curve
        self.delay_, self.mixture_ = evaluate_curve(curve, alpha)
        self.lambdas_ = curve.lambdas
        self.vertices_ = curve.vertices()
        return self

    def predict(self, Y):
        """Stopping index ``T`` for each row of ``Y`` (shape ``(n_samples, kappa)``).

        Entries are y-symbol labels or integer indices into the y alphabet.
        """
        check_is_fitted(self, "curve_")
        Y = check_array(Y, dtype=None, ensure_min_samples=1)
        kappa = self.model_.kappa
        if Y.shape[1] != kappa:
            raise ValueError(f"Y must have {kappa} columns (one per time step), got {Y.shape[1]}")
        alph = self.model_.y_alphabet
        if Y.dtype.kind in "iu":
            rows = [tuple(int(v) for v in r) for r in Y]
            if any(not 0 <= v < len(alph) for r in rows for v in r):
                raise ValueError("integer entries of Y must index the y alphabet")
        else:
            rows = [tuple(alph.index(str(v)) for v in r) for r in Y]
        trees = [t for t, _ in self.mixture_]
        weights = np.array([float(w) for _, w in self.mixture_])
        rng = check_random_state(self.random_state)
        pick = rng.choice(len(trees), size=len(rows), p=weights / weights.sum())
        return np.array([_stop_index(trees[k], r) for k, r in zip(pick, rows)], dtype=np.int64)


def _stop_index(tree, y) -> int:
    for n in range(len(y) + 1):
        if tree.is_leaf(y[:n]):
            return n
    raise ValueError("sequence does not reach a leaf")  # pragma: no cover
