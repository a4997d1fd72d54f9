"""Built-in models.

Every builder returns ``(model, rule)`` in exact arithmetic.  Rules that are
unbounded in their textbook form are truncated at the horizon (``S ^ kappa``).

``ex6-bsc``
    ``X ~ Bernoulli(1/2)``, ``Y`` the output of a binary symmetric channel
    with crossover ``p``; ``S = 1`` if ``X_1 = 1`` and ``S = kappa`` otherwise.
``ex7-bec``
    ``X`` is a non-erasure indicator, ``X ~ Bernoulli(1 - eps)``; ``Y`` is
    ``X`` sent through an erasure channel with erasure probability ``p``
    (``Y`` in ``{0, 1, e}``); ``S`` is the first ``i`` with ``X_i = 1``.
``ex12-geometric``
    ``X ~ Bernoulli(q)`` through a binary symmetric channel with crossover
    ``p``; ``S`` is the first ``i`` with ``X_i = 1``.
``ex13-sum2``
    Same channel; ``S`` is the first ``i`` with ``X_1 + ... + X_i = 2``.

With truncation, the monotone condition at ``n = kappa - 1`` needs
``P(X = 1) >= P(X = 0 | Y = y)`` for both geometric-type examples, which the
default parameters satisfy.
"""

from __future__ import annotations

from fractions import Fraction

from ._numeric import parse_number
from .model import JointModel
from .rules import FirstHit, PrefixTable, SumThreshold


def _prob(name, value, open_interval=True):
    v = parse_number(value)
    lo_ok = v > 0 if open_interval else v >= 0
    hi_ok = v < 1 if open_interval else v <= 1
    if not (lo_ok and hi_ok):
        raise ValueError(f"{name} must lie in {'(0, 1)' if open_interval else '[0, 1]'}, got {value}")
    return v


def _bsc(prior, p):
    return [[(1 - prior) * (1 - p), (1 - prior) * p], [prior * p, prior * (1 - p)]]


def ex6_bsc(p="1/4", kappa=2):
    p = _prob("p", p)
    model = JointModel(("0", "1"), ("0", "1"), _bsc(Fraction(1, 2), p), kappa)
    return model, PrefixTable({(1,): 1})


def ex7_bec(eps="1/2", p="1/5", kappa=3):
    eps, p = _prob("eps", eps), _prob("p", p)
    pmf = [
        [eps * (1 - p), 0, eps * p],
        [0, (1 - eps) * (1 - p), (1 - eps) * p],
    ]
    model = JointModel(("0", "1"), ("0", "1", "e"), pmf, kappa)
    return model, FirstHit({1})


def ex12_geometric(q="3/4", p="1/4", kappa=4):
    q, p = _prob("q", q), _prob("p", p)
    return JointModel(("0", "1"), ("0", "1"), _bsc(q, p), kappa), FirstHit({1})


def ex13_sum2(q="9/10", p="1/4", kappa=4):
    q, p = _prob("q", q), _prob("p", p)
    return JointModel(("0", "1"), ("0", "1"), _bsc(q, p), kappa), SumThreshold((0, 1), 2)


#: name -> (builder, parameter names)
EXAMPLES = {
    "ex6-bsc": (ex6_bsc, ("p", "kappa")),
    "ex7-bec": (ex7_bec, ("eps", "p", "kappa")),
    "ex12-geometric": (ex12_geometric, ("q", "p", "kappa")),
    "ex13-sum2": (ex13_sum2, ("q", "p", "kappa")),
}


def build(name: str, **params):
    """Instantiate a built-in model by name; unset parameters keep their defaults."""
    try:
        builder, names = EXAMPLES[name]
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}") from None
    unknown = set(params) - set(names)
    if unknown:
        raise ValueError(f"{name} does not take {sorted(unknown)}; parameters are {list(names)}")
    return builder(**{k: v for k, v in params.items() if v is not None})
