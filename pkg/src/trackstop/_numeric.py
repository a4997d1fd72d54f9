"""Numeric helpers shared by the exact (Fraction) and float code paths.

Every algorithm in the package is written against plain arithmetic operators,
so the same code runs on :class:`fractions.Fraction` (exact, the default) and
on ``float``.  Ties only need special care in float mode; exact values are
compared with ``==``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Union

Number = Union[int, Fraction, float]

INF = math.inf

#: relative tolerance used for every float-mode comparison
REL_TOL = 1e-12


def is_exact(x) -> bool:
    return isinstance(x, Rational)


def is_inf(x) -> bool:
    return isinstance(x, float) and math.isinf(x)


def close(a, b) -> bool:
    """Equality, with the float tolerance applied when either side is a float."""
    if is_exact(a) and is_exact(b):
        return a == b
    if is_inf(a) or is_inf(b):
        return a == b
    return abs(a - b) <= REL_TOL * max(abs(a), abs(b))


def leq(a, b) -> bool:
    return a <= b or close(a, b)


def sub(x, y):
    """``x - y``, snapped to zero when the difference is float round-off."""
    d = x - y
    if isinstance(d, float) and abs(d) <= REL_TOL * max(abs(x), abs(y)):
        return 0.0
    return d


def snap(x):
    """Float values within round-off of zero become exactly zero."""
    if isinstance(x, float) and abs(x) <= 1e-15:
        return 0.0
    return x


def ratio(num, den):
    """Extended nonnegative quotient: ``0/0 -> 0`` and ``positive/0 -> inf``."""
    if den == 0:
        return 0 if num == 0 else INF
    return num / den


def parse_number(text) -> Number:
    """Parse ``"3/4"``, ``"0.25"``, ``"inf"``, ints and floats.

    Strings holding a decimal point are read as exact decimals; only JSON /
    Python float literals produce floats.
    """
    if isinstance(text, bool):
        raise ValueError(f"not a number: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if isinstance(text, float):
        return text
    s = str(text).strip()
    if s.lower() in ("inf", "+inf", "infinity"):
        return INF
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def fmt(x) -> str:
    """Render a value for CSV/JSON: ``p/q`` when exact, 17 significant digits otherwise."""
    if is_inf(x):
        return "inf" if x > 0 else "-inf"
    if is_exact(x):
        x = Fraction(x)
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return format(float(x), ".17g")


def to_float(x):
    return float(x)
