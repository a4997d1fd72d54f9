"""Model files and curve exports.

Model file (JSON)::

    {
      "x_alphabet": ["0", "1"],
      "y_alphabet": ["0", "1"],
      "pmf": [["3/8", "1/8"], ["1/8", "3/8"]],      # row = x, column = y
      "kappa": 2,
      "rule": {"type": "table", "entries": [{"prefix": ["1"], "q": "1"}]}
    }

Rule variants::

    {"type": "first_hit", "targets": ["1"]}
    {"type": "sum_threshold", "weights": {"1": 1}, "threshold": 2}
    {"type": "table", "entries": [{"prefix": ["0", "1"], "q": "1/2"}, ...]}
    {"type": "table_by_composition", "entries": [{"counts": {"1": 2}, "q": "1"}, ...]}
    {"type": "fixed", "time": 3}

Probabilities given as strings (``"3/4"``, ``"0.25"``) are exact.  JSON
number literals with a fraction part or exponent are floats and put the
model in float mode unless exact mode is requested.
"""

from __future__ import annotations

import csv
import io
import json
import sys

from ._numeric import fmt, parse_number
from .model import JointModel, validate_model, validate_rule
from .rules import (
    RULE_KINDS,
    CompositionTable,
    FirstHit,
    FixedTime,
    PrefixTable,
    StoppingRule,
    SumThreshold,
)


class ModelFileError(ValueError):
    """Schema or content problem in a model file; the message names the field."""


def _field(data, key, where="model"):
    if not isinstance(data, dict):
        raise ModelFileError(f"{where}: expected a JSON object")
    if key not in data:
        raise ModelFileError(f"{key}: missing required field")
    return data[key]


def _number(value, where, mode):
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ModelFileError(f"{where}: expected a number or a rational string, got {value!r}")
    if isinstance(value, float) and mode == "exact":
        # the decimal text of the literal, not its binary expansion
        value = repr(value)
    try:
        v = parse_number(value)
    except ValueError as exc:
        raise ModelFileError(f"{where}: {exc}") from None
    return float(v) if mode == "float" else v


def _alphabet(data, key):
    symbols = _field(data, key)
    if not isinstance(symbols, list) or not all(isinstance(s, (str, int)) for s in symbols):
        raise ModelFileError(f"{key}: expected a list of symbol strings")
    symbols = [str(s) for s in symbols]
    if not symbols:
        raise ModelFileError(f"{key}: alphabet is empty")
    if len(set(symbols)) != len(symbols):
        raise ModelFileError(f"{key}: symbols must be distinct")
    return symbols


def _has_float(obj) -> bool:
    if isinstance(obj, float):
        return True
    if isinstance(obj, dict):
        return any(_has_float(v) for v in obj.values())
    if isinstance(obj, list):
        return any(_has_float(v) for v in obj)
    return False


def _symbols(alphabet, seq, where):
    if not isinstance(seq, (list, str)):
        raise ModelFileError(f"{where}: expected a list of symbols")
    try:
        if isinstance(seq, str):
            return alphabet.encode(seq)
        return tuple(alphabet.index(str(s)) for s in seq)
    except ValueError as exc:
        raise ModelFileError(f"{where}: {exc}") from None


def parse_rule(data, model: JointModel, mode: str = "exact") -> StoppingRule:
    if not isinstance(data, dict):
        raise ModelFileError("rule: expected a JSON object")
    kind = _field(data, "type", "rule")
    xs = model.x_alphabet
    if kind == "first_hit":
        targets = _field(data, "targets", "rule")
        return FirstHit(_symbols(xs, targets, "rule.targets"))
    if kind == "sum_threshold":
        weights = _field(data, "weights", "rule")
        threshold = _field(data, "threshold", "rule")
        if isinstance(weights, dict):
            for s in weights:
                if str(s) not in xs.symbols:
                    raise ModelFileError(f"rule.weights: unknown symbol {s!r}")
            weights = [weights.get(s, 0) for s in xs]
        if not isinstance(weights, list) or len(weights) != len(xs):
            raise ModelFileError(f"rule.weights: expected one integer per x symbol ({len(xs)})")
        if not all(isinstance(w, int) and not isinstance(w, bool) for w in weights):
            raise ModelFileError("rule.weights: weights must be integers")
        if not isinstance(threshold, int) or isinstance(threshold, bool):
            raise ModelFileError("rule.threshold: expected an integer")
        return SumThreshold(tuple(weights), threshold)
    if kind == "fixed":
        time = _field(data, "time", "rule")
        if not isinstance(time, int) or isinstance(time, bool) or time < 1:
            raise ModelFileError("rule.time: expected a positive integer")
        return FixedTime(time)
    if kind in ("table", "table_by_composition"):
        entries = _field(data, "entries", "rule")
        if not isinstance(entries, list):
            raise ModelFileError("rule.entries: expected a list")
        table = {}
        for i, entry in enumerate(entries):
            where = f"rule.entries[{i}]"
            q = _number(_field(entry, "q", where), f"{where}.q", mode)
            if not 0 <= q <= 1:
                raise ModelFileError(f"{where}.q: stop probability outside [0, 1]")
            if kind == "table":
                key = _symbols(xs, _field(entry, "prefix", where), f"{where}.prefix")
                if not key:
                    raise ModelFileError(f"{where}.prefix: prefix must be nonempty")
            else:
                counts = _field(entry, "counts", where)
                if not isinstance(counts, dict):
                    raise ModelFileError(f"{where}.counts: expected an object mapping symbols to counts")
                for s, c in counts.items():
                    if str(s) not in xs.symbols:
                        raise ModelFileError(f"{where}.counts: unknown symbol {s!r}")
                    if not isinstance(c, int) or isinstance(c, bool) or c < 0:
                        raise ModelFileError(f"{where}.counts: counts must be nonnegative integers")
                key = tuple(int(counts.get(s, 0)) for s in xs)
            if key in table:
                raise ModelFileError(f"{where}: duplicate entry")
            table[key] = q
        if kind == "table":
            return PrefixTable(table)
        return CompositionTable(table, len(xs))
    raise ModelFileError(f"rule.type: unknown rule type {kind!r}; supported kinds: {', '.join(RULE_KINDS)}")


def parse_model(data, mode: str = "auto") -> tuple:
    """``(model, rule, notices)`` from decoded JSON.

    ``mode`` is ``"exact"``, ``"float"`` or ``"auto"`` (float when the file
    holds float literals).  ``notices`` lists human-readable remarks.
    """
    if mode not in ("auto", "exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    notices = []
    if not isinstance(data, dict):
        raise ModelFileError("model: expected a JSON object")
    if mode == "auto":
        mode = "float" if _has_float(data) else "exact"
        if mode == "float":
            notices.append("model file contains float literals; running in float mode")
    x_alph = _alphabet(data, "x_alphabet")
    y_alph = _alphabet(data, "y_alphabet")
    pmf = _field(data, "pmf")
    if not isinstance(pmf, list) or len(pmf) != len(x_alph):
        raise ModelFileError(f"pmf: expected {len(x_alph)} rows (one per x symbol)")
    rows = []
    for i, row in enumerate(pmf):
        if not isinstance(row, list) or len(row) != len(y_alph):
            raise ModelFileError(f"pmf: row {i} must have {len(y_alph)} entries (one per y symbol)")
        rows.append([_number(v, f"pmf[{i}][{j}]", mode) for j, v in enumerate(row)])
    kappa = _field(data, "kappa")
    if not isinstance(kappa, int) or isinstance(kappa, bool):
        raise ModelFileError("kappa: expected an integer")
    model = JointModel(x_alph, y_alph, rows, kappa)
    problems = validate_model(model)
    if problems:
        raise ModelFileError("; ".join(f"pmf: {p}" if "mass" in p else p for p in problems))
    rule = parse_rule(_field(data, "rule"), model, mode)
    problems = validate_rule(model, rule)
    if problems:
        raise ModelFileError("rule: " + "; ".join(problems))
    return model, rule, notices


def load_model(source, mode: str = "auto") -> tuple:
    """Parse a model file path, ``"-"`` for stdin, or an open text stream."""
    if hasattr(source, "read"):
        text, name = source.read(), getattr(source, "name", "<stream>")
    elif str(source) == "-":
        text, name = sys.stdin.read(), "<stdin>"
    else:
        with open(source, encoding="utf-8") as fh:
            text, name = fh.read(), str(source)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{name}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_model(data, mode)


def parse_model_file(path, mode: str = "auto") -> tuple:
    """``(model, rule)`` from a model file; notices go to stderr."""
    model, rule, notices = load_model(path, mode)
    for n in notices:
        print(f"notice: {n}", file=sys.stderr)
    return model, rule


def rule_to_dict(rule: StoppingRule, model: JointModel) -> dict:
    xs = model.x_alphabet
    if isinstance(rule, FirstHit):
        return {"type": "first_hit", "targets": [xs[i] for i in sorted(rule.targets)]}
    if isinstance(rule, SumThreshold):
        return {"type": "sum_threshold", "weights": dict(zip(xs, rule.weights)), "threshold": rule.threshold}
    if isinstance(rule, FixedTime):
        return {"type": "fixed", "time": rule.time}
    if isinstance(rule, PrefixTable):
        entries = [
            {"prefix": [xs[i] for i in key], "q": fmt(q)}
            for key, q in sorted(rule.table.items(), key=lambda kv: (len(kv[0]), kv[0]))
        ]
        return {"type": "table", "entries": entries}
    if isinstance(rule, CompositionTable):
        entries = [
            {"counts": {xs[i]: c for i, c in enumerate(key) if c}, "q": fmt(q)}
            for key, q in sorted(rule.table.items(), key=lambda kv: (sum(kv[0]), kv[0]))
        ]
        return {"type": "table_by_composition", "entries": entries}
    raise TypeError(f"cannot serialize rule of kind {rule.kind!r}")


def model_to_dict(model: JointModel, rule: StoppingRule) -> dict:
    return {
        "x_alphabet": list(model.x_alphabet),
        "y_alphabet": list(model.y_alphabet),
        "pmf": [[fmt(v) for v in row] for row in model.pmf],
        "kappa": model.kappa,
        "rule": rule_to_dict(rule, model),
    }


def dump_model(model: JointModel, rule: StoppingRule) -> str:
    return json.dumps(model_to_dict(model, rule), indent=2) + "\n"


# -- curves -------------------------------------------------------------------

CURVE_COLUMNS = ("m", "lambda", "alpha", "delay")


def curve_rows(curve) -> list:
    """One row per entry ``m = 0..M``: ``(m, lambda, alpha, delay)`` as strings."""
    return [(str(e.m), fmt(e.lam), fmt(e.alpha), fmt(e.delay)) for e in curve.entries]


def curve_to_csv(curve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_COLUMNS)
    writer.writerows(curve_rows(curve))
    return buf.getvalue()


def curve_to_dict(curve, trees: bool = True) -> dict:
    def entry(e):
        out = {"m": e.m, "lambda": fmt(e.lam), "alpha": fmt(e.alpha), "delay": fmt(e.delay)}
        if trees:
            out["tree"] = e.tree.to_dict()
            out["trivial"] = e.tree.is_trivial
        return out

    return {
        "M": curve.M,
        "entries": [entry(e) for e in curve.entries],
        "terminal": entry(curve.terminal) if curve.terminal is not None else None,
        "vertices": [{"alpha": fmt(a), "delay": fmt(d)} for a, d in curve.vertices()],
    }


def curve_to_json(curve, trees: bool = True) -> str:
    return json.dumps(curve_to_dict(curve, trees), indent=2) + "\n"


def read_curve_csv(text: str) -> list:
    """Parse :func:`curve_to_csv` output back into ``(m, lambda, alpha, delay)`` tuples."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CURVE_COLUMNS:
        raise ValueError(f"unexpected header {header}")
    return [(int(m), parse_number(l), parse_number(a), parse_number(d)) for m, l, a, d in reader]
