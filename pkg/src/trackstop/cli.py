"""Command-line interface: ``trackstop <command> [options]``.

Models are read from ``--model PATH`` (``-`` or omitted: stdin), so a
built-in example can be piped straight into a solver command::

    trackstop example ex6-bsc --p 1/4 --kappa 2 | trackstop solve

Exit status: 0 on success, 1 on invalid input, 2 when a computation is
refused (oracle cap, invariance or monotone preconditions).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

from ._numeric import INF, fmt, parse_number
from .catalog import EXAMPLES, build
from .io import ModelFileError, curve_to_csv, curve_to_json, dump_model, load_model
from .lookahead import lookahead_tree, monotone_check
from .model import Refusal, simulate
from .perm import (
    STRING_FALLBACK_LIMIT,
    comp_breakpoint_sweep,
    is_rule_perm_invariant,
    rule_is_structurally_invariant,
)
from .solver import (
    brute_force_breakpoints,
    breakpoint_sweep,
    evaluate_curve,
    lower_bound,
    optimal_subtree,
)
from .tree import complete_tree


class UsageError(ValueError):
    """Invalid command-line argument value."""


def _number(text):
    try:
        return parse_number(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _probability(text):
    v = _number(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in [0, 1], got {text}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _common(p, *, formats=("csv", "json"), default="csv"):
    p.add_argument("--model", default="-", help="model file (default: stdin)")
    p.add_argument("--mode", choices=("auto", "exact", "float"), default="auto", help="numeric mode")
    p.add_argument("--format", choices=formats, default=default, help="output format")
    p.add_argument("--kappa", type=_positive_int, help="override the model horizon")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trackstop",
        description="Exact tradeoff curves for tracking stopping times.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="all break-points of d(alpha)")
    _common(p, formats=("csv", "json", "dot"))
    p.add_argument("--method", choices=("auto", "string", "composition"), default="auto")

    p = sub.add_parser("curve", help="evaluate d(alpha)")
    _common(p)
    p.add_argument("--alpha", type=_probability, help="single alpha (default: grid)")
    p.add_argument("--points", type=_positive_int, default=11, help="grid size when --alpha is absent")
    p.add_argument("--method", choices=("auto", "string", "composition"), default="auto")

    p = sub.add_parser("bound", help="linear lower bound on d(alpha)")
    _common(p)
    p.add_argument("--alpha", type=_probability, required=True)
    p.add_argument("--steps", type=int, choices=(1, 2), default=2)
    p.add_argument("--method", choices=("auto", "string", "composition"), default="auto")

    p = sub.add_parser("lookahead", help="one-step lookahead tree")
    _common(p, formats=("csv", "json", "dot"), default="dot")
    p.add_argument("--lambda", dest="lam", type=_number, required=True)

    p = sub.add_parser("check", help="permutation-invariance and monotone checks")
    _common(p)
    p.add_argument("--monotone", action="store_true", help="only the monotone condition")
    p.add_argument("--invariance", action="store_true", help="only rule invariance")

    p = sub.add_parser("oracle", help="exhaustive search, compared with solve")
    _common(p)
    p.add_argument("--cap", type=_positive_int, default=10**6, help="maximum number of trees")

    p = sub.add_parser("simulate", help="Monte Carlo check of a tree's operating point")
    _common(p)
    p.add_argument("--lambda", dest="lam", type=_number, help="simulate the optimal tree at this lambda")
    p.add_argument("--samples", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("example", help="emit a built-in model file")
    p.add_argument("name", choices=sorted(EXAMPLES))
    p.add_argument("--p", help="channel parameter")
    p.add_argument("--eps", help="erasure probability of the forward channel (ex7-bec)")
    p.add_argument("--q", help="P(X = 1) (ex12-geometric, ex13-sum2)")
    p.add_argument("--kappa", type=_positive_int)

    p = sub.add_parser("bench", help="time the string and composition sweeps across kappa")
    _common(p)
    p.add_argument("--kappa-max", type=_positive_int, default=8)
    return parser


# -- helpers ------------------------------------------------------------------


def _load(args):
    model, rule, notices = load_model(args.model, args.mode)
    for n in notices:
        print(f"notice: {n}", file=sys.stderr)
    if getattr(args, "kappa", None):
        model = model.with_kappa(args.kappa)
    return model, rule


def _sweep(model, rule, method):
    if method == "auto":
        method = "composition" if rule_is_structurally_invariant(rule) else "string"
    if method == "composition":
        return comp_breakpoint_sweep(model, rule)
    return breakpoint_sweep(model, rule)


def _string_tree(tree):
    return tree.expand() if hasattr(tree, "expand") else tree


def _tree_csv(tree) -> str:
    tree = _string_tree(tree)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("leaf", "depth", "a", "b"))
    for y in tree.leaves():
        st = tree.stats(y)
        w.writerow((tree.label(y) if y else "", len(y), fmt(st.a), fmt(st.b)))
    return buf.getvalue()


def _emit_tree(tree, fmt_name, out):
    if fmt_name == "json":
        out.write(json.dumps(tree.to_dict(), indent=2) + "\n")
    elif fmt_name == "dot":
        out.write(_string_tree(tree).to_dot())
    else:
        out.write(_tree_csv(tree))


# -- commands -----------------------------------------------------------------


def cmd_solve(args, out):
    model, rule = _load(args)
    curve = _sweep(model, rule, args.method)
    if args.format == "json":
        out.write(curve_to_json(curve))
    elif args.format == "dot":
        for e in curve.entries:
            out.write(_string_tree(e.tree).to_dot(name=f"T{e.m}"))
    else:
        out.write(curve_to_csv(curve))


def cmd_curve(args, out):
    model, rule = _load(args)
    curve = _sweep(model, rule, args.method)
    if args.alpha is not None:
        d, mixture = evaluate_curve(curve, args.alpha)
        if args.format == "json":
            doc = {
                "alpha": fmt(args.alpha),
                "delay": fmt(d),
                "mixture": [{"weight": fmt(w), "tree": t.to_dict()} for t, w in mixture],
            }
            out.write(json.dumps(doc, indent=2) + "\n")
        else:
            out.write(fmt(d) + "\n")
        return
    n = args.points
    grid = [parse_number(f"{i}/{n - 1}") for i in range(n)] if n > 1 else [parse_number(0)]
    if not model.exact:
        grid = [float(a) for a in grid]
    rows = [(fmt(a), fmt(evaluate_curve(curve, a)[0])) for a in grid]
    if args.format == "json":
        out.write(json.dumps([{"alpha": a, "delay": d} for a, d in rows], indent=2) + "\n")
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("alpha", "delay"))
        w.writerows(rows)


def cmd_bound(args, out):
    model, rule = _load(args)
    value = lower_bound(model, rule, args.alpha, steps=args.steps, method=args.method)
    if args.format == "json":
        out.write(json.dumps({"alpha": fmt(args.alpha), "steps": args.steps, "bound": fmt(value)}) + "\n")
    else:
        out.write(fmt(value) + "\n")


def cmd_lookahead(args, out):
    model, rule = _load(args)
    if args.lam == INF or args.lam < 0:
        raise UsageError("--lambda must be a finite nonnegative value for the lookahead rule")
    _emit_tree(lookahead_tree(model, rule, args.lam), args.format, out)


def cmd_check(args, out):
    model, rule = _load(args)
    both = not (args.monotone or args.invariance)
    result = {}
    if both or args.invariance:
        rep = is_rule_perm_invariant(model, rule)
        result["rule_permutation_invariant"] = rep.invariant
        result["invariance_witness"] = list(rep.witness) if rep.witness else None
    if both or args.monotone:
        rep = monotone_check(model, rule)
        result["monotone"] = rep.passed
        if rep.witness:
            n, hist, left, right = rep.witness
            result["monotone_witness"] = {"n": n, "history": hist, "left": fmt(left), "right": fmt(right)}
        else:
            result["monotone_witness"] = None
    if args.format == "json":
        out.write(json.dumps(result, indent=2) + "\n")
        return
    for k, v in result.items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, dict):
            v = " ".join(f"{kk}={vv}" for kk, vv in v.items())
        elif isinstance(v, list):
            v = " <-> ".join(v)
        elif v is None:
            v = "-"
        out.write(f"{k}: {v}\n")


def cmd_oracle(args, out):
    model, rule = _load(args)
    oracle = brute_force_breakpoints(model, rule, cap=args.cap)
    curve = breakpoint_sweep(model, rule)
    ov, sv = oracle.vertices(), curve.vertices()
    match = ov == sv
    if args.format == "json":
        doc = {
            "status": "MATCH" if match else "MISMATCH",
            "oracle": [[fmt(a), fmt(d)] for a, d in ov],
            "solve": [[fmt(a), fmt(d)] for a, d in sv],
        }
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        out.write(("MATCH" if match else "MISMATCH") + f" ({len(ov)} oracle vertices, {len(sv)} sweep vertices)\n")
        if not match:
            for a, d in sorted(set(ov) ^ set(sv)):
                side = "oracle" if (a, d) in ov else "solve"
                out.write(f"  only in {side}: alpha={fmt(a)} delay={fmt(d)}\n")
    return 0 if match else 1


def cmd_simulate(args, out):
    model, rule = _load(args)
    tree = complete_tree(model, rule)
    if args.lam is not None:
        tree = optimal_subtree(tree, args.lam)
    res = simulate(model, rule, tree, args.samples, seed=args.seed)
    alarm, delay = tree.operating_point
    doc = {
        "alarm": fmt(alarm),
        "delay": fmt(delay),
        "alarm_estimate": repr(res.alarm),
        "alarm_radius": repr(res.alarm_radius),
        "delay_estimate": repr(res.delay),
        "delay_radius": repr(res.delay_radius),
        "samples": res.samples,
        "seed": args.seed,
        "covered": res.covers(alarm, delay),
    }
    if args.format == "json":
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(doc.keys())
        w.writerow(str(v).lower() if isinstance(v, bool) else v for v in doc.values())


def cmd_example(args, out):
    _, names = EXAMPLES[args.name]
    params = {k: getattr(args, k) for k in ("p", "eps", "q", "kappa") if getattr(args, k) is not None}
    extra = set(params) - set(names)
    if extra:
        raise UsageError(f"{args.name} does not take --{', --'.join(sorted(extra))}")
    model, rule = build(args.name, **params)
    out.write(dump_model(model, rule))


def cmd_bench(args, out):
    model, rule = _load(args)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("kappa", "M", "string_seconds", "composition_seconds"))
    for k in range(1, args.kappa_max + 1):
        m = model.with_kappa(k)
        nodes = sum(m.n_y**n for n in range(k + 1))
        t_str = t_comp = "skipped"
        count = None
        if nodes <= STRING_FALLBACK_LIMIT:
            t0 = time.perf_counter()
            count = breakpoint_sweep(m, rule).M
            t_str = f"{time.perf_counter() - t0:.4f}"
        if is_rule_perm_invariant(m, rule):
            t0 = time.perf_counter()
            count = comp_breakpoint_sweep(m, rule).M
            t_comp = f"{time.perf_counter() - t0:.4f}"
        w.writerow((k, "" if count is None else count, t_str, t_comp))


COMMANDS = {
    "solve": cmd_solve,
    "curve": cmd_curve,
    "bound": cmd_bound,
    "lookahead": cmd_lookahead,
    "check": cmd_check,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
    "example": cmd_example,
    "bench": cmd_bench,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        status = COMMANDS[args.command](args, out)
    except Refusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except (ModelFileError, UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return status or 0


def main_entry():  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
