"""Exact solver for the tracking stopping-time problem.

Given an i.i.d. pair process ``(X_i, Y_i)`` on finite alphabets and a
stopping time ``S <= kappa`` on the X side, compute every break-point of the
optimal tradeoff ``d(alpha)`` between reaction delay ``E(T - S)^+`` and
false-alarm probability ``P(T < S)`` over stopping times ``T`` on the Y
side, with the optimal stopping-time trees.
"""

from .catalog import EXAMPLES, build as build_example
from .io import ModelFileError, dump_model, load_model, parse_model, parse_model_file
from .lookahead import MonotoneReport, lookahead_equivalence, lookahead_tree, monotone_check
from .model import (
    Alphabet,
    ConditioningError,
    JointModel,
    NodeStats,
    Refusal,
    SimulationResult,
    node_stats,
    simulate,
    stop_cdf_given_y,
    validate_model,
)
from .perm import (
    Composition,
    CompositionTree,
    comp_breakpoint_sweep,
    comp_node_stats,
    is_rule_perm_invariant,
    is_tree_perm_invariant,
)
from .rules import CompositionTable, FirstHit, FixedTime, PrefixTable, StoppingRule, SumThreshold
from .solver import (
    BreakpointCurve,
    OracleRefusal,
    breakpoint_sweep,
    brute_force_breakpoints,
    evaluate_curve,
    g_index,
    lower_bound,
    optimal_subtree,
)
from .tree import StoppingTree, complete_tree, cost, induced_stop, prune_at

__all__ = [
    "Alphabet",
    "BreakpointCurve",
    "Composition",
    "CompositionTable",
    "CompositionTree",
    "ConditioningError",
    "EXAMPLES",
    "FirstHit",
    "FixedTime",
    "JointModel",
    "ModelFileError",
    "MonotoneReport",
    "NodeStats",
    "OracleRefusal",
    "PrefixTable",
    "Refusal",
    "SimulationResult",
    "StoppingRule",
    "StoppingTree",
    "SumThreshold",
    "TrackingStopper",
    "breakpoint_sweep",
    "brute_force_breakpoints",
    "build_example",
    "comp_breakpoint_sweep",
    "comp_node_stats",
    "complete_tree",
    "cost",
    "dump_model",
    "evaluate_curve",
    "g_index",
    "induced_stop",
    "is_rule_perm_invariant",
    "is_tree_perm_invariant",
    "load_model",
    "lookahead_equivalence",
    "lookahead_tree",
    "lower_bound",
    "monotone_check",
    "node_stats",
    "optimal_subtree",
    "parse_model",
    "parse_model_file",
    "prune_at",
    "simulate",
    "stop_cdf_given_y",
    "validate_model",
]


def __getattr__(name):
    # scikit-learn is only imported when the estimator is used
    if name == "TrackingStopper":
        from .estimator import TrackingStopper

        return TrackingStopper
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
