"""Hierarchical timed nets: structure, delay distributions and the event engine."""

from .distributions import (
    Constant,
    DelayDistribution,
    Empirical,
    Exponential,
    Never,
    NormalTruncated,
    sample,
)
from .engine import (
    DEFAULT_MAX_EVENTS,
    BudgetExceeded,
    Firing,
    NotEnabled,
    SimulationState,
    TraceEvent,
    enabled_bindings,
    fire,
    run,
    trace_to_jsonl,
)
from .net import (
    Arc,
    Marking,
    MarkingError,
    NetDefinition,
    NetInstance,
    Place,
    StructuralError,
    Transition,
    arc_in,
    arc_out,
    arc_read,
    build_net,
)

__all__ = [
    "Arc",
    "BudgetExceeded",
    "Constant",
    "DEFAULT_MAX_EVENTS",
    "DelayDistribution",
    "Empirical",
    "Exponential",
    "Firing",
    "Marking",
    "MarkingError",
    "NetDefinition",
    "NetInstance",
    "Never",
    "NormalTruncated",
    "NotEnabled",
    "Place",
    "SimulationState",
    "StructuralError",
    "TraceEvent",
    "Transition",
    "arc_in",
    "arc_out",
    "arc_read",
    "build_net",
    "enabled_bindings",
    "fire",
    "run",
    "sample",
    "trace_to_jsonl",
]
