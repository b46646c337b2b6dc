from .framework import (
    COMPOSITION,
    INIT_SOLVERS,
    RULES,
    TRACE_HEADER,
    InitialSolverFailure,
    RefineConfig,
    Refiner,
    Schedule,
    Trace,
    TraceEntry,
    initial_solution,
    iterative_refine,
    parse_rules,
    read_trace,
)
from .rules import (
    ModificationSet,
    repair_local_goals,
    select_bottleneck,
    select_focus_goals,
    select_random,
    select_single,
    select_using_mdd,
)
