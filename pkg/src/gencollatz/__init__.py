"""Generalized Collatz maps f(n, b, m): trajectories, cycles, stopping times and scans."""

__version__ = "0.1.0"

from .cycles import (
    CycleRecord,
    OutcomeTag,
    PropositionReport,
    StartClass,
    StartKind,
    TrajectoryOutcome,
    canonical_cycle,
    classify_start,
    detect_outcome,
    principal_cycle,
    principal_cycle_pattern,
    proposition_check,
    stopping_time,
)
from .errors import (
    BudgetExceeded,
    CollatzError,
    DivisibleInput,
    EmptyCycle,
    InvalidParams,
    NonConvergent,
    NotClosed,
    SchemaMismatch,
    SpecMismatch,
    TooLarge,
    ZeroInput,
)
from .mapcore import Budget, MapParams, StepKind, macro_step, make_params, step, trajectory, valuation
from .search import (
    ScanRecord,
    ScanReport,
    ScanSpec,
    SplitMix64,
    conjecture_scan,
    merge_reports,
    random_scan,
    scan_range,
)
