"""Radiotherapy treatment scheduling: models, solver, simulator, stats."""

__version__ = "0.1.0"

from .domain import (
    Anchor,
    BookingLedger,
    Calendar,
    CapacityGrid,
    DomainError,
    Linac,
    MachineType,
    PatientCase,
    RadiationNeed,
    SessionPattern,
    TreatmentIntent,
    WaitingListStatus,
    allowed_start_days,
    default_fleet,
    session_expansion,
)
from .model import (
    CriteriaVector,
    Schedule,
    Violation,
    build_compact_model,
    build_full_model,
    check_feasibility,
    evaluate_criteria,
    export_lp,
)
from .solver import (
    SolveBudget,
    constructive_schedule,
    lexicographic_solve,
    solve_batch,
    solve_batch_detailed,
)
from .simulate import PolicyConfig, run_simulation
from .datagen import GeneratorConfig, generate_instance, generate_instances
from .instance_io import load_instance, save_instance
from .stats import ConfigResults, bootstrap_compare, mark_best, mww_u

__all__ = [
    "Anchor",
    "BookingLedger",
    "Calendar",
    "CapacityGrid",
    "ConfigResults",
    "CriteriaVector",
    "DomainError",
    "GeneratorConfig",
    "Linac",
    "MachineType",
    "PatientCase",
    "PolicyConfig",
    "RadiationNeed",
    "Schedule",
    "SessionPattern",
    "SolveBudget",
    "TreatmentIntent",
    "Violation",
    "WaitingListStatus",
    "allowed_start_days",
    "bootstrap_compare",
    "build_compact_model",
    "build_full_model",
    "check_feasibility",
    "constructive_schedule",
    "default_fleet",
    "evaluate_criteria",
    "export_lp",
    "generate_instance",
    "generate_instances",
    "lexicographic_solve",
    "load_instance",
    "mark_best",
    "mww_u",
    "run_simulation",
    "save_instance",
    "session_expansion",
    "solve_batch",
    "solve_batch_detailed",
]
