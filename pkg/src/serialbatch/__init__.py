"""Serial-batch scheduling with family setups and block-size windows."""

from __future__ import annotations

from .heuristic import LocalSearchParams, construct, improve, solve_heuristic
from .instgen import GenConfig, generate
from .model import (
    Assignment,
    FamilyBlock,
    Instance,
    Job,
    Schedule,
    ViolationKind,
    check_feasible,
    decode_blocks,
    earliest_timing,
    make_instance,
    twct,
    validate_instance,
)
from .oracle import brute_force
from .report import SolveReport, Status
from .solver import Propagation, SolverParams, solve, solve_core

__all__ = [
    "Assignment", "FamilyBlock", "GenConfig", "Instance", "Job", "LocalSearchParams", "Propagation",
    "Schedule", "SolveReport", "SolverParams", "Status", "ViolationKind", "brute_force",
    "check_feasible", "construct", "decode_blocks", "earliest_timing", "generate", "improve",
    "make_instance", "solve", "solve_core", "solve_heuristic", "twct", "validate_instance",
]
