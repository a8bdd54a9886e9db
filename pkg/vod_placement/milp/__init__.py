"""Brown-energy MILP: model building, MPS emission, solution binding and plan verification."""

from vod_placement.milp.model import MilpModel, Names, Sense, VarKind, build_model
from vod_placement.milp.mps import MpsDocument, emit_mps, parse_mps
from vod_placement.milp.solution import parse_solution
from vod_placement.milp.verify import Violation, verify_plan

__all__ = [
    "MilpModel",
    "MpsDocument",
    "Names",
    "Sense",
    "VarKind",
    "Violation",
    "build_model",
    "emit_mps",
    "parse_mps",
    "parse_solution",
    "verify_plan",
]
