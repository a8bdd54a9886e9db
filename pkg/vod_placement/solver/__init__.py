"""External MILP solver backends."""

from vod_placement.solver.base import (
    BaseSolverBackend,
    RawSolution,
    SolverStatus,
    get_solver_backend,
    invoke_solver,
    parse_raw_solution,
)

__all__ = [
    "BaseSolverBackend",
    "RawSolution",
    "SolverStatus",
    "get_solver_backend",
    "invoke_solver",
    "parse_raw_solution",
]
