"""
errors.py

Exception hierarchy and CLI exit codes for the placement toolkit.

Every error raised on purpose derives from VodPlacementError so the CLI can
map it to an exit code without catching unrelated bugs.
"""

from __future__ import annotations

from enum import IntEnum
from typing import Mapping, Sequence


class ExitCode(IntEnum):
    OK = 0
    CONFIG = 2
    SOLVER = 3
    INFEASIBLE = 4
    VERIFICATION = 5


class VodPlacementError(Exception):
    """Base class for all toolkit errors."""

    exit_code: ExitCode = ExitCode.CONFIG


class ConfigError(VodPlacementError, ValueError):
    """Invalid configuration file, parameter value or command-line input."""


class SolverNotFoundError(ConfigError):
    """The configured solver binary is not on PATH."""


class TopologyError(ConfigError):
    """Topology or placement document failed validation.

    Attributes:
        errors: every validation problem found, in document order.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DemandError(ConfigError):
    """Demand document failed validation."""


class CapacityError(VodPlacementError, ValueError):
    """A load exceeds the serving capacity of a tier or device."""

    exit_code = ExitCode.INFEASIBLE

    def __init__(self, entity: str, load: float, capacity: float):
        self.entity = entity
        self.load = load
        self.capacity = capacity
        super().__init__(f"{entity}: load {load:g} Gbps exceeds capacity {capacity:g} Gbps")


class EsdError(VodPlacementError, ValueError):
    """An ESD step would leave the state of charge outside its bounds."""

    exit_code = ExitCode.VERIFICATION

    def __init__(self, message: str, hour: int | None = None):
        self.hour = hour
        prefix = f"hour {hour}: " if hour is not None else ""
        super().__init__(prefix + message)


class ModelError(VodPlacementError):
    """Inconsistent inputs to model building or an ill-formed model."""


class SolverError(VodPlacementError):
    """External solver failed or produced unusable output."""

    exit_code = ExitCode.SOLVER


class SolverTimeoutError(SolverError):
    """Solver hit its time limit.

    Attributes:
        incumbent: variable values of the best solution found, if any.
        objective: objective of the incumbent, if reported.
    """

    def __init__(
        self,
        message: str,
        incumbent: Mapping[str, float] | None = None,
        objective: float | None = None,
    ):
        self.incumbent = dict(incumbent) if incumbent else None
        self.objective = objective
        super().__init__(message)


class SolutionParseError(SolverError):
    """Solution text could not be bound to the model."""


class InfeasibleError(VodPlacementError):
    """Demand cannot be served within the configured capacities."""

    exit_code = ExitCode.INFEASIBLE


class BudgetExceededError(VodPlacementError):
    """Brute-force enumeration would exceed its state budget."""

    exit_code = ExitCode.CONFIG
