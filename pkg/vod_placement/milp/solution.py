"""
milp/solution.py

Bind a solver's reported values back to model variables and turn them into
a PlacementPlan.
"""

from __future__ import annotations

import logging
from typing import Dict, Mapping, Optional

from vod_placement.errors import InfeasibleError, SolutionParseError, SolverError
from vod_placement.milp.model import MilpModel, Names
from vod_placement.milp.mps import MpsDocument
from vod_placement.plan import AfdcEnergy, GroupFlow, PlacementPlan
from vod_placement.solver.base import RawSolution, SolverStatus

logger = logging.getLogger(__name__)

INTEGRALITY_TOLERANCE = 1e-6
SNAP_TOLERANCE = 1e-9
SNAP_DIGITS = 6
ROW_TOLERANCE = 1e-5


def bind_values(file_values: Mapping[str, float], document: MpsDocument, model: MilpModel) -> Dict[str, float]:
    """
    Translate file names to model names and check integrality.

    Continuous values within 1e-9 (relative) of a six-decimal number are
    snapped to it, so exact flows such as 158.4 or 0 survive solver noise.

    Raises:
        SolutionParseError: a model variable has no value (the first one in
            model order is named), or an integer variable is further than
            1e-6 from an integer.
    """
    values: Dict[str, float] = {}
    for name, var in model.variables.items():
        mps_name = document.columns.get(name, name)
        if mps_name not in file_values:
            raise SolutionParseError(f"solution has no value for variable '{name}' (written as '{mps_name}')")
        x = float(file_values[mps_name])
        if var.is_integer:
            nearest = round(x)
            if abs(x - nearest) > INTEGRALITY_TOLERANCE:
                raise SolutionParseError(f"integer variable '{name}' has non-integral value {x!r}")
            x = float(nearest)
        else:
            # solver noise on a value with few decimals, e.g. 158.39999999997
            snapped = round(x, SNAP_DIGITS) + 0.0
            if abs(x - snapped) <= SNAP_TOLERANCE * max(1.0, abs(x)):
                x = snapped
        values[name] = x
    return values


def plan_from_values(values: Mapping[str, float], model: MilpModel, objective: Optional[float] = None) -> PlacementPlan:
    """Read flows, energy decisions and wavelength counts out of bound values."""
    layout = model.layout
    if layout is None:
        raise SolutionParseError("model carries no layout; it was not built by build_model")

    plan = PlacementPlan(hours=layout.hours, groups=layout.groups, initial_soc=layout.initial_soc)
    for h in range(layout.hours):
        for g in range(layout.groups):
            plan.flows[(h, g)] = GroupFlow(
                afdc=values.get(Names.afdc(g, h), 0.0),
                mfdc=values.get(Names.mfdc(g, h), 0.0),
                cdc={c: values[Names.cdc(c, g, h)] for c in layout.cdcs if values.get(Names.cdc(c, g, h), 0.0)},
            )
        for g in layout.energy_groups:
            plan.energy[(h, g)] = AfdcEnergy(
                serve=values.get(Names.serve(g, h), 0.0),
                charge=values.get(Names.charge(g, h), 0.0),
                curtail=values.get(Names.curtail(g, h), 0.0),
                discharge=values.get(Names.discharge(g, h), 0.0),
                soc=values.get(Names.soc(g, h), 0.0),
            )
        for c in layout.cdcs:
            for n in set(layout.group_home):
                w = values.get(Names.wavelengths(c, n, h))
                if w:
                    plan.wavelengths[(h, c, n)] = int(w)

    plan.objective_kwh = objective if objective is not None else model.objective_value(values)
    return plan


def parse_solution(raw: RawSolution, document: MpsDocument, model: MilpModel) -> PlacementPlan:
    """
    Turn a solver result into a PlacementPlan.

    Bound values are checked against every model row before the plan is
    built, so a plan returned here already satisfies the formulation.

    Raises:
        InfeasibleError: the solver proved the model infeasible.
        SolverError: unbounded or unrecognized verdict.
        SolutionParseError: missing or non-integral values, or rows broken
            by the reported values.
    """
    if raw.status is SolverStatus.INFEASIBLE:
        raise InfeasibleError("solver reports the model infeasible: demand cannot be served within capacities")
    if raw.status is SolverStatus.UNBOUNDED:
        raise SolverError("solver reports the model unbounded")
    if raw.status is SolverStatus.ERROR:
        raise SolverError("solver finished without a usable verdict")

    values = bind_values(raw.values, document, model)
    broken = model.violations(values, tolerance=ROW_TOLERANCE)
    if broken:
        name, amount = broken[0]
        raise SolutionParseError(f"reported solution breaks '{name}' by {amount:g} ({len(broken)} rows in total)")

    computed = model.objective_value(values)
    if raw.objective is not None and abs(raw.objective - computed) > 1e-6 * max(1.0, abs(computed)):
        logger.warning("[SOLVER] Reported objective %.9g differs from recomputed %.9g", raw.objective, computed)
    plan = plan_from_values(values, model, raw.objective if raw.objective is not None else computed)
    logger.info("[SOLVER] Bound %d values, objective %.6f kWh", len(values), plan.objective_kwh)
    return plan
