"""
plan.py

PlacementPlan: the full hourly decision that optimizer, heuristics, power
evaluation and verification all speak, plus its CSV form.

CSV columns:
    hour,group,afdc_gbps,mfdc_gbps,cdc_gbps,solar_serve_kwh,solar_charge_kwh,
    curtailed_kwh,discharge_kwh,soc_kwh

`cdc_gbps` lists every CDC serving the group as `node:gbps` pairs joined by
`;` (dense node ids). `soc_kwh` is the state of charge at the end of the hour.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from vod_placement.errors import ModelError
from vod_placement.scenario import Tier
from vod_placement.topology import CoreTopology

logger = logging.getLogger(__name__)

PLAN_COLUMNS = (
    "hour",
    "group",
    "afdc_gbps",
    "mfdc_gbps",
    "cdc_gbps",
    "solar_serve_kwh",
    "solar_charge_kwh",
    "curtailed_kwh",
    "discharge_kwh",
    "soc_kwh",
)


# ---------------------------------------------------------------------------
# DATA MODELS
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class GroupFlow:
    """Gbps delivered to one access group in one hour, by serving tier."""

    afdc: float = 0.0
    mfdc: float = 0.0
    cdc: Dict[int, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.afdc + self.mfdc + sum(self.cdc.values())

    @property
    def upstream(self) -> float:
        """Traffic that crosses the metro network."""
        return self.mfdc + sum(self.cdc.values())


@dataclass(slots=True)
class AfdcEnergy:
    """
    Energy decisions of one AFDC in one hour (kWh).

    Attributes:
        serve: solar energy consumed directly by the AFDC.
        charge: solar energy sent into the ESD.
        curtail: solar energy discarded.
        discharge: ESD energy delivered to the AFDC.
        soc: state of charge at the end of the hour.
    """

    serve: float = 0.0
    charge: float = 0.0
    curtail: float = 0.0
    discharge: float = 0.0
    soc: float = 0.0

    @property
    def is_zero(self) -> bool:
        return not any((self.serve, self.charge, self.curtail, self.discharge, self.soc))


@dataclass(slots=True)
class PlacementPlan:
    """
    Hourly placement decision for every access group.

    Attributes:
        hours (int): horizon length.
        groups (int): number of access groups.
        flows: (hour, group) → GroupFlow; missing cells mean zero.
        energy: (hour, afdc group) → AfdcEnergy; missing cells mean zero.
        initial_soc (float): ESD state of charge before hour 0.
        wavelengths: (hour, src, dst) → lightpath count reported by a solver.
        objective_kwh: brown energy reported by whoever produced the plan.
    """

    hours: int
    groups: int
    flows: Dict[Tuple[int, int], GroupFlow] = field(default_factory=dict)
    energy: Dict[Tuple[int, int], AfdcEnergy] = field(default_factory=dict)
    initial_soc: float = 0.0
    wavelengths: Dict[Tuple[int, int, int], int] = field(default_factory=dict)
    objective_kwh: Optional[float] = None

    def flow(self, hour: int, group: int) -> GroupFlow:
        return self.flows.get((hour, group)) or GroupFlow()

    def energy_at(self, hour: int, group: int) -> AfdcEnergy:
        return self.energy.get((hour, group)) or AfdcEnergy()

    def set_flow(self, hour: int, group: int, flow: GroupFlow) -> None:
        self.flows[(hour, group)] = flow

    def energy_groups(self) -> Tuple[int, ...]:
        return tuple(sorted({g for (_, g) in self.energy}))

    # -----------------------------------------------------------------------
    # Derived loads
    # -----------------------------------------------------------------------

    def check_against(self, topo: CoreTopology) -> None:
        """Raise ModelError if the plan names groups or nodes outside topo."""
        if self.groups != len(topo.groups):
            raise ModelError(f"plan has {self.groups} groups, topology has {len(topo.groups)}")
        for (hour, group), flow in self.flows.items():
            if not 0 <= hour < self.hours or group not in topo.groups:
                raise ModelError(f"plan cell (hour {hour}, group {group}) outside the horizon or topology")
            for node in flow.cdc:
                if node not in topo.nodes:
                    raise ModelError(f"hour {hour} group {group}: unknown CDC node {node}")
        for hour, group in self.energy:
            if not 0 <= hour < self.hours or group not in topo.groups:
                raise ModelError(f"energy cell (hour {hour}, group {group}) outside the horizon or topology")

    def core_traffic(self, topo: CoreTopology, hour: int) -> Dict[Tuple[int, int], float]:
        """Virtual-topology traffic (cdc node, home node) → Gbps; local CDC traffic excluded."""
        traffic: Dict[Tuple[int, int], float] = defaultdict(float)
        for group in range(self.groups):
            home = topo.group_home[group]
            for node, gbps in self.flow(hour, group).cdc.items():
                if node != home and gbps > 0:
                    traffic[(node, home)] += gbps
        return dict(traffic)

    def metro_loads(self, topo: CoreTopology, hour: int) -> Dict[int, float]:
        loads: Dict[int, float] = defaultdict(float)
        for group in range(self.groups):
            loads[topo.group_home[group]] += self.flow(hour, group).upstream
        return dict(loads)

    def olt_loads(self, hour: int) -> Dict[int, float]:
        return {group: self.flow(hour, group).total for group in range(self.groups)}

    def site_loads(self, topo: CoreTopology, hour: int) -> Dict[Tier, Dict[int, float]]:
        """Serving load per data-centre site: CDC and MFDC keyed by node, AFDC by group."""
        loads: Dict[Tier, Dict[int, float]] = {tier: defaultdict(float) for tier in Tier}
        for group in range(self.groups):
            flow = self.flow(hour, group)
            if flow.afdc:
                loads[Tier.AFDC][group] += flow.afdc
            if flow.mfdc:
                loads[Tier.MFDC][topo.group_home[group]] += flow.mfdc
            for node, gbps in flow.cdc.items():
                if gbps:
                    loads[Tier.CDC][node] += gbps
        return {tier: dict(v) for tier, v in loads.items()}

    def tier_gbps_hours(self) -> Dict[Tier, float]:
        """Gbps·h served by each tier over the horizon."""
        totals = {tier: 0.0 for tier in Tier}
        for flow in self.flows.values():
            totals[Tier.AFDC] += flow.afdc
            totals[Tier.MFDC] += flow.mfdc
            totals[Tier.CDC] += sum(flow.cdc.values())
        return totals

    def tier_shares(self) -> Dict[Tier, float]:
        """Percentage of delivered Gbps·h per tier (zeros for an empty plan)."""
        totals = self.tier_gbps_hours()
        served = sum(totals.values())
        if served <= 0:
            return {tier: 0.0 for tier in Tier}
        return {tier: 100.0 * v / served for tier, v in totals.items()}


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _encode_cdc(cdc: Dict[int, float]) -> str:
    return ";".join(f"{node}:{gbps!r}" for node, gbps in sorted(cdc.items()) if gbps != 0)


def _decode_cdc(cell: str, where: str) -> Dict[int, float]:
    out: Dict[int, float] = {}
    for part in filter(None, (p.strip() for p in cell.split(";"))):
        try:
            node, gbps = part.split(":")
            out[int(node)] = float(gbps)
        except ValueError:
            raise ModelError(f"{where}: malformed cdc_gbps entry '{part}'") from None
    return out


def write_plan_csv(plan: PlacementPlan) -> str:
    """One row per (hour, group), hour-major; floats in repr form."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PLAN_COLUMNS)
    for hour in range(plan.hours):
        for group in range(plan.groups):
            flow = plan.flow(hour, group)
            e = plan.energy_at(hour, group)
            writer.writerow(
                [
                    hour,
                    group,
                    repr(float(flow.afdc)),
                    repr(float(flow.mfdc)),
                    _encode_cdc(flow.cdc),
                    repr(float(e.serve)),
                    repr(float(e.charge)),
                    repr(float(e.curtail)),
                    repr(float(e.discharge)),
                    repr(float(e.soc)),
                ]
            )
    return buf.getvalue()


def read_plan_csv(
    text: str,
    initial_soc: float = 0.0,
    energy_groups: Iterable[int] | None = None,
) -> PlacementPlan:
    """
    Parse a plan CSV written by write_plan_csv.

    Energy records are kept for energy_groups; when None, for every group
    with a non-zero energy cell.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or tuple(c.strip() for c in rows[0]) != PLAN_COLUMNS:
        raise ModelError(f"plan CSV header must be {','.join(PLAN_COLUMNS)}")

    flows: Dict[Tuple[int, int], GroupFlow] = {}
    energy: Dict[Tuple[int, int], AfdcEnergy] = {}
    hours, groups = 0, 0
    for rowno, row in enumerate(rows[1:], start=2):
        where = f"plan row {rowno}"
        if len(row) != len(PLAN_COLUMNS):
            raise ModelError(f"{where}: expected {len(PLAN_COLUMNS)} cells, got {len(row)}")
        try:
            hour, group = int(row[0]), int(row[1])
            afdc, mfdc = float(row[2]), float(row[3])
            serve, charge, curtail, discharge, soc = (float(c) for c in row[5:])
        except ValueError:
            raise ModelError(f"{where}: malformed number") from None
        if (hour, group) in flows:
            raise ModelError(f"{where}: duplicate cell (hour {hour}, group {group})")
        flows[(hour, group)] = GroupFlow(afdc, mfdc, _decode_cdc(row[4], where))
        energy[(hour, group)] = AfdcEnergy(serve, charge, curtail, discharge, soc)
        hours, groups = max(hours, hour + 1), max(groups, group + 1)

    if energy_groups is None:
        keep = {g for (_, g), e in energy.items() if not e.is_zero}
    else:
        keep = set(energy_groups)
    kept: Dict[Tuple[int, int], AfdcEnergy] = {}
    for (h, g), e in energy.items():
        if g in keep:
            kept[(h, g)] = e
        elif not e.is_zero:
            raise ModelError(f"hour {h} group {g}: energy values on a group without an AFDC energy supply")

    plan = PlacementPlan(hours=hours, groups=groups, flows=flows, energy=kept, initial_soc=initial_soc)
    logger.debug("[PLAN] Read plan with %d hours × %d groups", hours, groups)
    return plan


def zero_plan(hours: int, groups: int, energy_groups: Iterable[int] = (), initial_soc: float = 0.0) -> PlacementPlan:
    """Plan with every flow and energy value zero."""
    plan = PlacementPlan(hours=hours, groups=groups, initial_soc=initial_soc)
    for h in range(hours):
        for g in range(groups):
            plan.flows[(h, g)] = GroupFlow()
        for g in energy_groups:
            plan.energy[(h, g)] = AfdcEnergy(soc=initial_soc)
    return plan


def flows_by_hour(plan: PlacementPlan) -> List[List[GroupFlow]]:
    return [[plan.flow(h, g) for g in range(plan.groups)] for h in range(plan.hours)]
