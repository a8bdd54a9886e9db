"""
power.py

Power model of the three-level architecture: core IP-over-WDM with lightpath
bypass, metro Ethernet, PON access, and per-tier data centres scaled by PUE.

Every function here is a pure function of immutable inputs. Results are
Watts for one hour; daily figures are kWh (Σ hourly W / 1000).
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

from vod_placement.config import PowerParams
from vod_placement.errors import CapacityError, ModelError
from vod_placement.plan import PlacementPlan
from vod_placement.scenario import EnergySource, ScenarioConfig, Tier
from vod_placement.topology import CoreTopology

logger = logging.getLogger(__name__)

CEIL_SLACK = 1e-6
CAPACITY_TOLERANCE_GBPS = 1e-6
NEGATIVE_TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# Step helpers
# ---------------------------------------------------------------------------


def steps(load: float, width: float) -> int:
    """
    Number of width-sized units needed to carry load (ceiling).

    A 1e-6 slack in units of width keeps solver values sitting on a step
    boundary from jumping to the next step.
    """
    if load < -NEGATIVE_TOLERANCE:
        raise ModelError(f"negative load {load:g}")
    if load <= 0:
        return 0
    return max(0, math.ceil(load / width - CEIL_SLACK))


def whole_steps(length: float, width: float) -> int:
    """floor(length / width) with the same slack as steps()."""
    return math.floor(length / width + CEIL_SLACK)


def edfas_per_fibre(km: float, params: PowerParams) -> int:
    return whole_steps(km, params.edfa_span_km) + 1


def regenerators_per_wavelength(km: float, params: PowerParams) -> int:
    return whole_steps(km, params.regen_reach_km)


# ---------------------------------------------------------------------------
# Core network
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class CoreUsage:
    """
    Core equipment needed for one hour of virtual-topology traffic.

    The *_w fields are IT power before the networking PUE.
    """

    wavelengths: Dict[Tuple[int, int], int]
    fibres: Dict[Tuple[int, int], int]
    router_port_w: float
    transponder_w: float
    edfa_w: float
    regenerator_w: float
    optical_switch_w: float
    pue_n: float

    @property
    def traffic_w(self) -> float:
        """Traffic-attributable core power (what the optimizer minimizes)."""
        return (self.router_port_w + self.transponder_w + self.edfa_w + self.regenerator_w) * self.pue_n

    @property
    def idle_w(self) -> float:
        return self.optical_switch_w * self.pue_n

    @property
    def total_w(self) -> float:
        return self.traffic_w + self.idle_w


def core_usage(
    topo: CoreTopology,
    virtual_traffic: Mapping[Tuple[int, int], float],
    params: PowerParams,
) -> CoreUsage:
    """
    Size the core for the given (source, destination) → Gbps traffic.

    Each pair gets ceil(t / wavelength_capacity) lightpaths routed over the
    shortest physical path; fibres on each directed arc are sized from the
    wavelengths crossing it.

    Raises:
        ModelError: negative traffic or a pair outside the topology.
        CapacityError: an arc needs more fibres than its link has.
    """
    wavelengths: Dict[Tuple[int, int], int] = {}
    arc_wavelengths: Dict[Tuple[int, int], int] = defaultdict(int)
    regens = 0
    for (src, dst), gbps in sorted(virtual_traffic.items()):
        if src not in topo.nodes or dst not in topo.nodes:
            raise ModelError(f"core traffic pair ({src}, {dst}) outside the topology")
        if gbps < -NEGATIVE_TOLERANCE:
            raise ModelError(f"negative core traffic {gbps:g} Gbps on pair ({src}, {dst})")
        w = steps(gbps, params.wavelength_capacity_gbps)
        if w == 0 or src == dst:
            continue
        wavelengths[(src, dst)] = w
        path = topo.path(src, dst)
        for arc in path.arcs:
            arc_wavelengths[arc] += w
        regens += w * regenerators_per_wavelength(path.total_km, params)

    fibres: Dict[Tuple[int, int], int] = {}
    edfas = 0
    for (u, v), w in sorted(arc_wavelengths.items()):
        edge = topo.graph.edges[u, v]
        link = topo.link(edge["link_id"])
        count = steps(w, params.wavelengths_per_fibre)
        if count > link.fibres:
            raise CapacityError(f"arc {topo.labels[u]}->{topo.labels[v]}", w, link.fibres * params.wavelengths_per_fibre)
        fibres[(u, v)] = count
        edfas += count * edfas_per_fibre(link.km, params)

    total_w = sum(wavelengths.values())
    return CoreUsage(
        wavelengths=wavelengths,
        fibres=fibres,
        router_port_w=2 * total_w * params.core_router_port_w,
        transponder_w=2 * total_w * params.transponder_w,
        edfa_w=edfas * params.edfa_w,
        regenerator_w=regens * params.regenerator_w,
        optical_switch_w=len(topo.nodes) * params.optical_switch_w,
        pue_n=params.pue_n,
    )


def core_power(
    topo: CoreTopology,
    virtual_traffic: Mapping[Tuple[int, int], float],
    params: PowerParams,
    include_idle: bool = True,
) -> float:
    """Core-network power in W, with the optical-switch floor unless include_idle is False."""
    usage = core_usage(topo, virtual_traffic, params)
    return usage.total_w if include_idle else usage.traffic_w


# ---------------------------------------------------------------------------
# Metro and access
# ---------------------------------------------------------------------------


def metro_node_power(load: float, params: PowerParams) -> float:
    switches = steps(load, params.switch_bitrate_gbps)
    ports = steps(load, params.router_port_bitrate_gbps)
    return (switches * params.metro_eth_switch_w + ports * params.edge_port_w) * params.pue_n


def metro_power(loads: Mapping[int, float], params: PowerParams) -> float:
    """Metro Ethernet switches plus edge-router ports at every node, × pue_n."""
    return sum(metro_node_power(load, params) for load in loads.values())


def access_group_power(load: float, params: PowerParams, group: int | None = None) -> float:
    cap = params.olt_group_capacity_gbps
    if load > cap + CAPACITY_TOLERANCE_GBPS:
        raise CapacityError(f"OLTs of group {group}", load, cap)
    return steps(load, params.olt_metro_capacity_gbps) * params.olt_w * params.pue_n


def access_power(loads: Mapping[int, float], params: PowerParams) -> float:
    """Active OLTs per access group (ceil(load / OLT capacity)) × olt_w × pue_n."""
    return sum(access_group_power(load, params, group) for group, load in loads.items())


# ---------------------------------------------------------------------------
# Data centres
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TierEquipment:
    """Switch, router port, PUE and serving cap of one data-centre tier."""

    switch_w: float
    switch_bitrate_gbps: float
    port_w: float
    pue: float
    capacity_gbps: Optional[float]


def tier_equipment(tier: Tier, params: PowerParams) -> TierEquipment:
    if tier is Tier.CDC:
        return TierEquipment(
            params.cloud_metro_switch_w,
            params.switch_bitrate_gbps,
            params.cloud_router_port_w,
            params.pue_c,
            params.cdc_capacity_gbps,
        )
    if tier is Tier.MFDC:
        return TierEquipment(
            params.cloud_metro_switch_w,
            params.switch_bitrate_gbps,
            params.fog_router_port_w,
            params.pue_mf,
            params.mfdc_capacity_gbps,
        )
    return TierEquipment(
        params.access_fog_switch_w,
        params.access_switch_bitrate_gbps,
        params.fog_router_port_w,
        params.pue_af,
        params.afdc_capacity_gbps,
    )


def dc_power(tier: Tier, load: float, params: PowerParams, site: str | None = None) -> float:
    """
    Power of one data-centre site serving load Gbps.

    Servers are allocated whole and draw full server_w. In "detailed" mode
    switches and router ports are counted at the tier's bitrates; in "ratio"
    mode IT power is compute power × net_to_compute_ratio.

    Raises:
        CapacityError: load above the tier's serving capacity.
    """
    equipment = tier_equipment(tier, params)
    cap = equipment.capacity_gbps
    if cap is not None and load > cap + CAPACITY_TOLERANCE_GBPS:
        raise CapacityError(site or tier.value.upper(), load, cap)

    compute_w = steps(load, params.server_capacity_gbps) * params.server_w
    if params.dc_power_mode == "ratio":
        it_w = compute_w * params.net_to_compute_ratio
    else:
        it_w = (
            compute_w
            + steps(load, equipment.switch_bitrate_gbps) * equipment.switch_w
            + steps(load, params.router_port_bitrate_gbps) * equipment.port_w
        )
    return it_w * equipment.pue


# ---------------------------------------------------------------------------
# Plan evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class PowerBreakdown:
    """
    Power of one hour, split by component and by energy source.

    core_w excludes the optical-switch floor, which is reported as
    core_idle_w; brown_w + renewable_w equals total_w.
    """

    hour: int
    core_w: float
    core_idle_w: float
    metro_w: float
    access_w: float
    dc_w: Dict[Tier, float] = field(default_factory=dict)
    dc_brown_w: Dict[Tier, float] = field(default_factory=dict)
    brown_w: float = 0.0
    renewable_w: float = 0.0

    @property
    def transport_w(self) -> float:
        return self.core_w + self.metro_w + self.access_w

    @property
    def dc_total_w(self) -> float:
        return sum(self.dc_w.values())

    @property
    def total_w(self) -> float:
        return self.transport_w + self.dc_total_w

    @property
    def total_with_idle_w(self) -> float:
        return self.total_w + self.core_idle_w

    @property
    def brown_with_idle_w(self) -> float:
        return self.brown_w + self.core_idle_w


@dataclass(frozen=True, slots=True)
class PowerReport:
    """Hourly breakdowns of one plan and their daily kWh totals."""

    hours: Tuple[PowerBreakdown, ...]

    def _kwh(self, attr: str) -> float:
        return sum(getattr(b, attr) for b in self.hours) / 1000.0

    @property
    def brown_kwh(self) -> float:
        return self._kwh("brown_w")

    @property
    def brown_with_idle_kwh(self) -> float:
        return self._kwh("brown_with_idle_w")

    @property
    def renewable_kwh(self) -> float:
        return self._kwh("renewable_w")

    @property
    def total_kwh(self) -> float:
        return self._kwh("total_w")

    @property
    def transport_kwh(self) -> float:
        """Core + metro + access; networking is always brown-powered."""
        return self._kwh("transport_w")

    @property
    def idle_kwh(self) -> float:
        return self._kwh("core_idle_w")

    def component_kwh(self) -> Dict[str, float]:
        return {name: self._kwh(f"{name}_w") for name in ("core", "metro", "access")}

    def dc_kwh(self, tier: Tier, brown_only: bool = False) -> float:
        source = "dc_brown_w" if brown_only else "dc_w"
        return sum(getattr(b, source).get(tier, 0.0) for b in self.hours) / 1000.0


def hour_power(
    plan: PlacementPlan,
    topo: CoreTopology,
    scenario: ScenarioConfig,
    params: PowerParams,
    hour: int,
) -> PowerBreakdown:
    """Breakdown of one hour; params must already carry the scenario's PUEs."""
    usage = core_usage(topo, plan.core_traffic(topo, hour), params)
    metro_w = metro_power(plan.metro_loads(topo, hour), params)
    access_w = access_power(plan.olt_loads(hour), params)

    dc_w: Dict[Tier, float] = {}
    dc_brown_w: Dict[Tier, float] = {}
    renewable_w = 0.0
    for tier, sites in plan.site_loads(topo, hour).items():
        tier_w, tier_brown = 0.0, 0.0
        for site, load in sorted(sites.items()):
            label = f"{tier.value.upper()} {topo.labels[site] if tier is not Tier.AFDC else site}"
            site_w = dc_power(tier, load, params, site=label)
            source = scenario.source(tier)
            if source is EnergySource.RENEWABLE:
                site_brown = 0.0
            elif source is EnergySource.SOLAR:
                e = plan.energy_at(hour, site)
                site_brown = max(0.0, site_w - 1000.0 * (e.serve + e.discharge))
            else:
                site_brown = site_w
            tier_w += site_w
            tier_brown += site_brown
            renewable_w += site_w - site_brown
        dc_w[tier] = tier_w
        dc_brown_w[tier] = tier_brown

    transport_w = usage.traffic_w + metro_w + access_w
    return PowerBreakdown(
        hour=hour,
        core_w=usage.traffic_w,
        core_idle_w=usage.idle_w,
        metro_w=metro_w,
        access_w=access_w,
        dc_w=dc_w,
        dc_brown_w=dc_brown_w,
        brown_w=transport_w + sum(dc_brown_w.values()),
        renewable_w=renewable_w,
    )


def evaluate_plan(
    plan: PlacementPlan,
    topo: CoreTopology,
    scenario: ScenarioConfig,
    params: PowerParams,
) -> PowerReport:
    """
    Power of every hour of a plan under a scenario's PUEs and energy sourcing.

    Raises:
        ModelError: plan referencing unknown nodes or groups.
        CapacityError: a site or OLT loaded beyond its capacity.
    """
    plan.check_against(topo)
    effective = scenario.effective_params(params)
    report = PowerReport(tuple(hour_power(plan, topo, scenario, effective, h) for h in range(plan.hours)))
    logger.debug(
        "[POWER] Scenario %s: brown %.3f kWh, transport %.3f kWh",
        scenario.name,
        report.brown_kwh,
        report.transport_kwh,
    )
    return report


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

BREAKDOWN_COLUMNS = (
    "hour",
    "core_w",
    "core_idle_w",
    "metro_w",
    "access_w",
    "cdc_w",
    "mfdc_w",
    "afdc_w",
    "cdc_brown_w",
    "mfdc_brown_w",
    "afdc_brown_w",
    "brown_w",
    "renewable_w",
)
TOTAL_ROW = "total_wh"


def _values(b: PowerBreakdown) -> Tuple[float, ...]:
    return (
        b.core_w,
        b.core_idle_w,
        b.metro_w,
        b.access_w,
        *(b.dc_w.get(t, 0.0) for t in Tier),
        *(b.dc_brown_w.get(t, 0.0) for t in Tier),
        b.brown_w,
        b.renewable_w,
    )


def write_breakdown_csv(report: PowerReport) -> str:
    """One row per hour and a final row of per-column sums (Wh)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BREAKDOWN_COLUMNS)
    totals = [0.0] * (len(BREAKDOWN_COLUMNS) - 1)
    for b in report.hours:
        values = _values(b)
        totals = [t + v for t, v in zip(totals, values)]
        writer.writerow([b.hour, *(repr(float(v)) for v in values)])
    writer.writerow([TOTAL_ROW, *(repr(float(v)) for v in totals)])
    return buf.getvalue()


def read_breakdown_csv(text: str) -> PowerReport:
    """Parse write_breakdown_csv output; the totals row is checked, not stored."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or tuple(rows[0]) != BREAKDOWN_COLUMNS:
        raise ModelError(f"breakdown CSV header must be {','.join(BREAKDOWN_COLUMNS)}")
    tiers = list(Tier)
    hours = []
    totals_row: Optional[list] = None
    for rowno, row in enumerate(rows[1:], start=2):
        try:
            numbers = [float(c) for c in row[1:]]
        except ValueError:
            raise ModelError(f"breakdown row {rowno}: malformed number") from None
        if len(numbers) != len(BREAKDOWN_COLUMNS) - 1:
            raise ModelError(f"breakdown row {rowno}: expected {len(BREAKDOWN_COLUMNS)} cells")
        if row[0] == TOTAL_ROW:
            totals_row = numbers
            continue
        core, idle, metro, access = numbers[:4]
        hours.append(
            PowerBreakdown(
                hour=int(row[0]),
                core_w=core,
                core_idle_w=idle,
                metro_w=metro,
                access_w=access,
                dc_w=dict(zip(tiers, numbers[4:7])),
                dc_brown_w=dict(zip(tiers, numbers[7:10])),
                brown_w=numbers[10],
                renewable_w=numbers[11],
            )
        )
    report = PowerReport(tuple(hours))
    if totals_row is not None:
        sums = [sum(col) for col in zip(*(_values(b) for b in hours))] if hours else [0.0] * len(totals_row)
        for name, expected, got in zip(BREAKDOWN_COLUMNS[1:], sums, totals_row):
            if not math.isclose(expected, got, rel_tol=1e-9, abs_tol=1e-6):
                raise ModelError(f"breakdown totals row: {name} is {got!r}, hourly rows sum to {expected!r}")
    return report
