"""
heuristics.py

Solver-free greedy placement.

Each candidate site gets a marginal brown cost per Gbps: the transport chain
from the site to the group plus the site's data-centre equipment at the tier
PUE, every device's power spread over its step width. Renewable-powered sites
pay transport only. Every hour, each group fills its cheapest site to capacity
before moving to the next one.

Solar AFDCs first take whatever load their free energy covers and then keep
adding servers while the brown top-up is cheaper than sending the traffic
upstream. ESDs charge from solar surplus and discharge in the group's
highest-demand hours first, never leaving less stored at the end of the day
than at the start when the cyclic rule is on.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

from vod_placement.config import PowerParams
from vod_placement.demand import DemandProfile
from vod_placement.errors import InfeasibleError, ModelError
from vod_placement.plan import AfdcEnergy, GroupFlow, PlacementPlan
from vod_placement.power import (
    dc_power,
    edfas_per_fibre,
    evaluate_plan,
    regenerators_per_wavelength,
    tier_equipment,
)
from vod_placement.scenario import EnergySource, ScenarioConfig, Tier
from vod_placement.topology import CoreTopology

logger = logging.getLogger(__name__)

TIER_ORDER = {Tier.AFDC: 0, Tier.MFDC: 1, Tier.CDC: 2}
FILL_TOLERANCE_GBPS = 1e-9
ENERGY_TOLERANCE_KWH = 1e-12


# ---------------------------------------------------------------------------
# Marginal rates (W per Gbps)
# ---------------------------------------------------------------------------


def dc_rate(tier: Tier, params: PowerParams) -> float:
    """Data-centre power per Gbps with every step amortized over its width."""
    eq = tier_equipment(tier, params)
    compute = params.server_w / params.server_capacity_gbps
    if params.dc_power_mode == "ratio":
        it = compute * params.net_to_compute_ratio
    else:
        it = compute + eq.switch_w / eq.switch_bitrate_gbps + eq.port_w / params.router_port_bitrate_gbps
    return it * eq.pue


def metro_rate(params: PowerParams) -> float:
    per_gbps = (
        params.metro_eth_switch_w / params.switch_bitrate_gbps
        + params.edge_port_w / params.router_port_bitrate_gbps
    )
    return per_gbps * params.pue_n


def core_rate(topo: CoreTopology, src: int, dst: int, params: PowerParams) -> float:
    """Lightpath ends, regenerators and per-fibre amplifiers along the route, per Gbps."""
    if src == dst:
        return 0.0
    path = topo.path(src, dst)
    lightpath_w = 2 * (params.core_router_port_w + params.transponder_w)
    lightpath_w += regenerators_per_wavelength(path.total_km, params) * params.regenerator_w
    fibre_w = sum(edfas_per_fibre(topo.link(i).km, params) * params.edfa_w for i in path.link_ids)
    return (lightpath_w + fibre_w / params.wavelengths_per_fibre) / params.wavelength_capacity_gbps * params.pue_n


@dataclass(frozen=True, slots=True)
class SiteOption:
    """A site that can serve a group, with its marginal brown rate."""

    tier: Tier
    site: int
    rate_w_per_gbps: float

    @property
    def sort_key(self) -> Tuple[float, int, int]:
        return (self.rate_w_per_gbps, TIER_ORDER[self.tier], self.site)


# ---------------------------------------------------------------------------
# Greedy placer
# ---------------------------------------------------------------------------


class GreedyPlacer:
    """Per-hour cheapest-first fill; params must carry the scenario's PUEs."""

    def __init__(self, topo: CoreTopology, demand: DemandProfile, params: PowerParams, scenario: ScenarioConfig):
        self.topo = topo
        self.demand = demand
        self.params = params
        self.scenario = scenario
        self.placement = scenario.placement
        self.hours = demand.gbps.shape[1]
        self._options: Dict[int, List[SiteOption]] = {}

    def _brown(self, tier: Tier) -> float:
        return 0.0 if self.scenario.source(tier) is EnergySource.RENEWABLE else 1.0

    def options(self, g: int) -> List[SiteOption]:
        """Candidate sites of group g, cheapest first; solar AFDCs are handled separately."""
        cached = self._options.get(g)
        if cached is not None:
            return cached
        p, home = self.params, self.topo.group_home[g]
        out: List[SiteOption] = []
        if g in self.placement.afdc_groups and not self.scenario.uses_solar:
            out.append(SiteOption(Tier.AFDC, g, dc_rate(Tier.AFDC, p) * self._brown(Tier.AFDC)))
        if home in self.placement.mfdc_nodes:
            out.append(SiteOption(Tier.MFDC, home, metro_rate(p) + dc_rate(Tier.MFDC, p) * self._brown(Tier.MFDC)))
        for c in self.placement.cdcs:
            rate = metro_rate(p) + core_rate(self.topo, c, home, p) + dc_rate(Tier.CDC, p) * self._brown(Tier.CDC)
            out.append(SiteOption(Tier.CDC, c, rate))
        out.sort(key=lambda o: o.sort_key)
        self._options[g] = out
        return out

    def upstream_rate(self, g: int) -> float:
        return min(o.rate_w_per_gbps for o in self.options(g) if o.tier is not Tier.AFDC)

    def afdc_cap(self, g: int, h: int) -> float:
        p = self.params
        return min(p.afdc_capacity_gbps, p.olt_afdc_capacity_gbps, self.demand.at(g, h))

    def afdc_w(self, load: float) -> float:
        return dc_power(Tier.AFDC, load, self.params)

    # -----------------------------------------------------------------------
    # Solar AFDCs
    # -----------------------------------------------------------------------

    def solar_load(self, g: int, h: int, free_kwh: float) -> float:
        """AFDC load worth serving when free_kwh of solar or stored energy is on hand."""
        cap = self.afdc_cap(g, h)
        step = self.params.server_capacity_gbps
        free_w = 1000.0 * free_kwh
        alternative = self.upstream_rate(g)
        load = 0.0
        while load < cap - FILL_TOLERANCE_GBPS:
            nxt = min(cap, load + step)
            top_up = max(0.0, self.afdc_w(nxt) - free_w) - max(0.0, self.afdc_w(load) - free_w)
            if top_up > alternative * (nxt - load):
                break
            load = nxt
        return load

    def _discharge_plan(self, g: int, generation: List[float], charge: List[float], solar_loads: List[float]) -> List[float]:
        """Energy to deliver from the ESD each hour, highest-demand hours first."""
        esd = self.scenario.esd
        hours = self.hours
        soc = []
        level = self.scenario.initial_soc_kwh
        for h in range(hours):
            level += charge[h] * esd.eta_charge
            soc.append(level)

        floor = [0.0] * hours
        if self.scenario.cyclic_esd:
            floor[-1] = self.scenario.initial_soc_kwh

        planned = [0.0] * hours
        deficit = [
            h for h in range(hours)
            if charge[h] <= ENERGY_TOLERANCE_KWH and solar_loads[h] < self.afdc_cap(g, h) - FILL_TOLERANCE_GBPS
        ]
        for h in sorted(deficit, key=lambda k: (-self.demand.at(g, k), k)):
            served = min(generation[h], self.afdc_w(solar_loads[h]) / 1000.0)
            need = self.afdc_w(self.afdc_cap(g, h)) / 1000.0 - served
            room = min(soc[k] - floor[k] for k in range(h, hours)) * esd.eta_discharge
            x = min(need, esd.discharge_cap * esd.eta_discharge, room)
            if x <= ENERGY_TOLERANCE_KWH:
                continue
            planned[h] = x
            for k in range(h, hours):
                soc[k] -= x / esd.eta_discharge
        return planned

    def energy(self) -> Tuple[Dict[Tuple[int, int], float], Dict[Tuple[int, int], AfdcEnergy]]:
        """AFDC load and energy decisions of every solar AFDC for every hour."""
        loads: Dict[Tuple[int, int], float] = {}
        cells: Dict[Tuple[int, int], AfdcEnergy] = {}
        if not self.scenario.uses_solar:
            return loads, cells

        generation = self.scenario.generation_kwh(self.hours)
        esd = self.scenario.esd
        for g in self.placement.afdcs:
            first = [self.solar_load(g, h, generation[h]) for h in range(self.hours)]
            charge = [0.0] * self.hours
            planned = [0.0] * self.hours
            if esd is not None:
                level = self.scenario.initial_soc_kwh
                for h in range(self.hours):
                    surplus = generation[h] - min(generation[h], self.afdc_w(first[h]) / 1000.0)
                    if surplus > ENERGY_TOLERANCE_KWH:
                        charge[h] = max(0.0, min(surplus, esd.charge_cap, (esd.e_max - level) / esd.eta_charge))
                        level += charge[h] * esd.eta_charge
                planned = self._discharge_plan(g, generation, charge, first)

            soc = self.scenario.initial_soc_kwh if esd is not None else 0.0
            for h in range(self.hours):
                load = self.solar_load(g, h, generation[h] + planned[h]) if planned[h] > 0 else first[h]
                consumption = self.afdc_w(load) / 1000.0
                serve = min(generation[h] - charge[h], consumption)
                discharge = max(0.0, min(planned[h], consumption - serve))
                if esd is not None:
                    soc = soc + charge[h] * esd.eta_charge - discharge / esd.eta_discharge
                loads[(h, g)] = load
                cells[(h, g)] = AfdcEnergy(
                    serve=serve,
                    charge=charge[h],
                    curtail=max(0.0, generation[h] - serve - charge[h]),
                    discharge=discharge,
                    soc=max(0.0, soc),
                )
        return loads, cells

    def _top_up(self, h: int, g: int, cells: Dict[Tuple[int, int], AfdcEnergy], load: float) -> None:
        """Let a grown AFDC load use solar energy that was being curtailed."""
        cell = cells[(h, g)]
        consumption = self.afdc_w(load) / 1000.0
        extra = max(0.0, min(cell.curtail, consumption - cell.serve - cell.discharge))
        cell.serve += extra
        cell.curtail -= extra

    # -----------------------------------------------------------------------
    # Flows
    # -----------------------------------------------------------------------

    def place(self) -> PlacementPlan:
        p = self.params
        solar_loads, cells = self.energy()
        solar_groups = set(self.placement.afdc_groups) if self.scenario.uses_solar else set()
        plan = PlacementPlan(
            hours=self.hours,
            groups=len(self.topo.groups),
            energy=cells,
            initial_soc=self.scenario.initial_soc_kwh if self.scenario.esd is not None else 0.0,
        )
        cdc_cap = p.cdc_capacity_gbps if p.cdc_capacity_gbps is not None else math.inf
        for h in range(self.hours):
            room = {(Tier.MFDC, n): p.mfdc_capacity_gbps for n in self.placement.mfdcs}
            room.update({(Tier.CDC, c): cdc_cap for c in self.placement.cdcs})
            for g in self.topo.groups:
                wanted = self.demand.at(g, h)
                olt_cap = p.olt_group_capacity_gbps
                if wanted > olt_cap + FILL_TOLERANCE_GBPS:
                    raise InfeasibleError(f"hour {h} group {g}: demand {wanted:g} Gbps exceeds OLT capacity {olt_cap:g}")

                flow = GroupFlow(afdc=solar_loads.get((h, g), 0.0))
                remaining = wanted - flow.afdc
                metro_room = p.olt_metro_capacity_gbps
                for option in self.options(g):
                    if remaining <= FILL_TOLERANCE_GBPS:
                        break
                    if option.tier is Tier.AFDC:
                        take = min(remaining, self.afdc_cap(g, h))
                        flow.afdc += take
                    else:
                        key = (option.tier, option.site)
                        take = min(remaining, room[key], metro_room)
                        if take <= 0:
                            continue
                        room[key] -= take
                        metro_room -= take
                        if option.tier is Tier.MFDC:
                            flow.mfdc += take
                        else:
                            flow.cdc[option.site] = flow.cdc.get(option.site, 0.0) + take
                    remaining -= take
                if remaining > FILL_TOLERANCE_GBPS and g in solar_groups:
                    # full OLT links toward the metro: a solar AFDC takes the rest on brown top-up
                    take = min(remaining, self.afdc_cap(g, h) - flow.afdc)
                    if take > FILL_TOLERANCE_GBPS:
                        flow.afdc += take
                        remaining -= take
                        self._top_up(h, g, cells, flow.afdc)
                if remaining > FILL_TOLERANCE_GBPS * max(1.0, wanted):
                    raise InfeasibleError(
                        f"hour {h} group {g}: {remaining:g} Gbps of demand cannot be placed within site capacities"
                    )
                plan.set_flow(h, g, flow)
        return plan


def greedy_place(
    topo: CoreTopology,
    demand: DemandProfile,
    params: PowerParams,
    scenario: ScenarioConfig,
) -> PlacementPlan:
    """
    Cheapest-first placement for every hour, evaluated under the scenario.

    Raises:
        InfeasibleError: some demand cannot be placed within capacities.
        ModelError: demand and topology disagree on groups.
    """
    if demand.gbps.shape[0] != len(topo.groups):
        raise ModelError(f"demand has {demand.gbps.shape[0]} groups but topology has {len(topo.groups)}")
    scenario.placement.validate(topo)

    placer = GreedyPlacer(topo, demand, scenario.effective_params(params), scenario)
    plan = placer.place()
    plan.objective_kwh = evaluate_plan(plan, topo, scenario, params).brown_kwh
    shares = plan.tier_shares()
    logger.info(
        "[GREEDY] Scenario %s: brown %.3f kWh; shares AFDC %.1f%%, MFDC %.1f%%, CDC %.1f%%",
        scenario.name,
        plan.objective_kwh,
        shares[Tier.AFDC],
        shares[Tier.MFDC],
        shares[Tier.CDC],
    )
    return plan
