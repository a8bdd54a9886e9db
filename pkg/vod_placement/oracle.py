"""
oracle.py

Exhaustive optimizer for tiny instances and plan comparison.

brute_force() enumerates every demand split on a Gbps lattice and every ESD
action on a kWh lattice, hour by hour, keeping the cheapest path to each
state of charge. It never touches the MILP code, so it is the reference the
solver path is checked against.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from vod_placement.config import PowerParams
from vod_placement.demand import DemandProfile
from vod_placement.errors import BudgetExceededError, CapacityError, ConfigError, InfeasibleError, ModelError
from vod_placement.plan import AfdcEnergy, GroupFlow, PlacementPlan
from vod_placement.power import (
    CAPACITY_TOLERANCE_GBPS,
    PowerReport,
    access_power,
    core_usage,
    dc_power,
    evaluate_plan,
    metro_power,
)
from vod_placement.scenario import EnergySource, ScenarioConfig, Tier
from vod_placement.topology import CoreTopology

logger = logging.getLogger(__name__)

DEFAULT_GRANULARITY_GBPS = 0.2
DEFAULT_ESD_STEP_KWH = 1.0
STATE_BUDGET = 10**7
MAX_GROUPS = 2
MAX_HOURS = 4
LATTICE_TOLERANCE = 1e-9
COST_DIGITS = 9


# ---------------------------------------------------------------------------
# Lattices
# ---------------------------------------------------------------------------


def compositions(units: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Every way to write units as an ordered sum of parts non-negative integers, lexicographic."""
    if parts == 1:
        yield (units,)
        return
    for first in range(units + 1):
        for rest in compositions(units - first, parts - 1):
            yield (first,) + rest


def lattice_units(value: float, step: float, what: str) -> int:
    units = value / step
    nearest = round(units)
    if abs(units - nearest) > LATTICE_TOLERANCE * max(1.0, units):
        raise ConfigError(f"{what} {value:g} is not a multiple of the {step:g} lattice step")
    return int(nearest)


@dataclass(frozen=True, slots=True)
class _Split:
    """One joint demand split of an hour, with its brown cost before solar and ESD."""

    vector: Tuple[int, ...]
    flows: Tuple[GroupFlow, ...]
    base_w: float
    consumption_kwh: Tuple[float, ...]


@dataclass(slots=True)
class _Path:
    cost_wh: float
    vector: Tuple[int, ...]
    history: Tuple[Tuple[_Split, Tuple[Tuple[float, float, float, float, float], ...]], ...]


class BruteForce:
    """Dynamic program over hours; the state is the soc of every ESD."""

    def __init__(
        self,
        topo: CoreTopology,
        demand: DemandProfile,
        params: PowerParams,
        scenario: ScenarioConfig,
        granularity_gbps: float,
        esd_step_kwh: float,
        budget: int,
    ):
        self.topo = topo
        self.demand = demand
        self.params = scenario.effective_params(params)
        self.scenario = scenario
        self.placement = scenario.placement
        self.granularity = granularity_gbps
        self.esd_step = esd_step_kwh
        self.budget = budget
        self.groups, self.hours = demand.gbps.shape
        self.energy_groups: Tuple[int, ...] = self.placement.afdcs if scenario.uses_solar else ()
        self.generation = scenario.generation_kwh(self.hours)

    # -----------------------------------------------------------------------
    # Enumeration sizes
    # -----------------------------------------------------------------------

    def sources(self, g: int) -> List[Tuple[Tier, int]]:
        out: List[Tuple[Tier, int]] = []
        if g in self.placement.afdc_groups:
            out.append((Tier.AFDC, g))
        home = self.topo.group_home[g]
        if home in self.placement.mfdc_nodes:
            out.append((Tier.MFDC, home))
        out.extend((Tier.CDC, c) for c in self.placement.cdcs)
        return out

    def split_count(self, h: int) -> int:
        count = 1
        for g in range(self.groups):
            units = lattice_units(self.demand.at(g, h), self.granularity, f"demand of group {g} hour {h}")
            count *= math.comb(units + len(self.sources(g)) - 1, len(self.sources(g)) - 1)
        return count

    def esd_actions(self, h: int) -> List[Tuple[float, float]]:
        """(charge, discharge) pairs on the kWh lattice; never both non-zero."""
        esd = self.scenario.esd
        if esd is None:
            return [(0.0, 0.0)]
        step = self.esd_step
        max_q = math.floor(min(self.generation[h], esd.charge_cap) / step + LATTICE_TOLERANCE)
        afdc_kwh = dc_power(Tier.AFDC, self.params.afdc_capacity_gbps, self.params) / 1000.0
        max_r = math.floor(min(esd.discharge_cap * esd.eta_discharge, afdc_kwh) / step + LATTICE_TOLERANCE)
        return [(q * step, 0.0) for q in range(max_q + 1)] + [(0.0, r * step) for r in range(1, max_r + 1)]

    def estimate(self) -> int:
        """Upper bound on the states the dynamic program visits."""
        total, states = 0, 1
        for h in range(self.hours):
            actions = len(self.esd_actions(h)) ** len(self.energy_groups) if self.scenario.esd else 1
            total += states * self.split_count(h) * actions
            states = min(states * actions, self.budget + 1)
        return total

    # -----------------------------------------------------------------------
    # Costs
    # -----------------------------------------------------------------------

    def splits(self, h: int) -> List[_Split]:
        """Feasible joint splits of hour h in lexicographic order."""
        per_group = []
        for g in range(self.groups):
            units = lattice_units(self.demand.at(g, h), self.granularity, f"demand of group {g} hour {h}")
            per_group.append([(g, parts) for parts in compositions(units, len(self.sources(g)))])

        out: List[_Split] = []
        for combo in itertools.product(*per_group):
            flows = []
            vector: List[int] = []
            for g, parts in combo:
                flow = GroupFlow()
                for (tier, site), n in zip(self.sources(g), parts):
                    gbps = n * self.granularity
                    if tier is Tier.AFDC:
                        flow.afdc = gbps
                    elif tier is Tier.MFDC:
                        flow.mfdc = gbps
                    elif n:
                        flow.cdc[site] = gbps
                flows.append(flow)
                vector.extend(parts)
            costed = self._cost(h, flows)
            if costed is not None:
                base_w, consumption = costed
                out.append(_Split(tuple(vector), tuple(flows), base_w, consumption))
        return out

    def _cost(self, h: int, flows: Sequence[GroupFlow]) -> Optional[Tuple[float, Tuple[float, ...]]]:
        p = self.params
        plan = PlacementPlan(hours=self.hours, groups=self.groups)
        for g, flow in enumerate(flows):
            if flow.afdc > p.olt_afdc_capacity_gbps + CAPACITY_TOLERANCE_GBPS:
                return None
            if flow.upstream > p.olt_metro_capacity_gbps + CAPACITY_TOLERANCE_GBPS:
                return None
            plan.set_flow(h, g, flow)
        try:
            base_w = core_usage(self.topo, plan.core_traffic(self.topo, h), p).traffic_w
            base_w += metro_power(plan.metro_loads(self.topo, h), p)
            base_w += access_power(plan.olt_loads(h), p)
            consumption: Dict[int, float] = {}
            for tier, sites in plan.site_loads(self.topo, h).items():
                source = self.scenario.source(tier)
                for site, load in sites.items():
                    w = dc_power(tier, load, p)
                    if source is EnergySource.SOLAR:
                        consumption[site] = w / 1000.0
                    elif source is EnergySource.BROWN:
                        base_w += w
        except CapacityError:
            return None
        return base_w, tuple(consumption.get(g, 0.0) for g in self.energy_groups)

    # -----------------------------------------------------------------------
    # Dynamic program
    # -----------------------------------------------------------------------

    def solve(self) -> PlacementPlan:
        esd = self.scenario.esd
        initial = self.scenario.initial_soc_kwh if esd is not None else 0.0
        start = tuple(initial for _ in self.energy_groups)
        paths: Dict[Tuple[float, ...], _Path] = {start: _Path(0.0, (), ())}

        for h in range(self.hours):
            splits = self.splits(h)
            if not splits:
                raise InfeasibleError(f"hour {h}: no demand split fits the capacities")
            actions = self.esd_actions(h)
            joint = list(itertools.product(actions, repeat=len(self.energy_groups)))
            generation = self.generation[h]
            following: Dict[Tuple[float, ...], _Path] = {}

            for state, path in paths.items():
                for split in splits:
                    for action in joint:
                        cost_w = split.base_w
                        cells = []
                        socs = []
                        ok = True
                        for i, (q, r) in enumerate(action):
                            c = split.consumption_kwh[i]
                            if r > c + LATTICE_TOLERANCE:
                                ok = False
                                break
                            soc = state[i]
                            if esd is not None:
                                soc = soc + q * esd.eta_charge - r / esd.eta_discharge
                                if soc < -LATTICE_TOLERANCE or soc > esd.e_max + LATTICE_TOLERANCE:
                                    ok = False
                                    break
                                soc = min(max(soc, 0.0), esd.e_max)
                            serve = max(0.0, min(generation - q, c - r))
                            cost_w += 1000.0 * max(0.0, c - serve - r)
                            cells.append((serve, q, max(0.0, generation - q - serve), r, soc))
                            socs.append(soc)
                        if not ok:
                            continue
                        key = tuple(round(s, COST_DIGITS) for s in socs)
                        vector = path.vector + split.vector + tuple(
                            round(x / self.esd_step) for pair in action for x in pair
                        )
                        total = path.cost_wh + cost_w
                        best = following.get(key)
                        if best is None or (round(total, COST_DIGITS), vector) < (round(best.cost_wh, COST_DIGITS), best.vector):
                            following[key] = _Path(total, vector, path.history + ((split, tuple(cells)),))
            if not following:
                raise InfeasibleError(f"hour {h}: no ESD action keeps the state of charge within bounds")
            paths = following

        finals = [
            p
            for key, p in paths.items()
            if esd is None or not self.scenario.cyclic_esd or all(s >= initial - LATTICE_TOLERANCE for s in key)
        ]
        if not finals:
            raise InfeasibleError("no enumerated plan meets the cyclic state-of-charge rule")
        best = min(finals, key=lambda p: (round(p.cost_wh, COST_DIGITS), p.vector))
        return self._plan(best, initial)

    def _plan(self, best: _Path, initial: float) -> PlacementPlan:
        plan = PlacementPlan(hours=self.hours, groups=self.groups, initial_soc=initial)
        for h, (split, cells) in enumerate(best.history):
            for g, flow in enumerate(split.flows):
                plan.set_flow(h, g, flow)
            for g, (serve, q, curtail, r, soc) in zip(self.energy_groups, cells):
                plan.energy[(h, g)] = AfdcEnergy(serve=serve, charge=q, curtail=curtail, discharge=r, soc=soc)
        plan.objective_kwh = best.cost_wh / 1000.0
        return plan


def brute_force(
    topo: CoreTopology,
    demand: DemandProfile,
    params: PowerParams,
    scenario: ScenarioConfig,
    granularity_gbps: float = DEFAULT_GRANULARITY_GBPS,
    esd_step_kwh: float = DEFAULT_ESD_STEP_KWH,
    budget: int = STATE_BUDGET,
) -> PlacementPlan:
    """
    Exact minimum brown energy over the split and ESD lattices.

    Ties are broken by the lexicographically smallest plan vector (lattice
    units per group and source, then ESD actions, hour by hour).

    Raises:
        BudgetExceededError: more than MAX_GROUPS groups, MAX_HOURS hours,
            or an enumeration larger than budget states.
        ConfigError: demand not on the lattice.
        InfeasibleError: no lattice point is feasible.
    """
    groups, hours = demand.gbps.shape
    if groups != len(topo.groups):
        raise ModelError(f"demand has {groups} groups but topology has {len(topo.groups)}")
    if groups > MAX_GROUPS or hours > MAX_HOURS:
        raise BudgetExceededError(
            f"brute force handles at most {MAX_GROUPS} groups × {MAX_HOURS} hours, got {groups} × {hours}"
        )
    if granularity_gbps <= 0 or esd_step_kwh <= 0:
        raise ConfigError("lattice steps must be positive")
    scenario.placement.validate(topo)

    search = BruteForce(topo, demand, params, scenario, granularity_gbps, esd_step_kwh, budget)
    estimate = search.estimate()
    if estimate > budget:
        raise BudgetExceededError(f"enumeration needs about {estimate:,} states, budget is {budget:,}")
    logger.info("[ORACLE] Enumerating up to %d states (%d groups × %d hours)", estimate, groups, hours)
    plan = search.solve()
    logger.info("[ORACLE] Minimum brown energy %.6f kWh", plan.objective_kwh)
    return plan


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Savings:
    """
    Brown-energy savings of a candidate over a base, in percent.

    A percentage is None when the base's brown energy is zero.
    """

    base_transport_kwh: float
    candidate_transport_kwh: float
    base_total_kwh: float
    candidate_total_kwh: float

    @staticmethod
    def _percent(base: float, candidate: float) -> Optional[float]:
        if base <= 0:
            return None
        return 100.0 * (base - candidate) / base

    @property
    def transport_pct(self) -> Optional[float]:
        return self._percent(self.base_transport_kwh, self.candidate_transport_kwh)

    @property
    def total_pct(self) -> Optional[float]:
        return self._percent(self.base_total_kwh, self.candidate_total_kwh)

    def describe(self) -> str:
        def fmt(value: Optional[float]) -> str:
            return "undefined (base brown energy is 0)" if value is None else f"{value:.2f}%"

        return f"transport savings {fmt(self.transport_pct)}, total savings {fmt(self.total_pct)}"


def compare_reports(base: PowerReport, candidate: PowerReport) -> Savings:
    return Savings(
        base_transport_kwh=base.transport_kwh,
        candidate_transport_kwh=candidate.transport_kwh,
        base_total_kwh=base.brown_kwh,
        candidate_total_kwh=candidate.brown_kwh,
    )


def compare_plans(
    base: PlacementPlan,
    candidate: PlacementPlan,
    topo: CoreTopology,
    params: PowerParams,
    base_scenario: ScenarioConfig,
    candidate_scenario: ScenarioConfig | None = None,
) -> Savings:
    """Savings of candidate over base, each evaluated under its own scenario."""
    candidate_scenario = candidate_scenario or base_scenario
    return compare_reports(
        evaluate_plan(base, topo, base_scenario, params),
        evaluate_plan(candidate, topo, candidate_scenario, params),
    )
