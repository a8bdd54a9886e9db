"""
milp/model.py

In-memory MILP representation and the builder that turns a topology, demand,
power parameters and scenario into the brown-energy-minimizing model.

The formulation (variable families, constraint families and their units) is
documented in FORMULATION.md; names below follow it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from vod_placement.config import HOURS_PER_DAY, PowerParams
from vod_placement.demand import DemandProfile
from vod_placement.errors import ConfigError, ModelError
from vod_placement.power import (
    CEIL_SLACK,
    dc_power,
    edfas_per_fibre,
    regenerators_per_wavelength,
    tier_equipment,
)
from vod_placement.scenario import EnergySource, ScenarioConfig, Tier
from vod_placement.topology import CoreTopology

logger = logging.getLogger(__name__)

TIGHT_CEILING_SLACK_GBPS = 1e-4
TIER_LETTER = {Tier.CDC: "C", Tier.MFDC: "M", Tier.AFDC: "A"}


# ---------------------------------------------------------------------------
# ENUMS
# ---------------------------------------------------------------------------


class VarKind(Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"


class Sense(Enum):
    LE = "L"
    GE = "G"
    EQ = "E"


# ---------------------------------------------------------------------------
# DATA MODELS
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Variable:
    """A decision variable; upper None means unbounded above."""

    name: str
    kind: VarKind = VarKind.CONTINUOUS
    lower: float = 0.0
    upper: Optional[float] = None

    @property
    def is_integer(self) -> bool:
        return self.kind is not VarKind.CONTINUOUS


@dataclass(frozen=True, slots=True)
class Constraint:
    """
    Linear row `terms sense rhs`.

    A ranged row additionally bounds the activity to [rhs, rhs + range] for
    GE rows and [rhs - range, rhs] for LE rows.
    """

    name: str
    terms: Tuple[Tuple[str, float], ...]
    sense: Sense
    rhs: float = 0.0
    range: Optional[float] = None

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(coef * values.get(name, 0.0) for name, coef in self.terms)

    def interval(self) -> Tuple[float, float]:
        if self.sense is Sense.EQ:
            return self.rhs, self.rhs
        if self.sense is Sense.GE:
            return self.rhs, (self.rhs + abs(self.range)) if self.range is not None else math.inf
        return (self.rhs - abs(self.range)) if self.range is not None else -math.inf, self.rhs

    def violation(self, values: Mapping[str, float]) -> float:
        """Distance of the activity outside the row's interval (0 when satisfied)."""
        low, high = self.interval()
        act = self.activity(values)
        return max(low - act, act - high, 0.0)


@dataclass(frozen=True, slots=True)
class ModelDims:
    rows: int
    columns: int
    integers: int
    nonzeros: int


@dataclass(frozen=True, slots=True)
class ModelLayout:
    """What a solution needs to be turned back into a PlacementPlan."""

    hours: int
    groups: int
    group_home: Tuple[int, ...]
    cdcs: Tuple[int, ...]
    afdc_groups: Tuple[int, ...]
    mfdc_nodes: Tuple[int, ...]
    energy_groups: Tuple[int, ...] = ()
    has_esd: bool = False
    initial_soc: float = 0.0
    generation_kwh: Tuple[float, ...] = ()


class MilpModel:
    """
    Minimization MILP with named variables and rows.

    Variables and constraints keep insertion order so emitted files are
    byte-identical for identical models.
    """

    def __init__(self, name: str = "VODPLACE", layout: ModelLayout | None = None):
        self.name = name
        self.layout = layout
        self.variables: Dict[str, Variable] = {}
        self.constraints: List[Constraint] = []
        self.objective: Dict[str, float] = {}
        self._rows: set[str] = set()

    def __repr__(self) -> str:
        d = self.dims()
        return f"MilpModel({self.name!r}, rows={d.rows}, columns={d.columns}, integers={d.integers})"

    # -----------------------------------------------------------------------
    # Building
    # -----------------------------------------------------------------------

    def add_var(
        self,
        name: str,
        kind: VarKind = VarKind.CONTINUOUS,
        lower: float = 0.0,
        upper: Optional[float] = None,
    ) -> str:
        if name in self.variables or name in self._rows:
            raise ModelError(f"duplicate model name '{name}'")
        if kind is VarKind.BINARY:
            lower, upper = 0.0, 1.0
        if upper is not None and upper < lower:
            raise ModelError(f"variable '{name}' has upper bound {upper:g} below lower bound {lower:g}")
        self.variables[name] = Variable(name, kind, float(lower), None if upper is None else float(upper))
        return name

    def add_constraint(
        self,
        name: str,
        terms: Iterable[Tuple[str, float]],
        sense: Sense,
        rhs: float = 0.0,
        range: Optional[float] = None,
    ) -> Constraint:
        if name in self._rows or name in self.variables:
            raise ModelError(f"duplicate model name '{name}'")
        merged: Dict[str, float] = {}
        for var, coef in terms:
            if var not in self.variables:
                raise ModelError(f"row '{name}' references unknown variable '{var}'")
            merged[var] = merged.get(var, 0.0) + coef
        row = Constraint(
            name,
            tuple((v, c) for v, c in merged.items() if c != 0.0),
            sense,
            float(rhs),
            range,
        )
        self.constraints.append(row)
        self._rows.add(name)
        return row

    def add_objective(self, terms: Iterable[Tuple[str, float]]) -> None:
        for var, coef in terms:
            if var not in self.variables:
                raise ModelError(f"objective references unknown variable '{var}'")
            self.objective[var] = self.objective.get(var, 0.0) + coef

    # -----------------------------------------------------------------------
    # Queries
    # -----------------------------------------------------------------------

    def dims(self) -> ModelDims:
        return ModelDims(
            rows=len(self.constraints),
            columns=len(self.variables),
            integers=sum(1 for v in self.variables.values() if v.is_integer),
            nonzeros=sum(len(c.terms) for c in self.constraints),
        )

    def objective_value(self, values: Mapping[str, float]) -> float:
        return sum(coef * values.get(name, 0.0) for name, coef in self.objective.items())

    def violations(self, values: Mapping[str, float], tolerance: float = 1e-6) -> List[Tuple[str, float]]:
        """(name, amount) of every row or bound broken by more than tolerance·max(1, |rhs|)."""
        out: List[Tuple[str, float]] = []
        for var in self.variables.values():
            x = values.get(var.name, 0.0)
            excess = max(var.lower - x, (x - var.upper) if var.upper is not None else 0.0, 0.0)
            if excess > tolerance * max(1.0, abs(x)):
                out.append((var.name, excess))
        for row in self.constraints:
            amount = row.violation(values)
            if amount > tolerance * max(1.0, abs(row.rhs)):
                out.append((row.name, amount))
        return out

    def relaxed(self) -> "MilpModel":
        """LP relaxation: integrality dropped, binaries keep their [0, 1] bounds."""
        lp = MilpModel(f"{self.name[:4]}RLX", self.layout)
        lp.variables = {name: replace(v, kind=VarKind.CONTINUOUS) for name, v in self.variables.items()}
        lp.constraints = list(self.constraints)
        lp.objective = dict(self.objective)
        lp._rows = set(self._rows)
        return lp


# ---------------------------------------------------------------------------
# Variable naming
# ---------------------------------------------------------------------------


class Names:
    """Column names of every variable family, indexed by dense ids and hour."""

    @staticmethod
    def afdc(g: int, h: int) -> str:
        return f"xa{g}_{h}"

    @staticmethod
    def mfdc(g: int, h: int) -> str:
        return f"xm{g}_{h}"

    @staticmethod
    def cdc(c: int, g: int, h: int) -> str:
        return f"xc{c}_{g}_{h}"

    @staticmethod
    def servers(tier: Tier, site: int, h: int) -> str:
        return f"sv{TIER_LETTER[tier]}{site}_{h}"

    @staticmethod
    def switches(tier: Tier, site: int, h: int) -> str:
        return f"sw{TIER_LETTER[tier]}{site}_{h}"

    @staticmethod
    def ports(tier: Tier, site: int, h: int) -> str:
        return f"pt{TIER_LETTER[tier]}{site}_{h}"

    @staticmethod
    def metro_switches(n: int, h: int) -> str:
        return f"ms{n}_{h}"

    @staticmethod
    def metro_ports(n: int, h: int) -> str:
        return f"mp{n}_{h}"

    @staticmethod
    def olts(g: int, h: int) -> str:
        return f"ol{g}_{h}"

    @staticmethod
    def wavelengths(c: int, n: int, h: int) -> str:
        return f"wl{c}_{n}_{h}"

    @staticmethod
    def fibres(u: int, v: int, h: int) -> str:
        return f"fb{u}_{v}_{h}"

    @staticmethod
    def serve(g: int, h: int) -> str:
        return f"ss{g}_{h}"

    @staticmethod
    def charge(g: int, h: int) -> str:
        return f"sq{g}_{h}"

    @staticmethod
    def curtail(g: int, h: int) -> str:
        return f"su{g}_{h}"

    @staticmethod
    def discharge(g: int, h: int) -> str:
        return f"sr{g}_{h}"

    @staticmethod
    def soc(g: int, h: int) -> str:
        return f"so{g}_{h}"

    @staticmethod
    def charging(g: int, h: int) -> str:
        return f"sz{g}_{h}"


# ---------------------------------------------------------------------------
# Builder
# ---------------------------------------------------------------------------


@dataclass
class _Builder:
    topo: CoreTopology
    demand: DemandProfile
    params: PowerParams
    scenario: ScenarioConfig
    model: MilpModel = field(init=False)
    objective_w: List[Tuple[str, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        placement = self.scenario.placement
        hours = self.demand.gbps.shape[1]
        energy_groups = placement.afdcs if self.scenario.uses_solar else ()
        self.model = MilpModel(
            layout=ModelLayout(
                hours=hours,
                groups=len(self.topo.groups),
                group_home=self.topo.group_home,
                cdcs=placement.cdcs,
                afdc_groups=placement.afdcs,
                mfdc_nodes=placement.mfdcs,
                energy_groups=energy_groups,
                has_esd=self.scenario.esd is not None,
                initial_soc=self.scenario.initial_soc_kwh,
                generation_kwh=tuple(self.scenario.generation_kwh(hours)),
            )
        )

    @property
    def layout(self) -> ModelLayout:
        return self.model.layout

    def build(self) -> MilpModel:
        for h in range(self.layout.hours):
            self._flows(h)
            self._data_centres(h)
            self._metro(h)
            self._access(h)
            self._core(h)
            if self.layout.energy_groups:
                self._solar(h)
        if self.layout.has_esd and self.scenario.cyclic_esd:
            last = self.layout.hours - 1
            for g in self.layout.energy_groups:
                self.model.add_constraint(
                    f"cyc{g}", [(Names.soc(g, last), 1.0)], Sense.GE, self.layout.initial_soc
                )
        self.model.add_objective((name, w / 1000.0) for name, w in self.objective_w)
        return self.model

    # -----------------------------------------------------------------------
    # Demand split and serving capacities
    # -----------------------------------------------------------------------

    def _flows(self, h: int) -> None:
        m, p, layout = self.model, self.params, self.layout
        afdc_cap = min(p.afdc_capacity_gbps, p.olt_afdc_capacity_gbps)
        for g in range(layout.groups):
            terms, upstream = [], []
            if g in layout.afdc_groups:
                terms.append((m.add_var(Names.afdc(g, h), upper=afdc_cap), 1.0))
            if layout.group_home[g] in layout.mfdc_nodes:
                upstream.append((m.add_var(Names.mfdc(g, h)), 1.0))
            for c in layout.cdcs:
                upstream.append((m.add_var(Names.cdc(c, g, h)), 1.0))
            m.add_constraint(f"dm{g}_{h}", terms + upstream, Sense.EQ, self.demand.at(g, h))
            # OLT links toward the metro carry every non-AFDC Gbps of the group
            if upstream:
                m.add_constraint(f"om{g}_{h}", upstream, Sense.LE, p.olt_metro_capacity_gbps)

        for n in layout.mfdc_nodes:
            load = [(Names.mfdc(g, h), 1.0) for g in self.topo.groups_at(n)]
            if load:
                m.add_constraint(f"mc{n}_{h}", load, Sense.LE, p.mfdc_capacity_gbps)
        if p.cdc_capacity_gbps is not None:
            for c in layout.cdcs:
                load = [(Names.cdc(c, g, h), 1.0) for g in range(layout.groups)]
                m.add_constraint(f"cc{c}_{h}", load, Sense.LE, p.cdc_capacity_gbps)

    # -----------------------------------------------------------------------
    # Data-centre equipment
    # -----------------------------------------------------------------------

    def _ceiling(
        self,
        name: str,
        width: float,
        load: Sequence[Tuple[str, float]],
        constant: float = 0.0,
        tight: bool = False,
    ) -> None:
        """
        Couple integer count `name` to a load: width·n ≥ load + constant.

        The right-hand side carries the same slack power.steps() allows, so the
        minimal count here is the count evaluation computes. Tight rows also
        keep width·n below load + constant + width, pinning n to the ceiling.
        """
        slack = width * CEIL_SLACK
        self.model.add_constraint(
            f"k{name}",
            [(name, width)] + [(v, -c) for v, c in load],
            Sense.GE,
            constant - slack,
            range=(width - TIGHT_CEILING_SLACK_GBPS + slack) if tight else None,
        )

    def _site_load(self, tier: Tier, site: int, h: int) -> List[Tuple[str, float]]:
        if tier is Tier.AFDC:
            return [(Names.afdc(site, h), 1.0)]
        if tier is Tier.MFDC:
            return [(Names.mfdc(g, h), 1.0) for g in self.topo.groups_at(site)]
        return [(Names.cdc(site, g, h), 1.0) for g in range(self.layout.groups)]

    def _site_equipment(self, tier: Tier, site: int, h: int, tight: bool) -> List[Tuple[str, float]]:
        """Integer equipment counts of one site; returns (count var, W incl. PUE) pairs."""
        p = self.params
        eq = tier_equipment(tier, p)
        load = self._site_load(tier, site, h)
        if not load:
            return []

        server_upper = {
            Tier.AFDC: p.afdc_server_count,
            Tier.MFDC: p.mfdc_server_count_max,
            Tier.CDC: math.ceil(p.cdc_capacity_gbps / p.server_capacity_gbps) if p.cdc_capacity_gbps else None,
        }[tier]
        if p.dc_power_mode == "ratio":
            units = [(Names.servers(tier, site, h), p.server_capacity_gbps, p.server_w * p.net_to_compute_ratio, server_upper)]
        else:
            units = [
                (Names.servers(tier, site, h), p.server_capacity_gbps, p.server_w, server_upper),
                (Names.switches(tier, site, h), eq.switch_bitrate_gbps, eq.switch_w, None),
                (Names.ports(tier, site, h), p.router_port_bitrate_gbps, eq.port_w, None),
            ]

        costs = []
        for name, width, watts, upper in units:
            self.model.add_var(name, VarKind.INTEGER, upper=upper)
            self._ceiling(name, width, load, tight=tight)
            costs.append((name, watts * eq.pue))
        return costs

    def _data_centres(self, h: int) -> None:
        layout = self.layout
        sites = {
            Tier.CDC: layout.cdcs,
            Tier.MFDC: layout.mfdc_nodes,
            Tier.AFDC: layout.afdc_groups,
        }
        for tier, tier_sites in sites.items():
            source = self.scenario.source(tier)
            if source is EnergySource.RENEWABLE:
                continue
            for site in tier_sites:
                solar = source is EnergySource.SOLAR
                costs = self._site_equipment(tier, site, h, tight=solar)
                self.objective_w.extend(costs)
                if solar:
                    self._solar_use(site, h, costs)

    # -----------------------------------------------------------------------
    # Transport network
    # -----------------------------------------------------------------------

    def _metro(self, h: int) -> None:
        m, p = self.model, self.params
        for n in self.topo.nodes:
            groups = self.topo.groups_at(n)
            if not groups:
                continue
            load = []
            for g in groups:
                if n in self.layout.mfdc_nodes:
                    load.append((Names.mfdc(g, h), 1.0))
                load.extend((Names.cdc(c, g, h), 1.0) for c in self.layout.cdcs)
            for name, width, watts in (
                (Names.metro_switches(n, h), p.switch_bitrate_gbps, p.metro_eth_switch_w),
                (Names.metro_ports(n, h), p.router_port_bitrate_gbps, p.edge_port_w),
            ):
                m.add_var(name, VarKind.INTEGER)
                self._ceiling(name, width, load)
                self.objective_w.append((name, watts * p.pue_n))

    def _access(self, h: int) -> None:
        m, p = self.model, self.params
        for g in range(self.layout.groups):
            name = m.add_var(Names.olts(g, h), VarKind.INTEGER, upper=p.max_olts_per_group)
            self._ceiling(name, p.olt_metro_capacity_gbps, [], constant=self.demand.at(g, h))
            self.objective_w.append((name, p.olt_w * p.pue_n))

    def _core(self, h: int) -> None:
        m, p, topo = self.model, self.params, self.topo
        arcs: Dict[Tuple[int, int], List[str]] = {}
        lightpath_w = 2 * (p.core_router_port_w + p.transponder_w)
        for c in self.layout.cdcs:
            for n in topo.nodes:
                groups = topo.groups_at(n)
                if n == c or not groups:
                    continue
                path = topo.path(c, n)
                name = m.add_var(Names.wavelengths(c, n, h), VarKind.INTEGER)
                self._ceiling(name, p.wavelength_capacity_gbps, [(Names.cdc(c, g, h), 1.0) for g in groups])
                watts = lightpath_w + regenerators_per_wavelength(path.total_km, p) * p.regenerator_w
                self.objective_w.append((name, watts * p.pue_n))
                for arc in path.arcs:
                    arcs.setdefault(arc, []).append(name)

        for (u, v), lightpaths in sorted(arcs.items()):
            link = topo.link(topo.graph.edges[u, v]["link_id"])
            name = m.add_var(Names.fibres(u, v, h), VarKind.INTEGER, upper=link.fibres)
            self._ceiling(name, float(p.wavelengths_per_fibre), [(w, 1.0) for w in lightpaths])
            self.objective_w.append((name, edfas_per_fibre(link.km, p) * p.edfa_w * p.pue_n))

    # -----------------------------------------------------------------------
    # Solar and storage
    # -----------------------------------------------------------------------

    def _solar_use(self, g: int, h: int, costs: Sequence[Tuple[str, float]]) -> None:
        """Solar and ESD energy used by an AFDC cannot exceed its consumption."""
        m = self.model
        generation = self.layout.generation_kwh[h]
        serve = m.add_var(Names.serve(g, h), upper=generation)
        used = [(serve, 1.0)]
        if self.layout.has_esd:
            esd = self.scenario.esd
            max_kwh = dc_power(Tier.AFDC, self.params.afdc_capacity_gbps, self.params) / 1000.0
            used.append((m.add_var(Names.discharge(g, h), upper=min(esd.discharge_cap * esd.eta_discharge, max_kwh)), 1.0))
        m.add_constraint(f"use{g}_{h}", used + [(name, -w / 1000.0) for name, w in costs], Sense.LE, 0.0)
        self.objective_w.extend((name, -1000.0) for name, _ in used)

    def _solar(self, h: int) -> None:
        m, layout = self.model, self.layout
        generation = layout.generation_kwh[h]
        esd = self.scenario.esd
        for g in layout.energy_groups:
            split = [(Names.serve(g, h), 1.0), (m.add_var(Names.curtail(g, h), upper=generation), 1.0)]
            if not layout.has_esd:
                m.add_constraint(f"bal{g}_{h}", split, Sense.EQ, generation)
                continue

            charge_upper = min(generation, esd.charge_cap)
            charge = m.add_var(Names.charge(g, h), upper=charge_upper)
            m.add_constraint(f"bal{g}_{h}", split + [(charge, 1.0)], Sense.EQ, generation)

            # recurrence scaled by eta_discharge: eta_d·soc_h − eta_d·soc_{h−1} − eta_d·eta_c·q + r = 0
            soc = m.add_var(Names.soc(g, h), upper=esd.e_max)
            eta_d = esd.eta_discharge
            terms = [(soc, eta_d), (charge, -eta_d * esd.eta_charge), (Names.discharge(g, h), 1.0)]
            if h == 0:
                rhs = eta_d * layout.initial_soc
            else:
                terms.append((Names.soc(g, h - 1), -eta_d))
                rhs = 0.0
            m.add_constraint(f"soc{g}_{h}", terms, Sense.EQ, rhs)

            if charge_upper > 0:
                z = m.add_var(Names.charging(g, h), VarKind.BINARY)
                discharge_upper = m.variables[Names.discharge(g, h)].upper
                m.add_constraint(f"xq{g}_{h}", [(charge, 1.0), (z, -charge_upper)], Sense.LE, 0.0)
                m.add_constraint(
                    f"xr{g}_{h}", [(Names.discharge(g, h), 1.0), (z, discharge_upper)], Sense.LE, discharge_upper
                )


def build_model(
    topo: CoreTopology,
    demand: DemandProfile,
    params: PowerParams,
    scenario: ScenarioConfig,
) -> MilpModel:
    """
    Build the daily brown-energy minimization model.

    The objective (kWh) counts traffic-attributable networking power and the
    brown share of data-centre power; the optical-switch idle floor is left out.

    Raises:
        ModelError: demand and topology disagree on groups, the horizon is
            outside 1..24 hours, or the placement names absent sites.
    """
    groups, hours = demand.gbps.shape
    if groups != len(topo.groups):
        raise ModelError(f"demand has {groups} groups but topology has {len(topo.groups)}")
    if not 1 <= hours <= HOURS_PER_DAY:
        raise ModelError(f"horizon must be 1..{HOURS_PER_DAY} hours, got {hours}")
    try:
        scenario.placement.validate(topo)
    except ConfigError as e:
        raise ModelError(f"scenario placement does not fit the topology: {e}") from e

    effective = scenario.effective_params(params)
    model = _Builder(topo, demand, effective, scenario).build()
    dims = model.dims()
    logger.info(
        "[MODEL] Built '%s' for scenario %s: %d rows, %d columns (%d integer), %d nonzeros",
        model.name,
        scenario.name,
        dims.rows,
        dims.columns,
        dims.integers,
        dims.nonzeros,
    )
    return model
