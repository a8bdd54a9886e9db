"""
scenario.py

Scenario definitions (PUEs, per-tier energy sourcing, solar, ESD, placement)
and the run-config file that ties topology, demand and parameters together.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from vod_placement.config import (
    EsdParams,
    PowerParams,
    SolarArray,
    load_power_params,
    model_overrides,
    parse_key_values,
    validate_model,
)
from vod_placement.demand import DemandProfile, load_demand, synth_demand
from vod_placement.energy import SolarProfile, default_solar_profile, load_solar_profile, solar_kwh
from vod_placement.errors import ConfigError
from vod_placement.topology import (
    CoreTopology,
    SitePlacement,
    default_placement,
    load_placement,
    load_topology,
)

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent / "data"
DEFAULT_TOPOLOGY = DATA_DIR / "nsfnet.topo"


# ---------------------------------------------------------------------------
# ENUMS
# ---------------------------------------------------------------------------


class Tier(Enum):
    CDC = "cdc"
    MFDC = "mfdc"
    AFDC = "afdc"


class EnergySource(Enum):
    BROWN = "brown"
    RENEWABLE = "renewable"
    SOLAR = "solar"


class Preset(Enum):
    BROWN = "brown"
    RENEWABLE = "renewable"
    RENEWABLE_SOLAR = "renewable_solar"
    RENEWABLE_SOLAR_ESD = "renewable_solar_esd"
    CUSTOM = "custom"


# ---------------------------------------------------------------------------
# ScenarioConfig
# ---------------------------------------------------------------------------


class ScenarioConfig(BaseModel):
    """
    One scenario: PUE per tier, where each tier's energy comes from, and the
    fog sites that exist.

    Attributes:
        solar_array: array fitted to every AFDC when afdc_source is SOLAR.
        esd: storage fitted to every AFDC, or None.
        cyclic_esd: require soc at the end of the day ≥ soc at the start.
        initial_soc_kwh: state of charge at hour 0.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, extra="forbid")

    name: str = "custom"
    pue_c: float = Field(default=1.1, ge=1.0, le=3.0)
    pue_mf: float = Field(default=1.1, ge=1.0, le=3.0)
    pue_af: float = Field(default=1.1, ge=1.0, le=3.0)
    cdc_source: EnergySource = EnergySource.BROWN
    mfdc_source: EnergySource = EnergySource.BROWN
    afdc_source: EnergySource = EnergySource.BROWN
    solar_array: Optional[SolarArray] = None
    solar_profile: SolarProfile = Field(default_factory=default_solar_profile)
    esd: Optional[EsdParams] = None
    placement: SitePlacement = Field(default_factory=SitePlacement)
    cyclic_esd: bool = True
    initial_soc_kwh: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def validate_sources(self):
        if self.cdc_source is EnergySource.SOLAR or self.mfdc_source is EnergySource.SOLAR:
            raise ValueError("only AFDCs can be solar-powered")
        has_afdc = bool(self.placement.afdc_groups)
        if self.afdc_source is EnergySource.SOLAR:
            if not has_afdc:
                raise ValueError("solar AFDC sourcing needs at least one AFDC in the placement")
            if self.solar_array is None:
                raise ValueError("solar AFDC sourcing needs a solar array")
        if self.esd is not None:
            if self.afdc_source is not EnergySource.SOLAR:
                raise ValueError("an ESD is only valid with solar-powered AFDCs")
            if self.initial_soc_kwh > self.esd.e_max:
                raise ValueError("initial_soc_kwh exceeds the ESD capacity")
        elif self.initial_soc_kwh > 0:
            raise ValueError("initial_soc_kwh set without an ESD")
        return self

    def source(self, tier: Tier) -> EnergySource:
        return {Tier.CDC: self.cdc_source, Tier.MFDC: self.mfdc_source, Tier.AFDC: self.afdc_source}[tier]

    def is_brown(self, tier: Tier) -> bool:
        """True when the tier's DC power counts as brown before any solar offset."""
        return self.source(tier) is not EnergySource.RENEWABLE

    @property
    def uses_solar(self) -> bool:
        return self.afdc_source is EnergySource.SOLAR

    def effective_params(self, params: PowerParams) -> PowerParams:
        """params with this scenario's PUEs applied."""
        return params.model_copy(update={"pue_c": self.pue_c, "pue_mf": self.pue_mf, "pue_af": self.pue_af})

    def generation_kwh(self, hours: int) -> List[float]:
        """Solar energy available to each AFDC per hour."""
        if not self.uses_solar:
            return [0.0] * hours
        return solar_kwh(self.solar_profile, self.solar_array, hours)

    def with_updates(self, **changes) -> "ScenarioConfig":
        """Validated copy with fields replaced."""
        data = {name: getattr(self, name) for name in type(self).model_fields}
        data.update(changes)
        return ScenarioConfig(**data)


def preset_scenario(
    preset: Preset,
    placement: SitePlacement,
    pue_c: float = 1.1,
    pue_mf: float = 1.1,
    pue_af: float = 1.1,
    solar_array: SolarArray | None = None,
    esd: EsdParams | None = None,
) -> ScenarioConfig:
    """Build the scenario a preset names; CUSTOM is the all-brown starting point."""
    kwargs = dict(name=preset.value, pue_c=pue_c, pue_mf=pue_mf, pue_af=pue_af, placement=placement)
    if preset in (Preset.RENEWABLE, Preset.RENEWABLE_SOLAR, Preset.RENEWABLE_SOLAR_ESD):
        kwargs.update(cdc_source=EnergySource.RENEWABLE, mfdc_source=EnergySource.RENEWABLE)
    if preset in (Preset.RENEWABLE_SOLAR, Preset.RENEWABLE_SOLAR_ESD):
        kwargs.update(afdc_source=EnergySource.SOLAR, solar_array=solar_array or SolarArray())
    if preset is Preset.RENEWABLE_SOLAR_ESD:
        kwargs.update(esd=esd or EsdParams())
    return ScenarioConfig(**kwargs)


def brown_cdc_baseline(placement: SitePlacement, pue_c: float = 1.1) -> ScenarioConfig:
    """Everything streamed from brown-powered CDCs; no fog sites."""
    return ScenarioConfig(name="brown_cdc", pue_c=pue_c, placement=placement.without_fog())


# ---------------------------------------------------------------------------
# Run config files
# ---------------------------------------------------------------------------

RUN_KEYS = {
    "name",
    "topology",
    "placement",
    "demand",
    "demand_peak_gbps",
    "demand_shape",
    "demand_ratio",
    "solar_profile",
    "scenario",
    "pue_c",
    "pue_mf",
    "pue_af",
    "cdc_source",
    "mfdc_source",
    "afdc_source",
    "solar_area_m2",
    "solar_efficiency",
    "esd",
    "cyclic_esd",
    "initial_soc_kwh",
    "params",
}
ESD_PREFIX = "esd_"


@dataclass(frozen=True)
class RunSetup:
    """Everything a CLI command needs, resolved from one config file."""

    name: str
    topo: CoreTopology
    demand: DemandProfile
    params: PowerParams
    scenario: ScenarioConfig
    source: Path


def _flag(value: str, key: str, source: str) -> bool:
    lowered = value.strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise ConfigError(f"{source}: '{key}' must be on/off, got {value!r}")


def _enum(enum_cls, value: str, key: str, source: str):
    try:
        return enum_cls(value.strip().lower())
    except ValueError:
        allowed = sorted(m.value for m in enum_cls)
        raise ConfigError(f"{source}: '{key}' must be one of {allowed}, got {value!r}") from None


def _read(path: Path, key: str, source: str) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"{source}: cannot read {key} file {path}: {e.strerror}") from None


def load_run_config(path: str | Path) -> RunSetup:
    """
    Resolve a run-config file into topology, demand, parameters and scenario.

    Relative file paths are taken relative to the config file. Keys are the
    RUN_KEYS above, `esd_<field>` for EsdParams fields, and any PowerParams
    field as a direct override.

    Raises:
        ConfigError: unknown key, unreadable file or invalid value.
    """
    path = Path(path)
    source = str(path)
    entries = parse_key_values(_read(path, "config", source), source)
    base_dir = path.parent

    for key, entry in entries.items():
        esd_field = key.startswith(ESD_PREFIX) and key[len(ESD_PREFIX):] in EsdParams.model_fields
        if key not in RUN_KEYS and key not in PowerParams.model_fields and not esd_field:
            raise ConfigError(f"{source}:{entry.line}: unknown key '{key}'")

    def value(key: str, default: str | None = None) -> str | None:
        entry = entries.get(key)
        return entry.value if entry is not None else default

    def file_for(key: str) -> Path | None:
        raw = value(key)
        if raw is None:
            return None
        p = Path(raw)
        return p if p.is_absolute() else base_dir / p

    topo_path = file_for("topology") or DEFAULT_TOPOLOGY
    topo = load_topology(_read(topo_path, "topology", source))

    placement_path = file_for("placement")
    placement = (
        load_placement(_read(placement_path, "placement", source), topo)
        if placement_path
        else default_placement(topo)
    )

    params = PowerParams()
    params_path = file_for("params")
    if params_path:
        params = load_power_params(_read(params_path, "params", source), str(params_path))
    overrides = model_overrides(PowerParams, entries)
    if overrides:
        params = validate_model(PowerParams, overrides, source, base=params)

    demand_path = file_for("demand")
    if demand_path:
        demand = load_demand(_read(demand_path, "demand", source), topo)
    elif value("demand_peak_gbps") is not None:
        try:
            peak = float(value("demand_peak_gbps"))
            ratio = float(value("demand_ratio", "4"))
        except ValueError:
            raise ConfigError(f"{source}: demand_peak_gbps and demand_ratio must be numbers") from None
        demand = synth_demand(peak, value("demand_shape", "evening_peak").strip().lower(), topo, ratio=ratio)
    else:
        raise ConfigError(f"{source}: set either 'demand' or 'demand_peak_gbps'")

    solar_path = file_for("solar_profile")
    profile = load_solar_profile(_read(solar_path, "solar profile", source)) if solar_path else default_solar_profile()

    preset = _enum(Preset, value("scenario", "brown"), "scenario", source)
    try:
        pue = {k: float(value(k, "1.1")) for k in ("pue_c", "pue_mf", "pue_af")}
    except ValueError:
        raise ConfigError(f"{source}: PUE values must be numbers") from None
    array = validate_model(
        SolarArray,
        {
            k: v
            for k, v in (("area_m2", value("solar_area_m2")), ("efficiency", value("solar_efficiency")))
            if v is not None
        },
        source,
    )
    esd = validate_model(EsdParams, model_overrides(EsdParams, entries, prefix=ESD_PREFIX), source)

    try:
        scenario = preset_scenario(preset, placement, solar_array=array, esd=esd, **pue)
        changes = {"name": value("name", preset.value), "solar_profile": profile}
        for key in ("cdc_source", "mfdc_source", "afdc_source"):
            if value(key) is not None:
                changes[key] = _enum(EnergySource, value(key), key, source)
        if changes.get("afdc_source") is EnergySource.SOLAR and scenario.solar_array is None:
            changes["solar_array"] = array
        if value("esd") is not None:
            changes["esd"] = esd if _flag(value("esd"), "esd", source) else None
        if value("cyclic_esd") is not None:
            changes["cyclic_esd"] = _flag(value("cyclic_esd"), "cyclic_esd", source)
        if value("initial_soc_kwh") is not None:
            changes["initial_soc_kwh"] = float(value("initial_soc_kwh"))
        scenario = scenario.with_updates(**changes)
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{source}: {e}") from e

    demand.check_against(topo)
    logger.info("[CONFIG] Loaded run config '%s' (scenario %s)", source, scenario.name)
    return RunSetup(
        name=scenario.name,
        topo=topo,
        demand=demand,
        params=params,
        scenario=scenario,
        source=path,
    )
