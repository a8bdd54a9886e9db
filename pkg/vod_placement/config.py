"""
config.py

Configuration models used throughout the placement toolkit.

Defines Pydantic models that carry validated power, solar and storage
parameters, the environment-driven runtime Settings, and the flat
`key = value` text format shared by parameter and run-config files.
"""

from __future__ import annotations

import logging
import os
from typing import Dict, NamedTuple, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from vod_placement.errors import ConfigError

load_dotenv()
logger = logging.getLogger(__name__)

VALID_DIALECTS = {"auto", "cbc", "highs"}
VALID_DC_MODES = {"detailed", "ratio"}
HOURS_PER_DAY = 24


# ---------------------------------------------------------------------------
# Power model parameters
# ---------------------------------------------------------------------------


class PowerParams(BaseModel):
    """
    Equipment powers, capacities and PUE multipliers for every tier.

    The first group mirrors the published parameter table; the second group
    holds core-network and server values that have to be assumed. All of them
    can be overridden from a parameter file.

    Attributes:
        metro_edge_port_w: metro edge-router port power; None falls back to
            fog_router_port_w.
        wavelengths_per_fibre: wavelength channels carried by one fibre.
        cdc_capacity_gbps: optional serving cap per CDC; None is unbounded.
        max_olts_per_group: optional OLT count cap per access group.
        dc_power_mode: "detailed" counts switches and router ports,
            "ratio" scales compute power by net_to_compute_ratio.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    cloud_router_port_w: float = Field(default=30.0, ge=0)
    fog_router_port_w: float = Field(default=13.0, ge=0)
    cloud_metro_switch_w: float = Field(default=470.0, ge=0)
    access_fog_switch_w: float = Field(default=210.0, ge=0)
    metro_eth_switch_w: float = Field(default=470.0, ge=0)
    olt_w: float = Field(default=904.0, ge=0)
    switch_bitrate_gbps: float = Field(default=600.0, gt=0)
    access_switch_bitrate_gbps: float = Field(default=240.0, gt=0)
    server_capacity_gbps: float = Field(default=1.8, gt=0)
    pue_c: float = Field(default=1.1, ge=1.0, le=3.0)
    pue_mf: float = Field(default=1.1, ge=1.0, le=3.0)
    pue_af: float = Field(default=1.1, ge=1.0, le=3.0)
    net_to_compute_ratio: float = Field(default=1.3, ge=1.0)
    pue_n: float = Field(default=1.5, ge=1.0, le=3.0)
    olt_afdc_capacity_gbps: float = Field(default=160.0, gt=0)
    olt_metro_capacity_gbps: float = Field(default=160.0, gt=0)
    afdc_server_count: int = Field(default=88, gt=0)
    mfdc_server_count_max: int = Field(default=5000, gt=0)

    wavelength_capacity_gbps: float = Field(default=40.0, gt=0)
    core_router_port_w: float = Field(default=1000.0, ge=0)
    transponder_w: float = Field(default=73.0, ge=0)
    edfa_w: float = Field(default=8.0, ge=0)
    regenerator_w: float = Field(default=334.0, ge=0)
    optical_switch_w: float = Field(default=85.0, ge=0)
    edfa_span_km: float = Field(default=80.0, gt=0)
    regen_reach_km: float = Field(default=2500.0, gt=0)
    server_w: float = Field(default=300.0, ge=0)
    router_port_bitrate_gbps: float = Field(default=40.0, gt=0)

    metro_edge_port_w: Optional[float] = Field(default=None, ge=0)
    wavelengths_per_fibre: int = Field(default=16, gt=0)
    cdc_capacity_gbps: Optional[float] = Field(default=None, gt=0)
    max_olts_per_group: Optional[int] = Field(default=None, gt=0)
    dc_power_mode: str = "detailed"

    @field_validator("dc_power_mode", mode="before")
    @classmethod
    def validate_dc_power_mode(cls, v):
        mode = (v or "detailed").strip().lower()
        if mode not in VALID_DC_MODES:
            raise ValueError(f"dc_power_mode must be one of {sorted(VALID_DC_MODES)}")
        return mode

    @property
    def afdc_capacity_gbps(self) -> float:
        return self.afdc_server_count * self.server_capacity_gbps

    @property
    def mfdc_capacity_gbps(self) -> float:
        return self.mfdc_server_count_max * self.server_capacity_gbps

    @property
    def edge_port_w(self) -> float:
        if self.metro_edge_port_w is None:
            return self.fog_router_port_w
        return self.metro_edge_port_w

    @property
    def olt_group_capacity_gbps(self) -> float:
        """Gbps the OLTs of one group can deliver over both directions."""
        total = self.olt_afdc_capacity_gbps + self.olt_metro_capacity_gbps
        if self.max_olts_per_group is None:
            return total
        return min(total, self.max_olts_per_group * self.olt_metro_capacity_gbps)


# ---------------------------------------------------------------------------
# Solar array and energy storage
# ---------------------------------------------------------------------------


class SolarArray(BaseModel):
    """Photovoltaic array attached to one AFDC."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    area_m2: float = Field(default=250.0, ge=0)
    efficiency: float = Field(default=0.17, gt=0, le=1)


class EsdParams(BaseModel):
    """
    Battery model of one AFDC energy storage device.

    Charging stores input·eta_charge; delivering d kWh draws d/eta_discharge.
    The per-hour rate caps default to e_max, which leaves them inactive.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    e_max: float = Field(default=100.0, gt=0)
    eta_charge: float = Field(default=0.7225, gt=0, le=1)
    eta_discharge: float = Field(default=0.9025, gt=0, le=1)
    max_charge_kwh_per_hour: Optional[float] = Field(default=None, ge=0)
    max_discharge_kwh_per_hour: Optional[float] = Field(default=None, ge=0)

    @property
    def charge_cap(self) -> float:
        if self.max_charge_kwh_per_hour is None:
            return self.e_max
        return self.max_charge_kwh_per_hour

    @property
    def discharge_cap(self) -> float:
        if self.max_discharge_kwh_per_hour is None:
            return self.e_max
        return self.max_discharge_kwh_per_hour


# ---------------------------------------------------------------------------
# Runtime settings
# ---------------------------------------------------------------------------


class Settings(BaseModel):
    """Typed configuration loaded from environment variables."""

    model_config = ConfigDict(validate_assignment=True, validate_default=True)

    solver_cmd: str = Field(default_factory=lambda: os.getenv("VOD_SOLVER_CMD", ""))
    solver_dialect: str = Field(default_factory=lambda: os.getenv("VOD_SOLVER_DIALECT", "auto").lower())
    time_limit_s: float = Field(default_factory=lambda: float(os.getenv("VOD_TIME_LIMIT", "300")), gt=0)
    output_dir: str = Field(default_factory=lambda: os.getenv("VOD_OUTPUT_DIR", "results"))
    sweep_workers: int = Field(default_factory=lambda: int(os.getenv("VOD_SWEEP_WORKERS", "4")), ge=1)
    solution_cache_ttl_minutes: int = Field(
        default_factory=lambda: int(os.getenv("VOD_SOLUTION_CACHE_TTL", "0")), ge=0
    )
    cache_dir: str = Field(default_factory=lambda: os.getenv("VOD_CACHE_DIR", ".vod_cache"))

    @field_validator("solver_dialect", mode="before")
    @classmethod
    def validate_solver_dialect(cls, v):
        dialect = (v or "auto").lower()
        if dialect not in VALID_DIALECTS:
            raise ValueError(f"VOD_SOLVER_DIALECT must be one of {sorted(VALID_DIALECTS)}")
        return dialect


settings = Settings()


# ---------------------------------------------------------------------------
# key = value documents
# ---------------------------------------------------------------------------


class Entry(NamedTuple):
    value: str
    line: int


def parse_key_values(text: str, source: str = "<config>") -> Dict[str, Entry]:
    """
    Parse a flat `key = value` document.

    Blank lines and `#` comments are skipped. Keys are lower-cased.

    Raises:
        ConfigError: on a line without `=`, an empty key, or a repeated key.
    """
    entries: Dict[str, Entry] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}' (first on line {entries[key].line})")
        entries[key] = Entry(value, lineno)
    return entries


def _none_or(value: str) -> Optional[str]:
    return None if value.strip().lower() in {"", "none", "null"} else value


def model_overrides(model_cls: type[BaseModel], entries: Dict[str, Entry], prefix: str = "") -> dict:
    """Pick the entries naming fields of model_cls (after stripping prefix)."""
    fields = model_cls.model_fields
    picked = {}
    for key, entry in entries.items():
        if prefix and not key.startswith(prefix):
            continue
        name = key[len(prefix):]
        if name in fields:
            picked[name] = _none_or(entry.value)
    return picked


def validate_model(model_cls: type[BaseModel], values: dict, source: str, base: BaseModel | None = None):
    """Validate values into model_cls, optionally layered over base."""
    merged = base.model_dump() if base is not None else {}
    merged.update(values)
    try:
        return model_cls(**merged)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"{source}: {problems}") from e


def load_power_params(text: str, source: str = "<params>", base: PowerParams | None = None) -> PowerParams:
    """
    Parse a parameter file whose keys are PowerParams field names.

    Raises:
        ConfigError: unknown key, malformed line or out-of-range value.
    """
    entries = parse_key_values(text, source)
    unknown = [k for k in entries if k not in PowerParams.model_fields]
    if unknown:
        first = unknown[0]
        raise ConfigError(f"{source}:{entries[first].line}: unknown parameter '{first}'")
    values = {k: _none_or(e.value) for k, e in entries.items()}
    params = validate_model(PowerParams, values, source, base=base)
    logger.debug("[CONFIG] Loaded %d power parameter overrides from %s", len(values), source)
    return params
