"""
energy.py

Solar generation at AFDCs and ESD charge/discharge dynamics.

Energies are kWh and every slot is one hour long, so an hourly average power
of P watts is P/1000 kWh.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from vod_placement.config import HOURS_PER_DAY, EsdParams, SolarArray
from vod_placement.errors import ConfigError, EsdError

logger = logging.getLogger(__name__)

SOC_TOLERANCE_KWH = 1e-9


# ---------------------------------------------------------------------------
# Solar
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SolarProfile:
    """Hourly irradiance in W/m² for one day."""

    irradiance: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.irradiance) != HOURS_PER_DAY:
            raise ConfigError(f"solar profile needs {HOURS_PER_DAY} hourly values, got {len(self.irradiance)}")
        for hour, value in enumerate(self.irradiance):
            if value < 0:
                raise ConfigError(f"solar profile hour {hour}: negative irradiance {value}")


def default_solar_profile(peak_w_per_m2: float = 1000.0) -> SolarProfile:
    """Synthetic clear-sky day: half-sine from 06:00 to 18:00, peak at noon."""
    hours = np.arange(HOURS_PER_DAY)
    curve = np.where(
        (hours >= 6) & (hours <= 18),
        peak_w_per_m2 * np.sin(np.pi * (hours - 6) / 12.0),
        0.0,
    )
    curve[curve < 1e-9] = 0.0
    return SolarProfile(tuple(float(v) for v in curve))


def load_solar_profile(text: str) -> SolarProfile:
    """Parse 24 lines of `hour irradiance_w_per_m2`."""
    values: dict[int, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ConfigError(f"solar profile line {lineno}: expected '<hour> <irradiance>'")
        try:
            hour, value = int(fields[0]), float(fields[1])
        except ValueError:
            raise ConfigError(f"solar profile line {lineno}: malformed number") from None
        if not 0 <= hour < HOURS_PER_DAY:
            raise ConfigError(f"solar profile line {lineno}: hour {hour} out of range")
        if hour in values:
            raise ConfigError(f"solar profile line {lineno}: duplicate hour {hour}")
        values[hour] = value
    missing = [h for h in range(HOURS_PER_DAY) if h not in values]
    if missing:
        raise ConfigError(f"solar profile missing hours {missing}")
    return SolarProfile(tuple(values[h] for h in range(HOURS_PER_DAY)))


def emit_solar_profile(profile: SolarProfile) -> str:
    return "".join(f"{h} {v!r}\n" for h, v in enumerate(profile.irradiance))


def solar_output(profile: SolarProfile, array: SolarArray, hour: int) -> float:
    """Array output in W at the given hour of day."""
    if not 0 <= hour < HOURS_PER_DAY:
        raise ConfigError(f"hour {hour} out of range 0..{HOURS_PER_DAY - 1}")
    return profile.irradiance[hour] * array.area_m2 * array.efficiency


def solar_kwh(profile: SolarProfile, array: SolarArray | None, hours: int = HOURS_PER_DAY) -> List[float]:
    """Generation per one-hour slot, zero everywhere when there is no array."""
    if array is None:
        return [0.0] * hours
    return [solar_output(profile, array, h) / 1000.0 for h in range(hours)]


# ---------------------------------------------------------------------------
# Energy storage
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class EsdState:
    soc: float = 0.0


def esd_charge(state: EsdState, params: EsdParams, input_kwh: float) -> EsdState:
    """Store input_kwh of solar energy; input·eta_charge reaches the battery."""
    if input_kwh < 0:
        raise EsdError(f"negative charge input {input_kwh}")
    if input_kwh > params.charge_cap + SOC_TOLERANCE_KWH:
        raise EsdError(f"charge input {input_kwh:g} kWh exceeds rate cap {params.charge_cap:g}")
    soc = state.soc + input_kwh * params.eta_charge
    if soc > params.e_max + SOC_TOLERANCE_KWH:
        raise EsdError(f"charge overflows capacity: {soc:g} > {params.e_max:g} kWh")
    return EsdState(min(soc, params.e_max))


def esd_discharge(state: EsdState, params: EsdParams, delivered_kwh: float) -> EsdState:
    """Deliver delivered_kwh to the AFDC; delivered/eta_discharge leaves the battery."""
    if delivered_kwh < 0:
        raise EsdError(f"negative discharge {delivered_kwh}")
    drawn = delivered_kwh / params.eta_discharge
    if drawn > state.soc + SOC_TOLERANCE_KWH:
        raise EsdError(
            f"discharge of {delivered_kwh:g} kWh draws {drawn:g} kWh but only {state.soc:g} kWh stored"
        )
    if drawn > params.discharge_cap + SOC_TOLERANCE_KWH:
        raise EsdError(f"discharge draw {drawn:g} kWh exceeds rate cap {params.discharge_cap:g}")
    return EsdState(max(state.soc - drawn, 0.0))


@dataclass(frozen=True, slots=True)
class DispatchHour:
    """What one AFDC does with its energy in one hour (all kWh)."""

    serve: float = 0.0
    charge: float = 0.0
    curtail: float = 0.0
    discharge: float = 0.0


@dataclass(frozen=True, slots=True)
class EnergyDay:
    brown_w: Tuple[float, ...]
    soc: Tuple[float, ...]
    final: EsdState

    @property
    def brown_kwh(self) -> float:
        return sum(self.brown_w) / 1000.0


def simulate_energy_day(
    solar_w: Sequence[float],
    esd_params: EsdParams | None,
    hourly_afdc_load_w: Sequence[float],
    dispatch: Sequence[DispatchHour],
    initial: EsdState = EsdState(),
    cyclic: bool = False,
    tolerance: float = 1e-6,
) -> EnergyDay:
    """
    Step one AFDC through a day of dispatch decisions.

    Returns the brown power of every hour, the state of charge after every
    hour, and the final state.

    Raises:
        EsdError: carrying the hour index of the first broken rule.
    """
    hours = len(hourly_afdc_load_w)
    if len(solar_w) != hours or len(dispatch) != hours:
        raise ValueError("solar, load and dispatch must cover the same hours")

    state = initial
    brown: List[float] = []
    trajectory: List[float] = []
    for hour, (gen_w, load_w, act) in enumerate(zip(solar_w, hourly_afdc_load_w, dispatch)):
        if min(act.serve, act.charge, act.curtail, act.discharge) < -tolerance:
            raise EsdError("negative dispatch quantity", hour)
        split = act.serve + act.charge + act.curtail
        if abs(split - gen_w / 1000.0) > tolerance:
            raise EsdError(f"solar split {split:g} kWh differs from generation {gen_w / 1000.0:g} kWh", hour)
        if act.charge > tolerance and act.discharge > tolerance:
            raise EsdError("charge and discharge in the same hour", hour)
        if (act.charge > tolerance or act.discharge > tolerance) and esd_params is None:
            raise EsdError("ESD dispatch without an ESD", hour)

        try:
            if act.charge > 0:
                state = esd_charge(state, esd_params, act.charge)
            if act.discharge > 0:
                state = esd_discharge(state, esd_params, act.discharge)
        except EsdError as e:
            raise EsdError(str(e), hour) from e

        brown.append(max(0.0, load_w - 1000.0 * (act.serve + act.discharge)))
        trajectory.append(state.soc)

    if cyclic and state.soc < initial.soc - tolerance:
        raise EsdError(f"cyclic rule broken: final soc {state.soc:g} < initial {initial.soc:g}", hours - 1)

    logger.debug("[ENERGY] Day simulated: brown %.3f kWh, final soc %.3f kWh", sum(brown) / 1000.0, state.soc)
    return EnergyDay(brown_w=tuple(brown), soc=tuple(trajectory), final=state)
