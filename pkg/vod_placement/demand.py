"""
demand.py

Per-access-group, per-hour VoD demand in Gbps, loaded from CSV or
synthesized for calibration runs.

CSV layout:
    group,h0,h1,...,h23
    0,120.5,110.0,...
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from vod_placement.config import HOURS_PER_DAY
from vod_placement.errors import DemandError
from vod_placement.topology import CoreTopology

logger = logging.getLogger(__name__)

VALID_SHAPES = {"flat", "evening_peak"}
TROUGH_HOUR = 5
PEAK_HOUR = 21


@dataclass(frozen=True, eq=False)
class DemandProfile:
    """
    Demand matrix gbps[group, hour].

    The array is copied and frozen on construction so profiles can be shared
    between concurrent scenario evaluations.
    """

    gbps: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.array(self.gbps, dtype=float, copy=True)
        if matrix.ndim != 2:
            raise DemandError(f"demand must be a groups × hours matrix, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise DemandError("demand contains non-finite values")
        if np.any(matrix < 0):
            g, h = (int(i) for i in np.argwhere(matrix < 0)[0])
            raise DemandError(f"group {g} hour {h}: negative demand {matrix[g, h]:g}")
        matrix.setflags(write=False)
        object.__setattr__(self, "gbps", matrix)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DemandProfile):
            return NotImplemented
        return self.gbps.shape == other.gbps.shape and bool(np.array_equal(self.gbps, other.gbps))

    __hash__ = None

    @property
    def groups(self) -> range:
        return range(self.gbps.shape[0])

    @property
    def hours(self) -> range:
        return range(self.gbps.shape[1])

    def at(self, group: int, hour: int) -> float:
        return float(self.gbps[group, hour])

    def scaled(self, factor: float) -> "DemandProfile":
        return DemandProfile(self.gbps * factor)

    def check_against(self, topo: CoreTopology) -> None:
        if self.gbps.shape[0] != len(topo.groups):
            raise DemandError(
                f"demand has {self.gbps.shape[0]} groups but topology has {len(topo.groups)}"
            )


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def load_demand(text: str, topo: CoreTopology, hours: int = HOURS_PER_DAY) -> DemandProfile:
    """
    Parse a demand CSV. Groups absent from the file get zero demand.

    Raises:
        DemandError: bad header, missing hour column, unknown or repeated
            group id, malformed or negative value (naming row and column).
    """
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise DemandError("empty demand file")

    header = [cell.strip() for cell in rows[0]]
    if not header or header[0] != "group":
        raise DemandError("demand header must start with 'group'")
    expected = [f"h{h}" for h in range(hours)]
    for h, name in enumerate(expected):
        if h + 1 >= len(header) or header[h + 1] != name:
            raise DemandError(f"missing hour column {name}")
    if len(header) > hours + 1:
        raise DemandError(f"unexpected column '{header[hours + 1]}'")

    matrix = np.zeros((len(topo.groups), hours))
    seen: dict[int, int] = {}
    for rowno, row in enumerate(rows[1:], start=2):
        if len(row) != hours + 1:
            raise DemandError(f"row {rowno}: expected {hours + 1} cells, got {len(row)}")
        try:
            group = int(row[0])
        except ValueError:
            raise DemandError(f"row {rowno}: group id '{row[0]}' is not an integer") from None
        if group not in topo.groups:
            raise DemandError(f"row {rowno}: unknown group id {group}")
        if group in seen:
            raise DemandError(f"row {rowno}: group {group} repeated (first on row {seen[group]})")
        seen[group] = rowno
        for h, cell in enumerate(row[1:]):
            try:
                value = float(cell)
            except ValueError:
                raise DemandError(f"row {rowno} column h{h}: malformed value '{cell}'") from None
            if value < 0:
                raise DemandError(f"row {rowno} column h{h}: negative demand {value:g}")
            matrix[group, h] = value

    if len(seen) < len(topo.groups):
        logger.warning("[DEMAND] %d groups have no row; their demand is zero", len(topo.groups) - len(seen))
    return DemandProfile(matrix)


def emit_demand(profile: DemandProfile) -> str:
    """Write the CSV read by load_demand; floats use repr so they re-read exactly."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["group"] + [f"h{h}" for h in profile.hours])
    for g in profile.groups:
        writer.writerow([g] + [repr(profile.at(g, h)) for h in profile.hours])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------


def diurnal_curve(shape: str, ratio: float = 4.0, hours: Iterable[int] = range(HOURS_PER_DAY)) -> np.ndarray:
    """
    Demand shape normalized to a maximum of 1.

    evening_peak rises along a half-cosine from TROUGH_HOUR to PEAK_HOUR and
    falls back over the remaining night hours; max/min equals ratio.
    """
    h = np.asarray(list(hours), dtype=float)
    if shape == "flat":
        return np.ones_like(h)
    if shape != "evening_peak":
        raise DemandError(f"demand shape must be one of {sorted(VALID_SHAPES)}")
    if ratio < 1:
        raise DemandError("peak/trough ratio must be at least 1")

    rise = PEAK_HOUR - TROUGH_HOUR
    fall = HOURS_PER_DAY - rise
    t = np.where(
        (h >= TROUGH_HOUR) & (h <= PEAK_HOUR),
        (h - TROUGH_HOUR) / rise,
        1.0 - np.mod(h - PEAK_HOUR, HOURS_PER_DAY) / fall,
    )
    floor = 1.0 / ratio
    return floor + (1.0 - floor) * (1.0 - np.cos(np.pi * t)) / 2.0


def synth_demand(
    peak_gbps_per_group: float,
    shape: str,
    topo: CoreTopology,
    ratio: float = 4.0,
    hours: int = HOURS_PER_DAY,
) -> DemandProfile:
    """Same curve for every access group, scaled so its maximum is the peak."""
    if peak_gbps_per_group < 0:
        raise DemandError("peak demand must be non-negative")
    curve = diurnal_curve(shape, ratio, range(hours)) * peak_gbps_per_group
    matrix = np.tile(curve, (len(topo.groups), 1))
    logger.info(
        "[DEMAND] Synthesized %s demand, peak %.1f Gbps over %d groups",
        shape,
        peak_gbps_per_group,
        len(topo.groups),
    )
    return DemandProfile(matrix)
