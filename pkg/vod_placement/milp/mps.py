"""
milp/mps.py

Fixed-format MPS writer and a reader for dimension checks.

Field layout (1-based columns):
    field 1: 2-3    section code (row type, bound type)
    field 2: 5-12   name
    field 3: 15-22  name
    field 4: 25-36  number
    field 5: 40-47  name
    field 6: 50-61  number

Fixed format limits names to 8 characters. Model names are truncated; a
truncated name already taken by another row or column is replaced by a
deterministic code, and every renamed entity is listed in the name map.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from vod_placement.errors import ModelError
from vod_placement.milp.model import MilpModel, Sense, VarKind

logger = logging.getLogger(__name__)

NAME_WIDTH = 8
NUMBER_WIDTH = 12
OBJECTIVE_ROW = "obj"
RHS_SET = "RHS"
RANGE_SET = "RNG"
BOUND_SET = "BND"


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------


def format_number(value: float) -> str:
    """Shortest representation that fits the 12-character number field."""
    if value == 0:
        return "0"
    text = repr(float(value))
    if len(text) <= NUMBER_WIDTH and "e" not in text:
        return text
    for digits in range(12, 0, -1):
        text = f"{value:.{digits}g}"
        if len(text) <= NUMBER_WIDTH:
            return text
    raise ModelError(f"number {value!r} cannot be written in {NUMBER_WIDTH} characters")


def _line(f1: str = "", f2: str = "", f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    text = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:<12}   {f5:<8}  {f6:<12}"
    return text.rstrip()


# ---------------------------------------------------------------------------
# Naming
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class _Namer:
    """One namespace shared by rows, columns and markers."""

    used: set = field(default_factory=set)
    renamed: Dict[str, str] = field(default_factory=dict)
    counter: int = 0

    def claim(self, name: str) -> str:
        candidate = name[:NAME_WIDTH]
        if " " in candidate or not candidate:
            raise ModelError(f"name {name!r} cannot be written to MPS")
        if candidate in self.used:
            candidate = self._code()
        self.used.add(candidate)
        if candidate != name:
            self.renamed[name] = candidate
        return candidate

    def _code(self) -> str:
        while True:
            self.counter += 1
            code = f"_{self.counter:07d}"
            if code not in self.used:
                return code


@dataclass(frozen=True)
class MpsDocument:
    """
    Emitted MPS text plus the model-name → MPS-name translation.

    Attributes:
        text: the MPS file contents.
        columns: model variable name → name written in the file.
        rows: model constraint name → name written in the file.
        renamed: model name → file name for every name that changed.
    """

    text: str
    columns: Dict[str, str]
    rows: Dict[str, str]
    renamed: Dict[str, str]

    def column_lookup(self) -> Dict[str, str]:
        """File name → model variable name."""
        return {mps: name for name, mps in self.columns.items()}

    def name_map_text(self) -> str:
        """Sidecar listing `mps_name model_name`, one renamed entity per line."""
        return "".join(f"{mps} {name}\n" for name, mps in self.renamed.items())


# ---------------------------------------------------------------------------
# Writer
# ---------------------------------------------------------------------------


def emit_mps(model: MilpModel) -> MpsDocument:
    """
    Write model as fixed-format MPS.

    Output depends only on the model's contents and insertion order, so
    identical models give byte-identical text.
    """
    namer = _Namer()
    obj_name = namer.claim(OBJECTIVE_ROW)
    rows = {c.name: namer.claim(c.name) for c in model.constraints}
    columns = {v: namer.claim(v) for v in model.variables}

    out: List[str] = [f"NAME          {model.name[:NAME_WIDTH]}", "ROWS", _line("N", obj_name)]
    out.extend(_line(c.sense.value, rows[c.name]) for c in model.constraints)

    # column-major entries: objective first, then rows in model order
    entries: Dict[str, List[Tuple[str, float]]] = {v: [] for v in model.variables}
    for var, coef in model.objective.items():
        if coef != 0:
            entries[var].append((obj_name, coef))
    for c in model.constraints:
        for var, coef in c.terms:
            entries[var].append((rows[c.name], coef))

    out.append("COLUMNS")
    in_integer_block = False
    markers = 0
    for var, v in model.variables.items():
        if v.is_integer != in_integer_block:
            markers += 1
            marker = namer.claim(f"MARK{markers:04d}")
            out.append(_line("", marker, "'MARKER'", "", "'INTORG'" if v.is_integer else "'INTEND'"))
            in_integer_block = v.is_integer
        col = columns[var]
        if not entries[var]:
            out.append(_line("", col, obj_name, "0"))
        for row, coef in entries[var]:
            out.append(_line("", col, row, format_number(coef)))
    if in_integer_block:
        marker = namer.claim(f"MARK{markers + 1:04d}")
        out.append(_line("", marker, "'MARKER'", "", "'INTEND'"))

    out.append("RHS")
    for c in model.constraints:
        if c.rhs != 0:
            out.append(_line("", RHS_SET, rows[c.name], format_number(c.rhs)))

    ranged = [c for c in model.constraints if c.range is not None and c.sense is not Sense.EQ]
    if ranged:
        out.append("RANGES")
        out.extend(_line("", RANGE_SET, rows[c.name], format_number(abs(c.range))) for c in ranged)

    out.append("BOUNDS")
    for var, v in model.variables.items():
        col = columns[var]
        if v.kind is VarKind.BINARY:
            out.append(_line("BV", BOUND_SET, col))
            continue
        if v.upper is not None and v.upper == v.lower:
            out.append(_line("FX", BOUND_SET, col, format_number(v.upper)))
            continue
        if v.lower != 0:
            out.append(_line("LI" if v.is_integer else "LO", BOUND_SET, col, format_number(v.lower)))
        if v.upper is not None:
            out.append(_line("UI" if v.is_integer else "UP", BOUND_SET, col, format_number(v.upper)))
        elif v.is_integer:
            out.append(_line("PL", BOUND_SET, col))
    out.append("ENDATA")

    if namer.renamed:
        logger.debug("[MPS] %d names shortened or recoded for fixed format", len(namer.renamed))
    return MpsDocument(
        text="\n".join(out) + "\n",
        columns=columns,
        rows=rows,
        renamed={k: v for k, v in namer.renamed.items() if k in columns or k in rows or k == OBJECTIVE_ROW},
    )


# ---------------------------------------------------------------------------
# Reader
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class MpsSummary:
    """What parse_mps recovers from a file: dimensions and the numeric data."""

    name: str = ""
    rows: int = 0
    columns: int = 0
    integers: int = 0
    nonzeros: int = 0
    objective: Dict[str, float] = field(default_factory=dict)
    rhs: Dict[str, float] = field(default_factory=dict)
    ranges: Dict[str, float] = field(default_factory=dict)
    bounds: Dict[str, List[Tuple[str, Optional[float]]]] = field(default_factory=dict)


def _fields(line: str) -> Tuple[str, ...]:
    """Split a fixed-format data line by column position."""
    padded = line.ljust(61)
    return tuple(
        part.strip()
        for part in (padded[1:3], padded[4:12], padded[14:22], padded[24:36], padded[39:47], padded[49:61])
    )


def parse_mps(text: str) -> MpsSummary:
    """
    Read a fixed-format MPS document written by emit_mps.

    Raises:
        ModelError: unknown section, undeclared row, or malformed number.
    """
    summary = MpsSummary()
    row_types: Dict[str, str] = {}
    objective_row: Optional[str] = None
    seen_columns: set = set()
    integer_block = False
    section = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("*"):
            continue
        if not line.startswith(" "):
            section = line.split()[0]
            if section == "NAME":
                summary.name = line[14:].strip()
            elif section == "ENDATA":
                break
            elif section not in {"ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"}:
                raise ModelError(f"MPS line {lineno}: unknown section '{section}'")
            continue

        f1, f2, f3, f4, f5, f6 = _fields(line)
        try:
            if section == "ROWS":
                row_types[f2] = f1
                if f1 == "N" and objective_row is None:
                    objective_row = f2
                else:
                    summary.rows += 1
            elif section == "COLUMNS":
                if f3 == "'MARKER'":
                    integer_block = f5 == "'INTORG'"
                    continue
                if f2 not in seen_columns:
                    seen_columns.add(f2)
                    summary.columns += 1
                    summary.integers += int(integer_block)
                for row, value in ((f3, f4), (f5, f6)):
                    if not row:
                        continue
                    if row not in row_types:
                        raise ModelError(f"MPS line {lineno}: column {f2} references undeclared row {row}")
                    if row == objective_row:
                        if float(value) != 0:
                            summary.objective[f2] = float(value)
                    else:
                        summary.nonzeros += 1
            elif section == "RHS":
                summary.rhs[f3] = float(f4)
            elif section == "RANGES":
                summary.ranges[f3] = float(f4)
            elif section == "BOUNDS":
                summary.bounds.setdefault(f3, []).append((f1, float(f4) if f4 else None))
                if f1 == "BV" and f3 not in seen_columns:
                    raise ModelError(f"MPS line {lineno}: bound on unknown column {f3}")
        except ValueError:
            raise ModelError(f"MPS line {lineno}: malformed number") from None

    return summary
