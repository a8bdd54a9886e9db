"""
solver/cbc.py

COIN-OR CBC backend.

Solution file grammar (written by `-printingOptions all -solu <file>`):
    <status words> - objective value <number>
    [**] <index> <row name> <activity> <dual>       (one per row, index from 0)
    [**] <index> <column name> <value> <reduced cost> (one per column, index from 0)

A leading `**` marks an infeasible row or column and is ignored. Row and
column names share one namespace in the files we emit, so both sections are
read into a single name → value map.
"""

from __future__ import annotations

import logging
import re

from vod_placement.errors import SolutionParseError
from vod_placement.solver.base import BaseSolverBackend, RawSolution, SolverStatus

logger = logging.getLogger(__name__)

OBJECTIVE_RE = re.compile(r"objective value\s+(\S+)", re.IGNORECASE)


def _status(header: str) -> SolverStatus:
    words = header.strip().lower()
    if words.startswith("optimal"):
        return SolverStatus.OPTIMAL
    if "infeasible" in words.split(" - ")[0]:
        return SolverStatus.INFEASIBLE
    if words.startswith("unbounded"):
        return SolverStatus.UNBOUNDED
    if words.startswith("stopped"):
        return SolverStatus.TIME_LIMIT
    return SolverStatus.ERROR


class CbcBackend(BaseSolverBackend):
    dialect = "cbc"
    default_template = "cbc {mps} -sec {time_limit} -ratioGap 0 -printingOptions all -solve -solu {solution}"

    @classmethod
    def detect(cls, text: str) -> bool:
        first = text.lstrip().splitlines()[0] if text.strip() else ""
        return bool(OBJECTIVE_RE.search(first)) or first.lower().startswith(("optimal", "infeasible", "stopped"))

    def parse(self, text: str) -> RawSolution:
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise SolutionParseError("empty CBC solution file")

        header = lines[0]
        status = _status(header)
        match = OBJECTIVE_RE.search(header)
        objective = float(match.group(1)) if match else None
        # "Stopped on time (no integer solution - continuous used)" has no incumbent
        usable = "no integer solution" not in header.lower()

        values = {}
        for lineno, line in enumerate(lines[1:], start=2):
            tokens = line.split()
            if tokens[0] == "**":
                tokens = tokens[1:]
            if len(tokens) < 3:
                raise SolutionParseError(f"CBC solution line {lineno}: expected '<index> <name> <value>'")
            try:
                int(tokens[0])
                values[tokens[1]] = float(tokens[2])
            except ValueError:
                raise SolutionParseError(f"CBC solution line {lineno}: malformed entry {line.strip()!r}") from None

        if status is SolverStatus.INFEASIBLE or not usable:
            values = {}
        logger.debug("[SOLVER] CBC solution: %s, %d values", status.value, len(values))
        return RawSolution(status=status, objective=objective, values=values, text=text, dialect=self.dialect)
