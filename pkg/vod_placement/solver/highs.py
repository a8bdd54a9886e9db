"""
solver/highs.py

HiGHS backend.

Solution file grammar (written by `--solution_file <file>`):
    Model status
    <status text>

    # Primal solution values
    <Feasible | Infeasible | None>
    Objective <number>
    # Columns <n>
    <name> <value>        (n lines)
    # Rows <m>
    <name> <value>        (m lines)
    # Dual solution values
    ...                   (ignored)
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List

from vod_placement.errors import SolutionParseError
from vod_placement.solver.base import BaseSolverBackend, RawSolution, SolverStatus

logger = logging.getLogger(__name__)

STATUS_MAP = {
    "optimal": SolverStatus.OPTIMAL,
    "infeasible": SolverStatus.INFEASIBLE,
    "unbounded": SolverStatus.UNBOUNDED,
    "primal infeasible or unbounded": SolverStatus.INFEASIBLE,
    "time limit reached": SolverStatus.TIME_LIMIT,
}


class HighsBackend(BaseSolverBackend):
    dialect = "highs"
    default_template = (
        "highs --model_file {mps} --solution_file {solution} --time_limit {time_limit} --options_file {options}"
    )

    def prepare(self, workdir: Path, time_limit_s: float) -> Dict[str, str]:
        options = workdir / "highs.opt"
        options.write_text("mip_rel_gap = 0\n", encoding="utf-8")
        return {"options": str(options)}

    @classmethod
    def detect(cls, text: str) -> bool:
        return text.lstrip().lower().startswith("model status")

    def parse(self, text: str) -> RawSolution:
        lines: List[str] = [line.strip() for line in text.splitlines()]
        try:
            at = next(i for i, line in enumerate(lines) if line.lower() == "model status")
            status_text = next(line for line in lines[at + 1:] if line)
        except StopIteration:
            raise SolutionParseError("HiGHS solution file has no 'Model status' section") from None
        status = STATUS_MAP.get(status_text.lower(), SolverStatus.ERROR)

        objective = None
        values: Dict[str, float] = {}
        primal = next((i for i, line in enumerate(lines) if line.lower().startswith("# primal solution values")), None)
        if primal is not None:
            i = primal + 1
            feasible = i < len(lines) and lines[i].lower() == "feasible"
            i += 1
            while i < len(lines) and not lines[i].lower().startswith("# dual solution values"):
                line = lines[i]
                i += 1
                if not line:
                    continue
                tokens = line.split()
                try:
                    if tokens[0] == "Objective":
                        objective = float(tokens[1])
                    elif tokens[0] == "#":
                        continue
                    elif len(tokens) == 2:
                        values[tokens[0]] = float(tokens[1])
                    else:
                        raise ValueError
                except (ValueError, IndexError):
                    raise SolutionParseError(f"HiGHS solution line {i}: malformed entry {line!r}") from None
            if not feasible:
                values = {}

        logger.debug("[SOLVER] HiGHS solution: %s, %d values", status.value, len(values))
        return RawSolution(status=status, objective=objective, values=values, text=text, dialect=self.dialect)
