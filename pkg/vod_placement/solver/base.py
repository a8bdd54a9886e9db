"""
solver/base.py

Process-and-file integration with external MILP solvers.

This module defines:
- SolverStatus (verdicts shared by every solution-file dialect)
- RawSolution (status, objective and values read back from a solver)
- BaseSolverBackend (abstract base for one solver's command line and grammar)
- invoke_solver (write MPS, run the command, read the solution file)

Extending this:
    Subclass BaseSolverBackend, implement `parse()` and `detect()`, and add
    the dialect to get_solver_backend().
"""

from __future__ import annotations

import errno
import hashlib
import logging
import shlex
import shutil
import subprocess
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional

from tenacity import retry, retry_if_exception, stop_after_attempt, wait_exponential

from vod_placement.config import VALID_DIALECTS, settings
from vod_placement.errors import ConfigError, SolverError, SolverNotFoundError, SolverTimeoutError
from vod_placement.utils.cache_manager import CacheManager

logger = logging.getLogger(__name__)

TRANSIENT_ERRNOS = {errno.EAGAIN, errno.ETXTBSY, errno.EMFILE}
KILL_GRACE_S = 30.0


# ---------------------------------------------------------------------------
# DATA MODELS
# ---------------------------------------------------------------------------


class SolverStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIME_LIMIT = "time_limit"
    ERROR = "error"


@dataclass(slots=True)
class RawSolution:
    """
    What a solver reported, keyed by the names written in the MPS file.

    Attributes:
        status (SolverStatus): verdict.
        objective (float | None): reported objective, if any.
        values (dict): column (and, for some dialects, row) name → value.
        text (str): the solution file as read.
        dialect (str): grammar the text was parsed with.
    """

    status: SolverStatus
    objective: Optional[float] = None
    values: Dict[str, float] = field(default_factory=dict)
    text: str = ""
    dialect: str = ""

    @property
    def has_values(self) -> bool:
        return bool(self.values)


# ---------------------------------------------------------------------------
# BASE CLASS
# ---------------------------------------------------------------------------


class BaseSolverBackend(ABC):
    """
    One solver's command template and solution-file grammar.

    Command templates are formatted with {mps}, {solution}, {time_limit} and
    {options}; paths are quoted for the shell splitter.
    """

    dialect: str = ""
    default_template: str = ""

    def prepare(self, workdir: Path, time_limit_s: float) -> Dict[str, str]:
        """Extra files the command needs; returns extra template fields."""
        return {"options": ""}

    def command(self, template: str, workdir: Path, time_limit_s: float) -> List[str]:
        fields = {
            "mps": shlex.quote(str(workdir / "model.mps")),
            "solution": shlex.quote(str(workdir / "model.sol")),
            "time_limit": f"{time_limit_s:g}",
        }
        fields.update({k: shlex.quote(v) if v else v for k, v in self.prepare(workdir, time_limit_s).items()})
        try:
            return shlex.split(template.format(**fields))
        except (KeyError, IndexError, ValueError) as e:
            raise ConfigError(f"solver command template {template!r} is invalid: {e}") from None

    @abstractmethod
    def parse(self, text: str) -> RawSolution:
        """Parse a solution file in this backend's grammar."""
        ...

    @classmethod
    @abstractmethod
    def detect(cls, text: str) -> bool:
        """True when text looks like this backend's solution file."""
        ...


# ---------------------------------------------------------------------------
# Factory
# ---------------------------------------------------------------------------


def get_solver_backend(dialect: str) -> BaseSolverBackend:
    dialect = (dialect or "").lower()
    if dialect == "cbc":
        from vod_placement.solver.cbc import CbcBackend

        return CbcBackend()
    if dialect == "highs":
        from vod_placement.solver.highs import HighsBackend

        return HighsBackend()
    raise ConfigError(f"Unknown solver dialect '{dialect}'")


def detect_dialect(text: str) -> str:
    from vod_placement.solver.cbc import CbcBackend
    from vod_placement.solver.highs import HighsBackend

    for backend in (HighsBackend, CbcBackend):
        if backend.detect(text):
            return backend.dialect
    raise SolverError("solution file matches no supported dialect")


def parse_raw_solution(text: str, dialect: str = "auto") -> RawSolution:
    """Parse solution text, detecting the dialect when asked to."""
    if dialect == "auto":
        dialect = detect_dialect(text)
    return get_solver_backend(dialect).parse(text)


def _dialect_for(template: str, dialect: str) -> str:
    """Dialect named by the program in template, or the first solver found on PATH."""
    if dialect != "auto":
        return dialect
    if template.strip():
        program = Path(shlex.split(template)[0]).name.lower()
        return "highs" if "highs" in program else "cbc"
    return next((name for name in ("cbc", "highs") if shutil.which(name)), "cbc")


# ---------------------------------------------------------------------------
# Process launch
# ---------------------------------------------------------------------------


def _is_transient_launch_error(exc: BaseException) -> bool:
    return isinstance(exc, OSError) and not isinstance(exc, FileNotFoundError) and exc.errno in TRANSIENT_ERRNOS


@retry(
    retry=retry_if_exception(_is_transient_launch_error),
    stop=stop_after_attempt(3),
    wait=wait_exponential(multiplier=0.5, max=4),
    reraise=True,
)
def _launch(argv: List[str], cwd: Path, timeout_s: float) -> subprocess.CompletedProcess:
    return subprocess.run(argv, cwd=cwd, capture_output=True, text=True, timeout=timeout_s, check=False)


def solution_cache() -> CacheManager | None:
    """Solution cache per the environment settings, or None when disabled."""
    if settings.solution_cache_ttl_minutes <= 0:
        return None
    return CacheManager("solutions", ttl_minutes=settings.solution_cache_ttl_minutes, cache_dir=settings.cache_dir)


def cache_key(dialect: str, template: str, time_limit_s: float, mps_text: str) -> str:
    digest = hashlib.sha256()
    for part in (dialect, template, f"{time_limit_s:g}", mps_text):
        digest.update(part.encode("utf-8"))
        digest.update(b"\0")
    return digest.hexdigest()


def invoke_solver(
    mps_text: str,
    solver_command: str | None = None,
    time_limit_s: float | None = None,
    dialect: str | None = None,
    cache: CacheManager | None = None,
) -> RawSolution:
    """
    Solve an MPS model with an external solver process.

    The MPS text goes to a private temp directory, the command runs there,
    and the solution file it writes is parsed in the given dialect.

    Raises:
        SolverNotFoundError: the command's program is not on PATH.
        SolverTimeoutError: time limit reached; carries the incumbent if any.
        SolverError: nonzero exit or no solution file.
    """
    dialect = (dialect or settings.solver_dialect).lower()
    if dialect not in VALID_DIALECTS:
        raise ConfigError(f"solver dialect must be one of {sorted(VALID_DIALECTS)}")
    time_limit_s = time_limit_s if time_limit_s is not None else settings.time_limit_s
    template = solver_command or settings.solver_cmd
    dialect = _dialect_for(template, dialect)
    backend = get_solver_backend(dialect)
    template = template or backend.default_template

    key = cache_key(dialect, template, time_limit_s, mps_text)
    if cache is not None:
        cached = cache.get(key)
        if cached:
            logger.info("[CACHE] Reusing cached %s solution", dialect)
            return backend.parse(cached)

    with tempfile.TemporaryDirectory(prefix="vod_solve_") as tmp:
        workdir = Path(tmp)
        (workdir / "model.mps").write_text(mps_text, encoding="utf-8")
        argv = backend.command(template, workdir, time_limit_s)
        if not argv or shutil.which(argv[0]) is None:
            raise SolverNotFoundError(
                f"solver program '{argv[0] if argv else template}' not found on PATH; "
                "install CBC or HiGHS, set VOD_SOLVER_CMD, or run with --no-solver"
            )

        logger.info("[SOLVER] Running %s (time limit %gs)", argv[0], time_limit_s)
        try:
            proc = _launch(argv, workdir, time_limit_s + KILL_GRACE_S)
        except subprocess.TimeoutExpired:
            raise SolverTimeoutError(f"{argv[0]} did not stop within {time_limit_s + KILL_GRACE_S:g}s") from None
        except FileNotFoundError:
            raise SolverNotFoundError(f"solver program '{argv[0]}' could not be started") from None
        except OSError as e:
            raise SolverError(f"could not launch {argv[0]}: {e}") from e

        solution_path = workdir / "model.sol"
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout or "").strip().splitlines()[-5:]
            raise SolverError(f"{argv[0]} exited with status {proc.returncode}: {' | '.join(tail)}")
        if not solution_path.exists():
            raise SolverError(f"{argv[0]} finished without writing a solution file")
        text = solution_path.read_text(encoding="utf-8")

    raw = backend.parse(text)
    logger.info("[SOLVER] Status %s, objective %s", raw.status.value, raw.objective)
    if raw.status is SolverStatus.TIME_LIMIT:
        raise SolverTimeoutError(
            f"time limit of {time_limit_s:g}s reached" + ("" if raw.has_values else " without an incumbent"),
            incumbent=raw.values or None,
            objective=raw.objective,
        )
    if cache is not None and raw.status in (SolverStatus.OPTIMAL, SolverStatus.INFEASIBLE):
        cache.set(key, text)
    return raw
