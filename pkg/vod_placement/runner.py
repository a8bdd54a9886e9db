"""
runner.py

Command bodies behind the CLI: solve a run config, sweep PUE grids, run the
scenario studies, emit MPS files and verify plan files.

Every command returns an ExitCode; errors raised on purpose propagate as
VodPlacementError for main.py to map.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from vod_placement.config import EsdParams, PowerParams, SolarArray, settings
from vod_placement.demand import DemandProfile
from vod_placement.errors import ConfigError, ExitCode, SolverTimeoutError
from vod_placement.heuristics import greedy_place
from vod_placement.milp import Violation, build_model, emit_mps, parse_solution, verify_plan
from vod_placement.oracle import Savings, compare_reports
from vod_placement.plan import PlacementPlan, read_plan_csv, write_plan_csv
from vod_placement.power import PowerReport, evaluate_plan, write_breakdown_csv
from vod_placement.scenario import Preset, RunSetup, ScenarioConfig, Tier, brown_cdc_baseline, preset_scenario
from vod_placement.solver import RawSolution, SolverStatus, invoke_solver
from vod_placement.solver.base import solution_cache
from vod_placement.topology import CoreTopology

logger = logging.getLogger(__name__)

DEFAULT_PUE_GRID = (1.1, 1.15, 1.2)
SWEEP_PUE_C = 1.1
OBJECTIVE_TOLERANCE = 1e-6

SWEEP_COLUMNS = ("pue_mf", "pue_af", "brown_kwh", "transport_kwh", "afdc_pct", "mfdc_pct", "cdc_pct")
NETWORK_COLUMNS = (
    "config",
    "hour",
    "core_w",
    "metro_w",
    "access_w",
    "transport_w",
    "brown_w",
    "afdc_pct",
    "mfdc_pct",
    "cdc_pct",
)
SAVINGS_COLUMNS = (
    "comparison",
    "base_transport_kwh",
    "candidate_transport_kwh",
    "transport_pct",
    "base_total_kwh",
    "candidate_total_kwh",
    "total_pct",
)


# ---------------------------------------------------------------------------
# Solve pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SolveOptions:
    """How plans are produced: external MILP solver or the greedy baseline."""

    use_solver: bool = True
    solver_cmd: Optional[str] = None
    time_limit_s: Optional[float] = None
    dialect: Optional[str] = None


@dataclass(slots=True)
class SolveResult:
    scenario: ScenarioConfig
    plan: PlacementPlan
    report: PowerReport
    violations: List[Violation] = field(default_factory=list)
    method: str = "milp"

    @property
    def ok(self) -> bool:
        return not self.violations


def _solve_milp(
    topo: CoreTopology,
    demand: DemandProfile,
    params: PowerParams,
    scenario: ScenarioConfig,
    options: SolveOptions,
) -> PlacementPlan:
    model = build_model(topo, demand, params, scenario)
    document = emit_mps(model)
    try:
        raw = invoke_solver(
            document.text,
            solver_command=options.solver_cmd,
            time_limit_s=options.time_limit_s,
            dialect=options.dialect,
            cache=solution_cache(),
        )
    except SolverTimeoutError as e:
        if not e.incumbent:
            raise
        logger.warning("[SOLVER] %s; using the incumbent, which may not be optimal", e)
        raw = RawSolution(status=SolverStatus.TIME_LIMIT, objective=e.objective, values=e.incumbent)
    return parse_solution(raw, document, model)


def solve(
    topo: CoreTopology,
    demand: DemandProfile,
    params: PowerParams,
    scenario: ScenarioConfig,
    options: SolveOptions = SolveOptions(),
) -> SolveResult:
    """
    Produce, evaluate and verify the plan of one scenario.

    The plan's own objective is cross-checked against the evaluator's brown
    energy; a mismatch is logged, not raised.
    """
    if options.use_solver:
        plan = _solve_milp(topo, demand, params, scenario, options)
        method = "milp"
    else:
        plan = greedy_place(topo, demand, params, scenario)
        method = "greedy"

    report = evaluate_plan(plan, topo, scenario, params)
    violations = verify_plan(plan, topo, demand, params, scenario)
    if plan.objective_kwh is not None:
        gap = abs(plan.objective_kwh - report.brown_kwh)
        if gap > OBJECTIVE_TOLERANCE * max(1.0, abs(report.brown_kwh)):
            logger.warning(
                "[%s] Objective %.9g kWh differs from evaluated brown energy %.9g kWh",
                method.upper(),
                plan.objective_kwh,
                report.brown_kwh,
            )
    return SolveResult(scenario=scenario, plan=plan, report=report, violations=violations, method=method)


def _report_violations(result: SolveResult) -> None:
    for violation in result.violations:
        print(f"VIOLATION [{result.scenario.name}] {violation}")


def _output_dir(out: str | Path | None) -> Path:
    path = Path(out or settings.output_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create output directory {path}: {e.strerror}") from None
    return path


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e.strerror}") from None
    logger.info("[OUTPUT] Wrote %s", path)


def _pct(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _shares_line(plan: PlacementPlan) -> str:
    shares = plan.tier_shares()
    return ", ".join(f"{tier.value.upper()} {shares[tier]:.1f}%" for tier in (Tier.AFDC, Tier.MFDC, Tier.CDC))


def hour_shares(plan: PlacementPlan, hour: int) -> Dict[Tier, float]:
    """Percentage of the hour's delivered Gbps served by each tier."""
    totals = {tier: 0.0 for tier in Tier}
    for g in range(plan.groups):
        flow = plan.flow(hour, g)
        totals[Tier.AFDC] += flow.afdc
        totals[Tier.MFDC] += flow.mfdc
        totals[Tier.CDC] += sum(flow.cdc.values())
    served = sum(totals.values())
    if served <= 0:
        return {tier: 0.0 for tier in Tier}
    return {tier: 100.0 * v / served for tier, v in totals.items()}


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def cmd_run(setup: RunSetup, out: str | Path | None = None, options: SolveOptions = SolveOptions()) -> ExitCode:
    """Solve the configured scenario, write plan and breakdown CSVs, print savings over the brown-CDC baseline."""
    out_dir = _output_dir(out)
    result = solve(setup.topo, setup.demand, setup.params, setup.scenario, options)
    _write(out_dir / f"{setup.name}_plan.csv", write_plan_csv(result.plan))
    _write(out_dir / f"{setup.name}_breakdown.csv", write_breakdown_csv(result.report))

    report = result.report
    print(
        f"{setup.name}: brown {report.brown_kwh:.3f} kWh "
        f"(transport {report.transport_kwh:.3f} kWh) via {result.method}; {_shares_line(result.plan)}"
    )

    baseline_scenario = brown_cdc_baseline(setup.scenario.placement, setup.scenario.pue_c)
    baseline = solve(setup.topo, setup.demand, setup.params, baseline_scenario, options)
    print(f"{setup.name} vs brown-CDC baseline: {compare_reports(baseline.report, report).describe()}")

    if not result.ok:
        _report_violations(result)
        return ExitCode.VERIFICATION
    return ExitCode.OK


# ---------------------------------------------------------------------------
# sweep-pue
# ---------------------------------------------------------------------------


def _check_grid(values: Sequence[float], name: str) -> Tuple[float, ...]:
    if not values:
        raise ConfigError(f"{name} grid is empty")
    for v in values:
        if not 1.0 <= v <= 3.0:
            raise ConfigError(f"{name} grid value {v:g} outside [1, 3]")
    return tuple(values)


def write_sweep_csv(rows: Sequence[Tuple[float, float, SolveResult]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for pue_mf, pue_af, result in rows:
        shares = result.plan.tier_shares()
        writer.writerow(
            [
                repr(pue_mf),
                repr(pue_af),
                repr(result.report.brown_kwh),
                repr(result.report.transport_kwh),
                *(repr(shares[t]) for t in (Tier.AFDC, Tier.MFDC, Tier.CDC)),
            ]
        )
    return buf.getvalue()


def cmd_sweep(
    setup: RunSetup,
    out: str | Path | None = None,
    options: SolveOptions = SolveOptions(),
    pue_mf_grid: Sequence[float] = DEFAULT_PUE_GRID,
    pue_af_grid: Sequence[float] = DEFAULT_PUE_GRID,
    workers: int | None = None,
) -> ExitCode:
    """
    Solve every (pue_mf, pue_af) grid point at pue_c = 1.1.

    Grid points run on a thread pool, each solver call in its own process;
    rows are written in grid order whatever the completion order.
    """
    points = list(itertools.product(_check_grid(pue_mf_grid, "pue_mf"), _check_grid(pue_af_grid, "pue_af")))
    out_dir = _output_dir(out)
    scenarios = [
        setup.scenario.with_updates(name=f"{setup.name}_mf{mf:g}_af{af:g}", pue_c=SWEEP_PUE_C, pue_mf=mf, pue_af=af)
        for mf, af in points
    ]
    workers = workers or settings.sweep_workers
    logger.info("[SWEEP] %d grid points on %d workers", len(points), workers)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(solve, setup.topo, setup.demand, setup.params, s, options) for s in scenarios]
        results = [f.result() for f in futures]

    rows = [(mf, af, r) for (mf, af), r in zip(points, results)]
    _write(out_dir / f"{setup.name}_sweep.csv", write_sweep_csv(rows))
    for mf, af, r in rows:
        print(f"pue_mf={mf:g} pue_af={af:g}: brown {r.report.brown_kwh:.3f} kWh; {_shares_line(r.plan)}")

    failed = [r for r in results if not r.ok]
    for r in failed:
        _report_violations(r)
    return ExitCode.VERIFICATION if failed else ExitCode.OK


# ---------------------------------------------------------------------------
# scenario-b / scenario-c
# ---------------------------------------------------------------------------


def study_scenarios(setup: RunSetup, include_esd: bool) -> List[ScenarioConfig]:
    """Brown-CDC baseline, renewable + solar, and optionally + ESD, sharing the setup's sites, PUEs and solar inputs."""
    s = setup.scenario
    pue = dict(pue_c=s.pue_c, pue_mf=s.pue_mf, pue_af=s.pue_af)
    array = s.solar_array or SolarArray()
    scenarios = [
        brown_cdc_baseline(s.placement, s.pue_c),
        preset_scenario(Preset.RENEWABLE_SOLAR, s.placement, solar_array=array, **pue).with_updates(
            solar_profile=s.solar_profile
        ),
    ]
    if include_esd:
        scenarios.append(
            preset_scenario(Preset.RENEWABLE_SOLAR_ESD, s.placement, solar_array=array, esd=s.esd or EsdParams(), **pue)
            .with_updates(
                solar_profile=s.solar_profile,
                cyclic_esd=s.cyclic_esd,
                initial_soc_kwh=s.initial_soc_kwh if s.esd is not None else 0.0,
            )
        )
    return scenarios


def write_network_csv(results: Sequence[SolveResult]) -> str:
    """Hourly networking power and tier shares, one block of rows per configuration."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(NETWORK_COLUMNS)
    for result in results:
        for b in result.report.hours:
            shares = hour_shares(result.plan, b.hour)
            writer.writerow(
                [
                    result.scenario.name,
                    b.hour,
                    repr(b.core_w),
                    repr(b.metro_w),
                    repr(b.access_w),
                    repr(b.transport_w),
                    repr(b.brown_w),
                    *(repr(shares[t]) for t in (Tier.AFDC, Tier.MFDC, Tier.CDC)),
                ]
            )
    return buf.getvalue()


def write_savings_csv(rows: Sequence[Tuple[str, Savings]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SAVINGS_COLUMNS)
    for label, s in rows:
        writer.writerow(
            [
                label,
                repr(s.base_transport_kwh),
                repr(s.candidate_transport_kwh),
                _pct(s.transport_pct),
                repr(s.base_total_kwh),
                repr(s.candidate_total_kwh),
                _pct(s.total_pct),
            ]
        )
    return buf.getvalue()


def cmd_scenarios(
    setup: RunSetup,
    out: str | Path | None = None,
    options: SolveOptions = SolveOptions(),
    include_esd: bool = False,
) -> ExitCode:
    """Run the baseline and scenario studies, print savings, write hourly network and savings CSVs."""
    out_dir = _output_dir(out)
    results: List[SolveResult] = []
    for scenario in study_scenarios(setup, include_esd):
        logger.info("[SCENARIO] Solving %s", scenario.name)
        results.append(solve(setup.topo, setup.demand, setup.params, scenario, options))

    comparisons = [("renewable_solar vs brown_cdc", compare_reports(results[0].report, results[1].report))]
    if include_esd:
        comparisons.append(("renewable_solar_esd vs renewable_solar", compare_reports(results[1].report, results[2].report)))

    for label, savings in comparisons:
        print(f"{label}: {savings.describe()}")
        logger.info("[SCENARIO] %s: %s", label, savings.describe())

    _write(out_dir / f"{setup.name}_network.csv", write_network_csv(results))
    _write(out_dir / f"{setup.name}_savings.csv", write_savings_csv(comparisons))

    failed = [r for r in results if not r.ok]
    for r in failed:
        _report_violations(r)
    return ExitCode.VERIFICATION if failed else ExitCode.OK


# ---------------------------------------------------------------------------
# emit-mps / verify
# ---------------------------------------------------------------------------


def cmd_emit_mps(setup: RunSetup, out: str | Path | None = None) -> ExitCode:
    """Write <name>.mps and the <name>.names sidecar mapping written names back to model names."""
    out_dir = _output_dir(out)
    document = emit_mps(build_model(setup.topo, setup.demand, setup.params, setup.scenario))
    mps_path = out_dir / f"{setup.name}.mps"
    _write(mps_path, document.text)
    _write(mps_path.with_suffix(".names"), document.name_map_text())
    print(f"wrote {mps_path} ({len(document.columns)} columns, {len(document.rows)} rows)")
    return ExitCode.OK


def cmd_verify(setup: RunSetup, plan_path: str | Path) -> ExitCode:
    """Check a plan CSV against the config; prints one line per violation."""
    path = Path(plan_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read plan file {path}: {e.strerror}") from None

    scenario = setup.scenario
    plan = read_plan_csv(text, initial_soc=scenario.initial_soc_kwh if scenario.esd is not None else 0.0)
    violations = verify_plan(plan, setup.topo, setup.demand, setup.params, scenario)
    if not violations:
        print(f"{path}: plan satisfies every rule")
        return ExitCode.OK
    for violation in violations:
        print(f"VIOLATION {violation}")
    print(f"{path}: {len(violations)} violations")
    return ExitCode.VERIFICATION
