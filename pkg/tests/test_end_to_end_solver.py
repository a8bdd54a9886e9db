"""
End-to-end checks through an external MILP solver.

Skipped unless cbc or highs is on PATH; run with `pytest -m solver`.
"""

import numpy as np
import pytest

from tests.conftest import flat_demand
from vod_placement.demand import DemandProfile
from vod_placement.energy import SolarProfile
from vod_placement.heuristics import greedy_place
from vod_placement.milp import build_model, emit_mps
from vod_placement.oracle import brute_force, compare_reports
from vod_placement.power import evaluate_plan
from vod_placement.runner import SolveOptions, solve, study_scenarios
from vod_placement.scenario import DATA_DIR, Preset, Tier, load_run_config, preset_scenario
from vod_placement.solver import invoke_solver

pytestmark = pytest.mark.solver

RANDOM_INSTANCES = 50
RANDOM_ESD_CONFIGS = 10


def _options(solver_cmd):
    return SolveOptions(solver_cmd=solver_cmd, time_limit_s=300)


def _close(a, b):
    return a == pytest.approx(b, rel=1e-6, abs=1e-6)


# ---------------------------------------------------------------------------
# Oracle agreement
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(RANDOM_INSTANCES))
def test_milp_matches_brute_force_on_random_tiny_instances(
    seed, solver_cmd, params, one_node_topo, two_node_topo, one_node_placement, two_node_placement
):
    rng = np.random.default_rng(seed)
    if rng.random() < 0.5:
        topo, placement = one_node_topo, one_node_placement
    else:
        topo, placement = two_node_topo, two_node_placement
    groups, hours = len(topo.groups), int(rng.integers(1, 5))
    demand = DemandProfile(rng.integers(0, 11, size=(groups, hours)) * 0.2)

    preset = [Preset.BROWN, Preset.RENEWABLE, Preset.RENEWABLE_SOLAR][int(rng.integers(0, 3))]
    scenario = preset_scenario(
        preset,
        placement,
        pue_mf=float(rng.choice([1.1, 1.2])),
        pue_af=float(rng.choice([1.1, 1.2, 1.3])),
    )
    if scenario.uses_solar:
        scenario = scenario.with_updates(solar_profile=SolarProfile((float(rng.uniform(0, 20)),) * 24))

    exact = brute_force(topo, demand, params, scenario)
    result = solve(topo, demand, params, scenario, _options(solver_cmd))
    greedy = greedy_place(topo, demand, params, scenario)

    assert result.ok, result.violations
    assert _close(result.report.brown_kwh, evaluate_plan(exact, topo, scenario, params).brown_kwh)
    assert result.report.brown_kwh <= greedy.objective_kwh + 1e-6


def test_server_granular_lattice_matches_the_milp(solver_cmd, params, one_node_topo, one_node_placement):
    scenario = preset_scenario(Preset.BROWN, one_node_placement)
    demand = flat_demand(1, 1, 3.6)

    exact = brute_force(one_node_topo, demand, params, scenario, granularity_gbps=1.8)
    result = solve(one_node_topo, demand, params, scenario, _options(solver_cmd))

    assert _close(result.report.brown_kwh, exact.objective_kwh)


# ---------------------------------------------------------------------------
# Tier behaviour
# ---------------------------------------------------------------------------


def test_equal_pues_stream_from_the_afdc(solver_cmd, params, one_node_topo, one_node_placement):
    scenario = preset_scenario(Preset.BROWN, one_node_placement)
    result = solve(one_node_topo, flat_demand(1, 2, 100.0), params, scenario, _options(solver_cmd))

    assert result.ok
    assert result.plan.tier_shares()[Tier.AFDC] == 100.0


def test_dear_afdc_fills_the_mfdc_before_the_cdc(solver_cmd, params, crowded_topo, crowded_placement):
    scenario = preset_scenario(Preset.BROWN, crowded_placement, pue_af=1.2)
    result = solve(crowded_topo, flat_demand(60, 1, 156.0), params, scenario, _options(solver_cmd))

    assert result.ok
    shares = result.plan.tier_shares()
    assert shares[Tier.AFDC] == 0.0
    assert shares[Tier.MFDC] == pytest.approx(100.0 * 9000.0 / 9360.0, rel=1e-12)
    assert shares[Tier.CDC] == pytest.approx(100.0 * 360.0 / 9360.0, rel=1e-12)


# ---------------------------------------------------------------------------
# Bounds and monotonicity
# ---------------------------------------------------------------------------


def test_lp_relaxation_bounds_the_milp(solver_cmd, params, two_node_topo, two_node_placement):
    scenario = preset_scenario(Preset.BROWN, two_node_placement, pue_af=1.2)
    demand = flat_demand(2, 3, 45.0)
    model = build_model(two_node_topo, demand, params, scenario)

    milp = invoke_solver(emit_mps(model).text, solver_command=solver_cmd, time_limit_s=300)
    lp = invoke_solver(emit_mps(model.relaxed()).text, solver_command=solver_cmd, time_limit_s=300)

    assert lp.objective <= milp.objective + 1e-6


def test_brown_energy_rises_with_afdc_pue(solver_cmd, params, two_node_topo, two_node_placement):
    demand = DemandProfile(np.array([[20.0, 120.0, 60.0], [80.0, 10.0, 150.0]]))
    brown = []
    for pue_af in (1.1, 1.15, 1.2):
        scenario = preset_scenario(Preset.BROWN, two_node_placement, pue_af=pue_af)
        brown.append(solve(two_node_topo, demand, params, scenario, _options(solver_cmd)).report.brown_kwh)

    assert all(lo <= hi + 1e-6 for lo, hi in zip(brown, brown[1:]))


@pytest.mark.parametrize("seed", range(RANDOM_ESD_CONFIGS))
def test_adding_an_esd_never_costs_brown_energy(seed, solver_cmd, params, two_node_topo, two_node_placement):
    rng = np.random.default_rng(1000 + seed)
    demand = DemandProfile(np.round(rng.uniform(0, 60, size=(2, 24)), 1))
    solar = preset_scenario(Preset.RENEWABLE_SOLAR, two_node_placement, pue_af=float(rng.choice([1.1, 1.2])))
    with_esd = preset_scenario(Preset.RENEWABLE_SOLAR_ESD, two_node_placement, pue_af=solar.pue_af)

    without = solve(two_node_topo, demand, params, solar, _options(solver_cmd))
    stored = solve(two_node_topo, demand, params, with_esd, _options(solver_cmd))

    assert without.ok and stored.ok
    assert stored.report.brown_kwh <= without.report.brown_kwh + 1e-6


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


def test_calibration_savings_fall_in_their_bands(solver_cmd):
    setup = load_run_config(DATA_DIR / "scenario_c.cfg")
    baseline, solar, stored = (
        solve(setup.topo, setup.demand, setup.params, scenario, _options(solver_cmd))
        for scenario in study_scenarios(setup, include_esd=True)
    )

    assert baseline.ok and solar.ok and stored.ok
    fog_savings = compare_reports(baseline.report, solar.report)
    esd_savings = compare_reports(solar.report, stored.report)
    assert 25.0 <= fog_savings.transport_pct <= 45.0
    assert 3.0 <= esd_savings.transport_pct <= 12.0
