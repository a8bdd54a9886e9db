import pytest

from vod_placement.config import PowerParams
from vod_placement.errors import CapacityError, ModelError
from vod_placement.plan import AfdcEnergy, GroupFlow, PlacementPlan, zero_plan
from vod_placement.power import (
    access_group_power,
    access_power,
    core_power,
    core_usage,
    dc_power,
    evaluate_plan,
    metro_power,
    read_breakdown_csv,
    steps,
    write_breakdown_csv,
)
from vod_placement.scenario import Preset, ScenarioConfig, Tier, preset_scenario
from vod_placement.topology import load_topology


def test_core_power_two_nodes_one_wavelength(two_node_topo, params):
    # 2 ports + 2 transponders + 11 EDFAs on one fibre + 2 optical switches, × 1.5
    assert core_power(two_node_topo, {(0, 1): 30.0}, params) == pytest.approx(3606.0)
    assert core_power(two_node_topo, {(0, 1): 30.0}, params, include_idle=False) == pytest.approx(3351.0)


def test_core_without_traffic_only_draws_optical_switches(two_node_topo, params):
    usage = core_usage(two_node_topo, {}, params)
    assert usage.traffic_w == 0
    assert usage.idle_w == pytest.approx(2 * 85 * 1.5)


def test_core_counts_regenerators_on_long_paths(params):
    topo = load_topology("NODE A 1\nNODE B 1\nLINK A B 3000 8\n")
    usage = core_usage(topo, {(0, 1): 40.0}, params)
    assert usage.wavelengths == {(0, 1): 1}
    assert usage.regenerator_w == pytest.approx(334.0)


def test_core_rejects_fibre_overload(params):
    topo = load_topology("NODE A 1\nNODE B 1\nLINK A B 100 1\n")
    # 17 wavelengths need two fibres; the link only has one
    with pytest.raises(CapacityError):
        core_usage(topo, {(0, 1): 17 * 40.0}, params)


def test_core_rejects_negative_traffic(two_node_topo, params):
    with pytest.raises(ModelError):
        core_usage(two_node_topo, {(0, 1): -1.0}, params)


def test_steps_absorb_solver_noise_at_boundaries():
    assert steps(40.0, 40.0) == 1
    assert steps(40.0 * (1 + 1e-8), 40.0) == 1
    assert steps(41.0, 40.0) == 2
    assert steps(0.0, 40.0) == 0


def test_metro_golden_values(params):
    assert metro_power({0: 600.0}, params) == pytest.approx(997.5)
    assert metro_power({0: 601.0}, params) == pytest.approx((2 * 470 + 16 * 13) * 1.5)
    assert metro_power({0: 0.0, 1: 0.0}, params) == 0


def test_access_golden_values(params):
    assert access_power({0: 200.0}, params) == pytest.approx(2712.0)
    assert access_power({0: 160.0}, params) == pytest.approx(1356.0)
    assert access_power({0: 0.0}, params) == 0


def test_access_respects_olt_cap():
    capped = PowerParams(max_olts_per_group=1)
    with pytest.raises(CapacityError):
        access_group_power(200.0, capped, group=3)


def test_access_caps_a_group_at_both_olt_directions(params):
    assert access_power({0: 320.0}, params) == pytest.approx(2712.0)
    with pytest.raises(CapacityError, match="OLTs of group 0"):
        access_power({0: 400.0}, params)


def test_afdc_capacity_is_88_servers(params):
    expected = (88 * 300 + 1 * 210 + 4 * 13) * 1.1
    assert dc_power(Tier.AFDC, 158.4, params) == pytest.approx(expected)
    with pytest.raises(CapacityError):
        dc_power(Tier.AFDC, 158.5, params)


def test_dc_ratio_mode_scales_compute(params):
    ratio = params.model_copy(update={"dc_power_mode": "ratio"})
    assert dc_power(Tier.CDC, 1.8, ratio) == pytest.approx(300 * 1.3 * 1.1)


def test_dc_power_zero_load_is_zero(params):
    for tier in Tier:
        assert dc_power(tier, 0.0, params) == 0


def _brown(placement):
    return preset_scenario(Preset.BROWN, placement)


def test_evaluate_plan_cdc_streaming(two_node_topo, params, two_node_placement):
    plan = PlacementPlan(hours=1, groups=2)
    plan.set_flow(0, 1, GroupFlow(cdc={0: 30.0}))

    report = evaluate_plan(plan, two_node_topo, _brown(two_node_placement), params)
    hour = report.hours[0]

    assert hour.core_w == pytest.approx(3351.0)
    assert hour.core_idle_w == pytest.approx(255.0)
    assert hour.metro_w == pytest.approx((470 + 13) * 1.5)
    assert hour.access_w == pytest.approx(1356.0)
    assert hour.dc_w[Tier.CDC] == pytest.approx((17 * 300 + 470 + 30) * 1.1)
    assert report.brown_kwh == pytest.approx(11.5915)
    assert report.transport_kwh == pytest.approx(5.4315)


def test_local_afdc_traffic_uses_no_core_or_metro(two_node_topo, params, two_node_placement):
    plan = PlacementPlan(hours=1, groups=2)
    plan.set_flow(0, 1, GroupFlow(afdc=30.0))

    hour = evaluate_plan(plan, two_node_topo, _brown(two_node_placement), params).hours[0]

    assert hour.core_w == 0
    assert hour.metro_w == 0
    assert hour.access_w == pytest.approx(1356.0)


def test_zero_plan_has_zero_brown_energy(two_node_topo, params, two_node_placement):
    report = evaluate_plan(zero_plan(24, 2), two_node_topo, _brown(two_node_placement), params)
    assert report.brown_kwh == 0
    assert report.transport_kwh == 0
    assert report.idle_kwh == pytest.approx(24 * 255.0 / 1000.0)


def test_renewable_and_solar_sources_cut_brown_power(two_node_topo, params, two_node_placement):
    scenario = preset_scenario(Preset.RENEWABLE_SOLAR, two_node_placement)
    plan = PlacementPlan(hours=1, groups=2)
    plan.set_flow(0, 0, GroupFlow(afdc=1.8))
    plan.set_flow(0, 1, GroupFlow(mfdc=10.0))
    afdc_kwh = dc_power(Tier.AFDC, 1.8, params) / 1000.0
    plan.energy[(0, 0)] = AfdcEnergy(serve=afdc_kwh)

    hour = evaluate_plan(plan, two_node_topo, scenario, params).hours[0]

    assert hour.dc_brown_w[Tier.MFDC] == 0
    assert hour.dc_brown_w[Tier.AFDC] == pytest.approx(0.0)
    assert hour.brown_w == pytest.approx(hour.transport_w)
    assert hour.renewable_w == pytest.approx(hour.dc_total_w)


def test_scenario_pues_drive_evaluation(one_node_topo, params, one_node_placement):
    plan = PlacementPlan(hours=1, groups=1)
    plan.set_flow(0, 0, GroupFlow(afdc=1.8))
    low = ScenarioConfig(pue_af=1.1, placement=one_node_placement)
    high = ScenarioConfig(pue_af=1.2, placement=one_node_placement)

    low_w = evaluate_plan(plan, one_node_topo, low, params).hours[0].dc_w[Tier.AFDC]
    high_w = evaluate_plan(plan, one_node_topo, high, params).hours[0].dc_w[Tier.AFDC]

    assert high_w / low_w == pytest.approx(1.2 / 1.1)


def test_breakdown_csv_reads_back(two_node_topo, params, two_node_placement):
    plan = PlacementPlan(hours=2, groups=2)
    plan.set_flow(0, 1, GroupFlow(afdc=5.0, cdc={0: 41.0}))
    plan.set_flow(1, 0, GroupFlow(mfdc=0.0, cdc={0: 12.5}))
    report = evaluate_plan(plan, two_node_topo, _brown(two_node_placement), params)

    again = read_breakdown_csv(write_breakdown_csv(report))

    assert again.brown_kwh == pytest.approx(report.brown_kwh)
    assert [b.core_w for b in again.hours] == [b.core_w for b in report.hours]
    assert [b.dc_w for b in again.hours] == [b.dc_w for b in report.hours]
