import pytest

from tests.conftest import flat_demand
from vod_placement.energy import SolarProfile
from vod_placement.errors import ModelError
from vod_placement.milp import MilpModel, Names, Sense, VarKind, build_model
from vod_placement.milp.model import Constraint
from vod_placement.scenario import EnergySource, Preset, Tier, preset_scenario
from vod_placement.topology import SitePlacement


def _rows(model):
    return {c.name: c for c in model.constraints}


# ---------------------------------------------------------------------------
# MilpModel
# ---------------------------------------------------------------------------


def test_model_rejects_duplicate_and_unknown_names():
    model = MilpModel("T")
    model.add_var("x")
    with pytest.raises(ModelError, match="duplicate"):
        model.add_var("x")
    with pytest.raises(ModelError, match="unknown variable 'y'"):
        model.add_constraint("r", [("y", 1.0)], Sense.LE, 1.0)
    with pytest.raises(ModelError, match="below lower bound"):
        model.add_var("z", lower=2.0, upper=1.0)
    with pytest.raises(ModelError, match="objective references"):
        model.add_objective([("w", 1.0)])


def test_constraint_terms_are_merged():
    model = MilpModel("T")
    model.add_var("x")
    row = model.add_constraint("r", [("x", 1.0), ("x", 2.0)], Sense.GE, 3.0)
    assert row.terms == (("x", 3.0),)


def test_ranged_rows_bound_both_sides():
    row = Constraint("r", (("x", 1.0),), Sense.GE, 2.0, range=1.5)
    assert row.interval() == (2.0, 3.5)
    assert row.violation({"x": 4.0}) == pytest.approx(0.5)
    assert row.violation({"x": 1.0}) == pytest.approx(1.0)
    assert row.violation({"x": 3.0}) == 0.0


def test_violations_cover_bounds_and_rows():
    model = MilpModel("T")
    model.add_var("x", upper=1.0)
    model.add_constraint("r", [("x", 1.0)], Sense.EQ, 0.5)
    assert model.violations({"x": 0.5}) == []
    assert [name for name, _ in model.violations({"x": 2.0})] == ["x", "r"]


def test_relaxation_drops_integrality_only():
    model = MilpModel("TINY")
    model.add_var("n", VarKind.INTEGER, upper=3)
    model.add_var("b", VarKind.BINARY)
    model.add_constraint("r", [("n", 1.0), ("b", 1.0)], Sense.GE, 1.0)

    lp = model.relaxed()

    assert lp.dims().integers == 0
    assert lp.variables["b"].upper == 1.0
    assert lp.dims().rows == model.dims().rows
    assert model.dims().integers == 2


# ---------------------------------------------------------------------------
# build_model
# ---------------------------------------------------------------------------


def test_brown_single_node_model(one_node_topo, params, one_node_placement):
    scenario = preset_scenario(Preset.BROWN, one_node_placement)
    model = build_model(one_node_topo, flat_demand(1, 1, 1.8), params, scenario)
    rows = _rows(model)

    assert rows["dm0_0"].sense is Sense.EQ
    assert rows["dm0_0"].rhs == 1.8
    assert {v for v, _ in rows["dm0_0"].terms} == {Names.afdc(0, 0), Names.mfdc(0, 0), Names.cdc(0, 0, 0)}
    assert model.variables[Names.afdc(0, 0)].upper == pytest.approx(158.4)

    assert model.objective[Names.olts(0, 0)] == pytest.approx(1.356)
    assert model.objective[Names.servers(Tier.AFDC, 0, 0)] == pytest.approx(0.33)
    assert model.objective[Names.metro_switches(0, 0)] == pytest.approx(0.705)
    # local CDC: no lightpaths, and the optical-switch floor is not a variable
    assert not any(name.startswith("wl") or name.startswith("fb") for name in model.variables)


def test_oracle_point_has_the_expected_objective(one_node_topo, params, one_node_placement):
    scenario = preset_scenario(Preset.BROWN, one_node_placement)
    model = build_model(one_node_topo, flat_demand(1, 1, 1.8), params, scenario)
    values = {name: 0.0 for name in model.variables}
    values.update(
        {
            Names.afdc(0, 0): 1.8,
            Names.servers(Tier.AFDC, 0, 0): 1.0,
            Names.switches(Tier.AFDC, 0, 0): 1.0,
            Names.ports(Tier.AFDC, 0, 0): 1.0,
            Names.olts(0, 0): 1.0,
        }
    )

    assert model.violations(values) == []
    assert model.objective_value(values) == pytest.approx(1.9313)


def test_core_variables_follow_the_shortest_path(two_node_topo, params, two_node_placement):
    scenario = preset_scenario(Preset.BROWN, two_node_placement)
    model = build_model(two_node_topo, flat_demand(2, 2, 10.0), params, scenario)

    assert Names.wavelengths(0, 1, 1) in model.variables
    assert Names.wavelengths(0, 0, 1) not in model.variables
    assert model.variables[Names.fibres(0, 1, 0)].upper == 8
    # 2 × (1000 + 73) W per lightpath, no regenerator at 800 km
    assert model.objective[Names.wavelengths(0, 1, 0)] == pytest.approx(2 * 1073 * 1.5 / 1000)
    # 11 EDFAs per fibre at 800 km
    assert model.objective[Names.fibres(0, 1, 0)] == pytest.approx(11 * 8 * 1.5 / 1000)


def test_renewable_sites_have_no_equipment_cost(two_node_topo, params, two_node_placement):
    scenario = preset_scenario(Preset.RENEWABLE, two_node_placement)
    model = build_model(two_node_topo, flat_demand(2, 1, 10.0), params, scenario)

    assert not any(name.startswith(("svC", "svM", "swC", "ptM")) for name in model.variables)
    assert Names.servers(Tier.AFDC, 0, 0) in model.variables


def test_scenario_pues_reach_the_objective(one_node_topo, params, one_node_placement):
    scenario = preset_scenario(Preset.BROWN, one_node_placement, pue_af=1.2)
    model = build_model(one_node_topo, flat_demand(1, 1, 1.0), params, scenario)
    assert model.objective[Names.servers(Tier.AFDC, 0, 0)] == pytest.approx(0.36)


def test_ratio_mode_uses_servers_only(one_node_topo, params, one_node_placement):
    ratio = params.model_copy(update={"dc_power_mode": "ratio"})
    scenario = preset_scenario(Preset.BROWN, one_node_placement)
    model = build_model(one_node_topo, flat_demand(1, 1, 1.0), ratio, scenario)

    assert Names.switches(Tier.CDC, 0, 0) not in model.variables
    assert model.objective[Names.servers(Tier.CDC, 0, 0)] == pytest.approx(300 * 1.3 * 1.1 / 1000)


def test_olt_metro_rows_cap_upstream_flow(two_node_topo, params, two_node_placement):
    scenario = preset_scenario(Preset.BROWN, two_node_placement)
    rows = _rows(build_model(two_node_topo, flat_demand(2, 1, 250.0), params, scenario))

    assert rows["om1_0"].sense is Sense.LE
    assert rows["om1_0"].rhs == 160.0
    assert {v for v, _ in rows["om1_0"].terms} == {Names.mfdc(1, 0), Names.cdc(0, 1, 0)}
    assert {v for v, _ in rows["om0_0"].terms} == {Names.cdc(0, 0, 0)}


def test_cdc_capacity_rows_only_when_capped(two_node_topo, params, two_node_placement):
    scenario = preset_scenario(Preset.BROWN, two_node_placement)
    demand = flat_demand(2, 1, 1.0)
    assert "cc0_0" not in _rows(build_model(two_node_topo, demand, params, scenario))

    capped = params.model_copy(update={"cdc_capacity_gbps": 100.0})
    rows = _rows(build_model(two_node_topo, demand, capped, scenario))
    assert rows["cc0_0"].rhs == 100.0


def test_solar_esd_rows(one_node_topo, params, one_node_placement):
    esd_scenario = preset_scenario(Preset.RENEWABLE_SOLAR_ESD, one_node_placement).with_updates(
        solar_profile=SolarProfile((400.0,) * 24),
        initial_soc_kwh=3.0,
    )
    model = build_model(one_node_topo, flat_demand(1, 2, 5.0), params, esd_scenario)
    rows = _rows(model)
    esd = esd_scenario.esd
    generation = 400.0 * 250 * 0.17 / 1000

    assert rows["bal0_0"].rhs == pytest.approx(generation)
    assert rows["soc0_0"].rhs == pytest.approx(esd.eta_discharge * 3.0)
    assert rows["soc0_1"].rhs == 0.0
    assert rows["cyc0"].rhs == 3.0
    assert {"xq0_0", "xr0_1", "use0_1"} <= set(rows)
    assert model.variables[Names.charging(0, 0)].kind is VarKind.BINARY
    assert model.objective[Names.serve(0, 0)] == pytest.approx(-1.0)
    # solar AFDCs pin their equipment counts to the ceiling
    assert rows["k" + Names.servers(Tier.AFDC, 0, 0)].range is not None


def test_non_cyclic_esd_has_no_final_row(one_node_topo, params, one_node_placement):
    scenario = preset_scenario(Preset.RENEWABLE_SOLAR_ESD, one_node_placement).with_updates(cyclic_esd=False)
    model = build_model(one_node_topo, flat_demand(1, 2, 5.0), params, scenario)
    assert "cyc0" not in _rows(model)


def test_solar_without_esd_has_no_storage(one_node_topo, params, one_node_placement):
    scenario = preset_scenario(Preset.RENEWABLE_SOLAR, one_node_placement)
    model = build_model(one_node_topo, flat_demand(1, 24, 5.0), params, scenario)
    assert not any(name.startswith(("sq", "sr", "so", "sz")) for name in model.variables)
    assert model.layout.energy_groups == (0,)
    assert model.layout.generation_kwh[12] == pytest.approx(42.5)


def test_build_model_input_errors(two_node_topo, params, two_node_placement):
    scenario = preset_scenario(Preset.BROWN, two_node_placement)
    with pytest.raises(ModelError, match="3 groups"):
        build_model(two_node_topo, flat_demand(3, 1, 1.0), params, scenario)
    with pytest.raises(ModelError, match="horizon"):
        build_model(two_node_topo, flat_demand(2, 25, 1.0), params, scenario)
    elsewhere = scenario.with_updates(placement=SitePlacement(cdc_nodes=frozenset({5})))
    with pytest.raises(ModelError, match="placement"):
        build_model(two_node_topo, flat_demand(2, 1, 1.0), params, elsewhere)


def test_sources_follow_the_scenario(two_node_topo, params, two_node_placement):
    scenario = preset_scenario(Preset.BROWN, two_node_placement).with_updates(mfdc_source=EnergySource.RENEWABLE)
    model = build_model(two_node_topo, flat_demand(2, 1, 1.0), params, scenario)
    assert Names.servers(Tier.MFDC, 1, 0) not in model.variables
    assert Names.servers(Tier.CDC, 0, 0) in model.variables
