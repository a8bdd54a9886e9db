import pytest
from pydantic import ValidationError

from vod_placement.config import (
    EsdParams,
    PowerParams,
    Settings,
    SolarArray,
    load_power_params,
    parse_key_values,
)
from vod_placement.errors import ConfigError
from vod_placement.scenario import (
    DATA_DIR,
    EnergySource,
    Preset,
    ScenarioConfig,
    brown_cdc_baseline,
    load_run_config,
    preset_scenario,
)


# ---------------------------------------------------------------------------
# key = value documents and PowerParams
# ---------------------------------------------------------------------------


def test_parse_key_values_skips_comments_and_lowercases():
    entries = parse_key_values("# header\nOLT_W = 500  # watts\n\nname = x\n")
    assert entries["olt_w"].value == "500"
    assert entries["olt_w"].line == 2
    assert entries["name"].line == 4


@pytest.mark.parametrize(
    "text, message",
    [
        ("olt_w 500\n", "expected 'key = value'"),
        (" = 3\n", "empty key"),
        ("a = 1\nA = 2\n", "duplicate key 'a' \\(first on line 1\\)"),
    ],
)
def test_parse_key_values_errors(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_key_values(text, "p.txt")


def test_power_params_defaults():
    params = PowerParams()
    assert params.afdc_capacity_gbps == pytest.approx(158.4)
    assert params.mfdc_capacity_gbps == pytest.approx(9000.0)
    assert params.edge_port_w == params.fog_router_port_w
    assert params.olt_group_capacity_gbps == pytest.approx(320.0)
    assert params.model_copy(update={"max_olts_per_group": 1}).olt_group_capacity_gbps == pytest.approx(160.0)


def test_load_power_params_overrides_and_validates():
    params = load_power_params("olt_w = 500\ncdc_capacity_gbps = none\ndc_power_mode = Ratio\n")
    assert params.olt_w == 500
    assert params.cdc_capacity_gbps is None
    assert params.dc_power_mode == "ratio"

    with pytest.raises(ConfigError, match="unknown parameter 'olt_watts'"):
        load_power_params("olt_watts = 5\n", "p.txt")
    with pytest.raises(ConfigError, match="pue_n"):
        load_power_params("pue_n = 0.5\n", "p.txt")
    with pytest.raises(ConfigError, match="dc_power_mode"):
        load_power_params("dc_power_mode = guess\n", "p.txt")


def test_power_params_are_frozen():
    with pytest.raises(ValidationError):
        PowerParams().olt_w = 1.0


def test_esd_rate_caps_default_to_capacity():
    esd = EsdParams(e_max=50.0)
    assert esd.charge_cap == 50.0
    assert esd.discharge_cap == 50.0
    assert EsdParams(max_discharge_kwh_per_hour=5.0).discharge_cap == 5.0


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------


def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("VOD_SOLVER_CMD", "highs {mps}")
    monkeypatch.setenv("VOD_SOLVER_DIALECT", "HiGHS")
    monkeypatch.setenv("VOD_TIME_LIMIT", "60")
    monkeypatch.setenv("VOD_SWEEP_WORKERS", "8")

    s = Settings()

    assert s.solver_cmd == "highs {mps}"
    assert s.solver_dialect == "highs"
    assert s.time_limit_s == 60.0
    assert s.sweep_workers == 8
    assert s.output_dir == "results"


def test_settings_reject_unknown_dialect(monkeypatch):
    monkeypatch.setenv("VOD_SOLVER_DIALECT", "gurobi")
    with pytest.raises(ValidationError):
        Settings()


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def test_presets(two_node_placement):
    solar = preset_scenario(Preset.RENEWABLE_SOLAR, two_node_placement)
    assert solar.cdc_source is EnergySource.RENEWABLE
    assert solar.afdc_source is EnergySource.SOLAR
    assert solar.solar_array == SolarArray()
    assert solar.esd is None

    esd = preset_scenario(Preset.RENEWABLE_SOLAR_ESD, two_node_placement, esd=EsdParams(e_max=10.0))
    assert esd.esd.e_max == 10.0

    baseline = brown_cdc_baseline(two_node_placement)
    assert baseline.placement.afdc_groups == frozenset()
    assert not baseline.uses_solar


def test_scenario_validation(two_node_placement):
    with pytest.raises(ValueError, match="only valid with solar"):
        ScenarioConfig(placement=two_node_placement, esd=EsdParams())
    with pytest.raises(ValueError, match="without an ESD"):
        ScenarioConfig(placement=two_node_placement, initial_soc_kwh=1.0)
    with pytest.raises(ValueError, match="only AFDCs"):
        ScenarioConfig(placement=two_node_placement, cdc_source=EnergySource.SOLAR)
    esd = preset_scenario(Preset.RENEWABLE_SOLAR_ESD, two_node_placement, esd=EsdParams(e_max=5.0))
    with pytest.raises(ValueError, match="exceeds the ESD capacity"):
        esd.with_updates(initial_soc_kwh=6.0)


def test_effective_params_apply_scenario_pues(params, two_node_placement):
    scenario = ScenarioConfig(pue_c=1.3, pue_mf=1.2, pue_af=1.15, placement=two_node_placement)
    effective = scenario.effective_params(params)
    assert (effective.pue_c, effective.pue_mf, effective.pue_af) == (1.3, 1.2, 1.15)
    assert params.pue_c == 1.1


def test_generation_follows_the_array(two_node_placement):
    scenario = preset_scenario(
        Preset.RENEWABLE_SOLAR, two_node_placement, solar_array=SolarArray(area_m2=10.0, efficiency=0.1)
    )
    assert scenario.generation_kwh(24)[12] == pytest.approx(1.0)
    assert brown_cdc_baseline(two_node_placement).generation_kwh(3) == [0.0, 0.0, 0.0]


# ---------------------------------------------------------------------------
# Run config files
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["scenario_b.cfg", "scenario_c.cfg", "sweep.cfg"])
def test_shipped_configs_load(name):
    setup = load_run_config(DATA_DIR / name)
    assert len(setup.topo.labels) == 14
    assert setup.demand.gbps.shape == (14, 24)
    assert setup.demand.gbps.max() == pytest.approx(250.0)
    assert setup.scenario.placement.cdcs == tuple(setup.topo.node_index(n) for n in ("2", "5", "8", "10", "13"))


def test_scenario_c_config_has_an_esd():
    setup = load_run_config(DATA_DIR / "scenario_c.cfg")
    assert setup.name == "scenario_c"
    assert setup.scenario.esd.e_max == 100.0
    assert setup.scenario.cyclic_esd
    assert setup.scenario.solar_array.area_m2 == 250.0


def _write(tmp_path, body: str):
    path = tmp_path / "run.cfg"
    path.write_text(body, encoding="utf-8")
    return path


def test_run_config_relative_files_and_overrides(tmp_path):
    (tmp_path / "two.topo").write_text("NODE A 1\nNODE B 1\nLINK A B 800 8\n", encoding="utf-8")
    (tmp_path / "two.placement").write_text("CDC A\nAFDC 1\n", encoding="utf-8")
    (tmp_path / "demand.csv").write_text(
        "group," + ",".join(f"h{h}" for h in range(24)) + "\n0," + ",".join(["2"] * 24) + "\n",
        encoding="utf-8",
    )
    path = _write(
        tmp_path,
        "topology = two.topo\nplacement = two.placement\ndemand = demand.csv\nolt_w = 500\nname = tiny\n",
    )

    setup = load_run_config(path)

    assert setup.name == "tiny"
    assert setup.params.olt_w == 500
    assert setup.scenario.placement.afdcs == (1,)
    assert setup.demand.at(0, 5) == 2.0
    assert setup.demand.at(1, 5) == 0.0


@pytest.mark.parametrize(
    "body, message",
    [
        ("demand_peak_gbps = 10\ncolour = red\n", "unknown key 'colour'"),
        ("name = x\n", "set either 'demand' or 'demand_peak_gbps'"),
        ("demand_peak_gbps = 10\nscenario = solarpunk\n", "'scenario' must be one of"),
        ("demand_peak_gbps = 10\nesd = on\n", "only valid with solar"),
        ("demand_peak_gbps = 10\ncyclic_esd = maybe\n", "must be on/off"),
        ("demand_peak_gbps = 10\nesd_e_max = -1\n", "e_max"),
        ("demand_peak_gbps = 10\ntopology = missing.topo\n", "cannot read topology file"),
    ],
)
def test_run_config_errors(tmp_path, body, message):
    with pytest.raises(ConfigError, match=message):
        load_run_config(_write(tmp_path, body))
