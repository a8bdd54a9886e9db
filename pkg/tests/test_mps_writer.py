import pytest

from tests.conftest import flat_demand
from vod_placement.errors import ModelError
from vod_placement.milp import MilpModel, Sense, VarKind, build_model, emit_mps, parse_mps
from vod_placement.milp.mps import format_number
from vod_placement.scenario import Preset, preset_scenario


def _tiny() -> MilpModel:
    model = MilpModel("TINY")
    model.add_var("x", upper=4.5)
    model.add_var("n", VarKind.INTEGER, upper=5)
    model.add_constraint("c1", [("x", 1.0), ("n", 2.0)], Sense.GE, 3.0)
    model.add_objective([("x", 1.0), ("n", 0.5)])
    return model


TINY_MPS = """\
NAME          TINY
ROWS
 N  obj
 G  c1
COLUMNS
    x         obj       1.0
    x         c1        1.0
    MARK0001  'MARKER'                 'INTORG'
    n         obj       0.5
    n         c1        2.0
    MARK0002  'MARKER'                 'INTEND'
RHS
    RHS       c1        3.0
BOUNDS
 UP BND       x         4.5
 UI BND       n         5.0
ENDATA
"""


def test_tiny_model_matches_hand_written_file():
    document = emit_mps(_tiny())
    assert document.text == TINY_MPS
    assert document.renamed == {}
    assert document.name_map_text() == ""


def test_ranges_binaries_and_fixed_bounds():
    model = MilpModel("R")
    model.add_var("y", lower=2.0, upper=2.0)
    model.add_var("z", VarKind.BINARY)
    model.add_var("k", VarKind.INTEGER, lower=1.0)
    model.add_constraint("r1", [("y", 1.0), ("z", -3.0)], Sense.LE, 7.0, range=2.0)
    model.add_constraint("r2", [("k", 1.0)], Sense.EQ, 0.0, range=5.0)

    lines = emit_mps(model).text.splitlines()

    assert "RANGES" in lines
    assert "    RNG       r1        2.0" in lines
    assert not any("r2" in line and "RNG" in line for line in lines)
    assert " FX BND       y         2.0" in lines
    assert " BV BND       z" in lines
    assert " LI BND       k         1.0" in lines
    assert " PL BND       k" in lines
    # r2 has no nonzero rhs and k is its only column
    assert not any(line.startswith("    RHS       r2") for line in lines)


def test_long_names_are_shortened_and_mapped():
    model = MilpModel("NAMES")
    model.add_var("longvariable1")
    model.add_var("longvariable2")
    model.add_constraint("row_with_long_name", [("longvariable1", 1.0), ("longvariable2", 1.0)], Sense.LE, 1.0)

    document = emit_mps(model)

    assert document.columns == {"longvariable1": "longvari", "longvariable2": "_0000001"}
    assert document.rows == {"row_with_long_name": "row_with"}
    assert document.column_lookup()["_0000001"] == "longvariable2"
    assert "_0000001 longvariable2\n" in document.name_map_text()
    assert "    _0000001  row_with  1.0" in document.text.splitlines()


def test_names_with_spaces_are_rejected():
    model = MilpModel("BAD")
    model.add_var("a b")
    with pytest.raises(ModelError, match="cannot be written"):
        emit_mps(model)


@pytest.mark.parametrize(
    "value, expected",
    [
        (0, "0"),
        (0.0, "0"),
        (1.356, "1.356"),
        (-2.5, "-2.5"),
        (1.0 / 3.0, "0.3333333333"),
        (1e-7, "1e-07"),
        (123456789012345.0, "1.234568e+14"),
    ],
)
def test_format_number_fits_the_field(value, expected):
    assert format_number(value) == expected
    assert len(format_number(value)) <= 12


def test_built_model_is_deterministic_and_reads_back(two_node_topo, params, two_node_placement):
    scenario = preset_scenario(Preset.BROWN, two_node_placement)
    demand = flat_demand(2, 3, 45.0)

    first = build_model(two_node_topo, demand, params, scenario)
    second = build_model(two_node_topo, demand, params, scenario)
    text = emit_mps(first).text

    assert text == emit_mps(second).text

    summary = parse_mps(text)
    dims = first.dims()
    assert summary.name == "VODPLACE"
    assert (summary.rows, summary.columns, summary.integers, summary.nonzeros) == (
        dims.rows,
        dims.columns,
        dims.integers,
        dims.nonzeros,
    )


def test_esd_model_reads_back(one_node_topo, params, one_node_placement):
    scenario = preset_scenario(Preset.RENEWABLE_SOLAR_ESD, one_node_placement)
    model = build_model(one_node_topo, flat_demand(1, 24, 20.0), params, scenario)

    summary = parse_mps(emit_mps(model).text)

    assert summary.integers == model.dims().integers
    assert any(kind == "BV" for bounds in summary.bounds.values() for kind, _ in bounds)


def test_parse_mps_rejects_unknown_sections_and_rows():
    with pytest.raises(ModelError, match="unknown section 'OBJSENSE'"):
        parse_mps("NAME          X\nOBJSENSE\n    MAX\n")
    broken = TINY_MPS.replace("    x         c1        1.0", "    x         c9        1.0")
    with pytest.raises(ModelError, match="undeclared row c9"):
        parse_mps(broken)
