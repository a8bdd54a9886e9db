import numpy as np
import pytest

from tests.conftest import flat_demand
from vod_placement.demand import (
    PEAK_HOUR,
    TROUGH_HOUR,
    DemandProfile,
    diurnal_curve,
    emit_demand,
    load_demand,
    synth_demand,
)
from vod_placement.errors import DemandError


def test_load_demand_fills_missing_groups_with_zero(two_node_topo):
    profile = load_demand("group,h0,h1\n1,5,7.5\n", two_node_topo, hours=2)
    assert profile.gbps.tolist() == [[0.0, 0.0], [5.0, 7.5]]


def test_emitted_demand_reads_back_exactly(two_node_topo):
    profile = DemandProfile(np.array([[0.1, 2.0 / 3.0], [1e-7, 250.0]]))
    assert load_demand(emit_demand(profile), two_node_topo, hours=2) == profile


@pytest.mark.parametrize(
    "text, message",
    [
        ("", "empty demand file"),
        ("grp,h0\n0,1\n", "must start with 'group'"),
        ("group,h1\n0,1\n", "missing hour column h0"),
        ("group,h0,extra\n0,1,2\n", "unexpected column 'extra'"),
        ("group,h0\n0\n", "row 2: expected 2 cells"),
        ("group,h0\nx,1\n", "row 2: group id 'x'"),
        ("group,h0\n5,1\n", "row 2: unknown group id 5"),
        ("group,h0\n0,1\n0,2\n", "row 3: group 0 repeated"),
        ("group,h0\n0,abc\n", "row 2 column h0: malformed"),
        ("group,h0\n1,-3\n", "row 2 column h0: negative"),
    ],
)
def test_load_demand_errors_name_the_cell(two_node_topo, text, message):
    with pytest.raises(DemandError, match=message):
        load_demand(text, two_node_topo, hours=1)


def test_profile_is_read_only():
    profile = flat_demand(2, 3, 1.0)
    with pytest.raises(ValueError):
        profile.gbps[0, 0] = 5.0


def test_profile_rejects_bad_matrices():
    with pytest.raises(DemandError):
        DemandProfile(np.array([1.0, 2.0]))
    with pytest.raises(DemandError, match="non-finite"):
        DemandProfile(np.array([[np.nan]]))
    with pytest.raises(DemandError, match="group 0 hour 1"):
        DemandProfile(np.array([[1.0, -1.0]]))


def test_check_against_counts_groups(two_node_topo):
    with pytest.raises(DemandError, match="3 groups"):
        flat_demand(3, 24, 1.0).check_against(two_node_topo)


def test_evening_peak_curve_shape():
    curve = diurnal_curve("evening_peak", ratio=4.0)
    assert curve.max() == pytest.approx(1.0)
    assert curve.min() == pytest.approx(0.25)
    assert int(np.argmax(curve)) == PEAK_HOUR
    assert int(np.argmin(curve)) == TROUGH_HOUR
    assert np.all(np.diff(curve[TROUGH_HOUR:PEAK_HOUR + 1]) > 0)


def test_flat_curve_and_bad_shape():
    assert diurnal_curve("flat").tolist() == [1.0] * 24
    with pytest.raises(DemandError):
        diurnal_curve("weekend")
    with pytest.raises(DemandError):
        diurnal_curve("evening_peak", ratio=0.5)


def test_synth_demand_scales_every_group(two_node_topo):
    profile = synth_demand(250.0, "evening_peak", two_node_topo)
    assert profile.gbps.shape == (2, 24)
    assert profile.at(0, PEAK_HOUR) == pytest.approx(250.0)
    assert np.array_equal(profile.gbps[0], profile.gbps[1])
    assert profile.scaled(2.0).at(1, PEAK_HOUR) == pytest.approx(500.0)
