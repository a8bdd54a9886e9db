import pytest

from vod_placement.errors import TopologyError
from vod_placement.scenario import DEFAULT_TOPOLOGY
from vod_placement.topology import (
    SitePlacement,
    default_placement,
    load_placement,
    load_topology,
    shortest_physical_path,
)

SQUARE = """
NODE A 1
NODE B 2
NODE C 0
NODE D 1
LINK A B 100 4
LINK B D 100 4
LINK A C 100 4
LINK C D 100 4
"""


@pytest.fixture
def nsfnet():
    return load_topology(DEFAULT_TOPOLOGY.read_text(encoding="utf-8"))


def test_shipped_nsfnet_loads(nsfnet):
    assert len(nsfnet.labels) == 14
    assert len(nsfnet.links) == 21
    assert len(nsfnet.groups) == 14


def test_groups_are_numbered_node_by_node():
    topo = load_topology(SQUARE)
    assert topo.group_home == (0, 1, 1, 3)
    assert topo.groups_at(1) == (1, 2)
    assert topo.groups_at(2) == ()


def test_link_only_nodes_get_one_group():
    topo = load_topology("NODE A 2\nLINK A B 10 1\n")
    assert topo.labels == ("A", "B")
    assert topo.groups_per_node == (2, 1)


def test_equal_length_routes_break_ties_by_node_sequence():
    topo = load_topology(SQUARE)
    path = shortest_physical_path(topo, 0, 3)
    assert path.nodes == (0, 1, 3)
    assert path.total_km == 200
    assert path.arcs == ((0, 1), (1, 3))
    assert topo.path(0, 3) is topo.path(0, 3)


def test_path_to_self_is_empty(nsfnet):
    path = nsfnet.path(4, 4)
    assert path.nodes == ()
    assert path.arcs == ()
    assert path.link_ids == ()
    assert path.total_km == 0.0


def test_nsfnet_paths_are_symmetric_in_length(nsfnet):
    for src in nsfnet.nodes:
        for dst in nsfnet.nodes:
            assert nsfnet.path(src, dst).total_km == nsfnet.path(dst, src).total_km


def test_every_problem_is_reported():
    text = """
    NODE A 1
    NODE A 1
    LINK A A 10 1
    LINK A B -5 1
    LINK A B 10 0
    ROUTER X
    """
    with pytest.raises(TopologyError) as info:
        load_topology(text)

    errors = info.value.errors
    assert len(errors) == 5
    assert "duplicate node 'A'" in errors[0]
    assert "self-loop" in errors[1]
    assert "non-positive distance" in errors[2]
    assert "non-positive fibre count" in errors[3]
    assert "unknown record 'ROUTER'" in errors[4]


def test_duplicate_link_names_first_line():
    with pytest.raises(TopologyError, match="first on line 1"):
        load_topology("LINK A B 10 1\nLINK B A 20 1\n")


def test_disconnected_graph_is_rejected():
    with pytest.raises(TopologyError, match="disconnected"):
        load_topology("NODE A 1\nNODE B 1\nNODE C 1\nLINK A B 10 1\n")


def test_empty_topology_is_rejected():
    with pytest.raises(TopologyError, match="empty topology"):
        load_topology("# nothing here\n")


def test_load_placement_resolves_labels():
    topo = load_topology(SQUARE)
    placement = load_placement("CDC A\nMFDC D\nAFDC all\n", topo)
    assert placement.cdcs == (0,)
    assert placement.mfdcs == (3,)
    assert placement.afdcs == (0, 1, 2, 3)
    assert placement.without_fog() == SitePlacement(cdc_nodes=frozenset({0}))


def test_load_placement_collects_errors():
    topo = load_topology(SQUARE)
    with pytest.raises(TopologyError) as info:
        load_placement("CDC Z\nAFDC 9\nAFDC x\nEDGE A\n", topo)
    assert len(info.value.errors) == 4


def test_placement_without_cdc_is_rejected():
    topo = load_topology(SQUARE)
    with pytest.raises(TopologyError, match="no CDC"):
        load_placement("AFDC 0\n", topo)


def test_default_placement_picks_central_nodes(nsfnet):
    placement = default_placement(nsfnet, cdc_count=3)
    assert len(placement.cdc_nodes) == 3
    assert placement.mfdc_nodes == frozenset()
    assert placement.afdcs == tuple(nsfnet.groups)
    assert default_placement(nsfnet, cdc_count=3) == placement


def test_default_placement_caps_at_node_count():
    topo = load_topology("NODE A 1\nNODE B 1\nLINK A B 10 1\n")
    assert default_placement(topo).cdcs == (0, 1)
