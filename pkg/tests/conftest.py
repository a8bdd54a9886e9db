"""Pytest fixtures for the VoD placement tests."""

import os
import shutil
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
import pytest

from vod_placement.config import PowerParams
from vod_placement.demand import DemandProfile
from vod_placement.topology import SitePlacement, load_topology

# Two core nodes 800 km apart, one access group each.
TWO_NODE_TOPOLOGY = """
NODE A 1
NODE B 1
LINK A B 800 8
"""

ONE_NODE_TOPOLOGY = "NODE A 1\n"
CROWDED_TOPOLOGY = "NODE A 60\n"


@pytest.fixture(autouse=True)
def patch_env(monkeypatch, tmp_path):
    """Keep environment-driven settings away from the developer's .env."""
    for name in (
        "VOD_SOLVER_CMD",
        "VOD_SOLVER_DIALECT",
        "VOD_TIME_LIMIT",
        "VOD_OUTPUT_DIR",
        "VOD_SWEEP_WORKERS",
        "VOD_SOLUTION_CACHE_TTL",
        "VOD_CACHE_DIR",
    ):
        monkeypatch.delenv(name, raising=False)

    from vod_placement import config

    monkeypatch.setattr(config.settings, "solver_cmd", "")
    monkeypatch.setattr(config.settings, "solver_dialect", "auto")
    monkeypatch.setattr(config.settings, "time_limit_s", 120.0)
    monkeypatch.setattr(config.settings, "output_dir", str(tmp_path / "results"))
    monkeypatch.setattr(config.settings, "sweep_workers", 2)
    monkeypatch.setattr(config.settings, "solution_cache_ttl_minutes", 0)
    monkeypatch.setattr(config.settings, "cache_dir", str(tmp_path / "cache"))


@pytest.fixture
def params():
    return PowerParams()


@pytest.fixture
def two_node_topo():
    return load_topology(TWO_NODE_TOPOLOGY)


@pytest.fixture
def one_node_topo():
    return load_topology(ONE_NODE_TOPOLOGY)


@pytest.fixture
def two_node_placement():
    """CDC at A, MFDC at B, an AFDC in both groups."""
    return SitePlacement(
        cdc_nodes=frozenset({0}),
        mfdc_nodes=frozenset({1}),
        afdc_groups=frozenset({0, 1}),
    )


@pytest.fixture
def one_node_placement():
    return SitePlacement(
        cdc_nodes=frozenset({0}),
        mfdc_nodes=frozenset({0}),
        afdc_groups=frozenset({0}),
    )


@pytest.fixture
def crowded_topo():
    """Sixty groups behind one metro node."""
    return load_topology(CROWDED_TOPOLOGY)


@pytest.fixture
def crowded_placement():
    return SitePlacement(
        cdc_nodes=frozenset({0}),
        mfdc_nodes=frozenset({0}),
        afdc_groups=frozenset(range(60)),
    )


@pytest.fixture
def solver_cmd():
    """Skip unless an external MILP solver is installed; None lets the backend pick it."""
    if not (shutil.which("cbc") or shutil.which("highs")):
        pytest.skip("no MILP solver (cbc or highs) on PATH")
    return None


def flat_demand(groups: int, hours: int, gbps: float) -> DemandProfile:
    return DemandProfile(np.full((groups, hours), float(gbps)))
