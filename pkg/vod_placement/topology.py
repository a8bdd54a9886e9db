"""
topology.py

Three-level physical architecture: the core IP-over-WDM graph, the access
groups homed at each core node, and where the data centres sit.

Topology file records (one per line, `#` starts a comment):
    NODE <id> <access_groups>
    LINK <a> <b> <km> <fibres>

Placement file records:
    CDC <node>
    MFDC <node>
    AFDC <group> | AFDC all
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Tuple

import networkx as nx

from vod_placement.errors import TopologyError

logger = logging.getLogger(__name__)

DEFAULT_CDC_COUNT = 5


# ---------------------------------------------------------------------------
# DATA MODELS
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Link:
    """Undirected fibre link between two dense node ids."""

    id: int
    a: int
    b: int
    km: float
    fibres: int


@dataclass(frozen=True, slots=True)
class PhysicalPath:
    """
    Physical route of a bypass lightpath.

    Attributes:
        nodes (tuple[int, ...]): ordered node ids, source first; empty when
            source and destination coincide.
        total_km (float): sum of hop distances.
        link_ids (tuple[int, ...]): link traversed by each hop.
    """

    nodes: Tuple[int, ...]
    total_km: float
    link_ids: Tuple[int, ...] = ()

    @property
    def arcs(self) -> Tuple[Tuple[int, int], ...]:
        """Directed (from, to) pair of every hop."""
        return tuple(zip(self.nodes, self.nodes[1:]))


@dataclass(frozen=True, eq=False)
class CoreTopology:
    """
    Validated core network. Node and group ids are dense integers.

    Attributes:
        labels: original node id of each dense node, as written in the file.
        links: fibre links in document order.
        groups_per_node: number of access groups homed at each node.
    """

    labels: Tuple[str, ...]
    links: Tuple[Link, ...]
    groups_per_node: Tuple[int, ...]
    _index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(self.labels)})

    @property
    def nodes(self) -> range:
        return range(len(self.labels))

    @cached_property
    def group_home(self) -> Tuple[int, ...]:
        """Home node of each access group; groups are numbered node by node."""
        return tuple(node for node, count in enumerate(self.groups_per_node) for _ in range(count))

    @property
    def groups(self) -> range:
        return range(len(self.group_home))

    def groups_at(self, node: int) -> Tuple[int, ...]:
        return tuple(g for g, home in enumerate(self.group_home) if home == node)

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        for link in self.links:
            g.add_edge(link.a, link.b, km=link.km, link_id=link.id)
        return g

    @cached_property
    def _path_cache(self) -> Dict[Tuple[int, int], PhysicalPath]:
        return {}

    def node_index(self, label: str) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise TopologyError([f"unknown node '{label}'"]) from None

    def link(self, link_id: int) -> Link:
        return self.links[link_id]

    def path(self, src: int, dst: int) -> PhysicalPath:
        """Memoized shortest_physical_path; topologies are immutable."""
        key = (src, dst)
        cached = self._path_cache.get(key)
        if cached is None:
            cached = shortest_physical_path(self, src, dst)
            self._path_cache[key] = cached
        return cached


@dataclass(frozen=True, slots=True)
class SitePlacement:
    """Which core nodes host CDCs and MFDCs, and which groups have an AFDC."""

    cdc_nodes: FrozenSet[int] = frozenset()
    mfdc_nodes: FrozenSet[int] = frozenset()
    afdc_groups: FrozenSet[int] = frozenset()

    @property
    def cdcs(self) -> Tuple[int, ...]:
        return tuple(sorted(self.cdc_nodes))

    @property
    def mfdcs(self) -> Tuple[int, ...]:
        return tuple(sorted(self.mfdc_nodes))

    @property
    def afdcs(self) -> Tuple[int, ...]:
        return tuple(sorted(self.afdc_groups))

    def without_fog(self) -> "SitePlacement":
        """Same CDCs, no metro or access fog sites."""
        return SitePlacement(cdc_nodes=self.cdc_nodes)

    def validate(self, topo: CoreTopology) -> None:
        errors = [f"CDC node {n} not in topology" for n in self.cdcs if n not in topo.nodes]
        errors += [f"MFDC node {n} not in topology" for n in self.mfdcs if n not in topo.nodes]
        errors += [f"AFDC group {g} not in topology" for g in self.afdcs if g not in topo.groups]
        if not self.cdc_nodes:
            errors.append("placement has no CDC")
        if errors:
            raise TopologyError(errors)


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def _records(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def load_topology(text: str) -> CoreTopology:
    """
    Parse and validate a topology document.

    Nodes are numbered in order of first appearance. A node that only
    appears in LINK records is given one access group.

    Raises:
        TopologyError: with every problem found (duplicate or self-loop
            links, non-positive distance or fibre count, disconnected graph).
    """
    errors: List[str] = []
    labels: List[str] = []
    index: Dict[str, int] = {}
    groups: Dict[int, int] = {}
    raw_links: List[Tuple[int, int, float, int]] = []
    seen_pairs: Dict[FrozenSet[int], int] = {}

    def node_of(label: str) -> int:
        if label not in index:
            index[label] = len(labels)
            labels.append(label)
        return index[label]

    for lineno, fields in _records(text):
        kind = fields[0].upper()
        if kind == "NODE":
            if len(fields) != 3:
                errors.append(f"line {lineno}: NODE expects <id> <access_groups>")
                continue
            node = node_of(fields[1])
            if node in groups:
                errors.append(f"line {lineno}: duplicate node '{fields[1]}'")
                continue
            try:
                count = int(fields[2])
            except ValueError:
                errors.append(f"line {lineno}: access group count '{fields[2]}' is not an integer")
                continue
            if count < 0:
                errors.append(f"line {lineno}: negative access group count")
                continue
            groups[node] = count
        elif kind == "LINK":
            if len(fields) != 5:
                errors.append(f"line {lineno}: LINK expects <a> <b> <km> <fibres>")
                continue
            a, b = node_of(fields[1]), node_of(fields[2])
            try:
                km = float(fields[3])
                fibres = int(fields[4])
            except ValueError:
                errors.append(f"line {lineno}: malformed distance or fibre count")
                continue
            if a == b:
                errors.append(f"line {lineno}: self-loop at node '{fields[1]}'")
                continue
            if not km > 0:
                errors.append(f"line {lineno}: non-positive distance {fields[3]}")
                continue
            if fibres <= 0:
                errors.append(f"line {lineno}: non-positive fibre count {fields[4]}")
                continue
            pair = frozenset((a, b))
            if pair in seen_pairs:
                errors.append(f"line {lineno}: duplicate link {fields[1]}-{fields[2]} (first on line {seen_pairs[pair]})")
                continue
            seen_pairs[pair] = lineno
            raw_links.append((a, b, km, fibres))
        else:
            errors.append(f"line {lineno}: unknown record '{fields[0]}'")

    if not labels and not errors:
        errors.append("empty topology")
    if errors:
        raise TopologyError(errors)

    topo = CoreTopology(
        labels=tuple(labels),
        links=tuple(Link(i, a, b, km, f) for i, (a, b, km, f) in enumerate(raw_links)),
        groups_per_node=tuple(groups.get(n, 1) for n in range(len(labels))),
    )
    if not nx.is_connected(topo.graph):
        parts = sorted(sorted(topo.labels[n] for n in comp) for comp in nx.connected_components(topo.graph))
        raise TopologyError([f"disconnected graph: components {parts}"])

    logger.info(
        "[TOPOLOGY] Loaded %d nodes, %d links, %d access groups",
        len(topo.labels),
        len(topo.links),
        len(topo.group_home),
    )
    return topo


def load_placement(text: str, topo: CoreTopology) -> SitePlacement:
    """Parse a placement document against an already validated topology."""
    errors: List[str] = []
    cdc, mfdc, afdc = set(), set(), set()
    for lineno, fields in _records(text):
        kind = fields[0].upper()
        if len(fields) != 2 or kind not in {"CDC", "MFDC", "AFDC"}:
            errors.append(f"line {lineno}: expected 'CDC <node>', 'MFDC <node>' or 'AFDC <group>'")
            continue
        target = fields[1]
        if kind == "AFDC":
            if target.lower() == "all":
                afdc.update(topo.groups)
                continue
            try:
                group = int(target)
            except ValueError:
                errors.append(f"line {lineno}: AFDC group '{target}' is not an integer")
                continue
            if group not in topo.groups:
                errors.append(f"line {lineno}: unknown access group {group}")
                continue
            afdc.add(group)
        else:
            try:
                node = topo.node_index(target)
            except TopologyError:
                errors.append(f"line {lineno}: unknown node '{target}'")
                continue
            (cdc if kind == "CDC" else mfdc).add(node)

    if errors:
        raise TopologyError(errors)
    placement = SitePlacement(frozenset(cdc), frozenset(mfdc), frozenset(afdc))
    placement.validate(topo)
    return placement


def default_placement(topo: CoreTopology, cdc_count: int = DEFAULT_CDC_COUNT) -> SitePlacement:
    """
    CDCs at the cdc_count nodes of highest km-weighted closeness, an AFDC in
    every access group, no MFDC.
    """
    closeness = nx.closeness_centrality(topo.graph, distance="km")
    ranked = sorted(topo.nodes, key=lambda n: (-closeness[n], n))
    cdcs = frozenset(ranked[: min(cdc_count, len(ranked))])
    logger.info("[TOPOLOGY] Default CDC placement: %s", [topo.labels[n] for n in sorted(cdcs)])
    return SitePlacement(cdc_nodes=cdcs, afdc_groups=frozenset(topo.groups))


# ---------------------------------------------------------------------------
# Routing
# ---------------------------------------------------------------------------


def shortest_physical_path(topo: CoreTopology, src: int, dst: int) -> PhysicalPath:
    """
    Minimum-km route between two core nodes.

    Among equal-length routes the lexicographically smallest node sequence
    wins, so repeated calls always return the same path.
    """
    for node in (src, dst):
        if node not in topo.nodes:
            raise TopologyError([f"node {node} not in topology"])
    if src == dst:
        return PhysicalPath(nodes=(), total_km=0.0)

    try:
        candidates = list(nx.all_shortest_paths(topo.graph, src, dst, weight="km"))
    except nx.NetworkXNoPath:
        raise TopologyError([f"node {dst} unreachable from {src}"]) from None

    nodes = min(tuple(p) for p in candidates)
    edges = [topo.graph.edges[u, v] for u, v in zip(nodes, nodes[1:])]
    return PhysicalPath(
        nodes=nodes,
        total_km=sum(e["km"] for e in edges),
        link_ids=tuple(e["link_id"] for e in edges),
    )
