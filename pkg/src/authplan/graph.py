"""Network DAG, node roles and attack topologies.

A network is a directed acyclic graph whose nodes are sources, relays or
destinations. Relays are split into coding relays (more than one incoming
edge, they XOR their inputs) and forwarding relays (exactly one incoming
edge). The split is always derived from the in-degree, never supplied.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .errors import (
    CycleDetected,
    DanglingEdge,
    DestinationWithOutEdges,
    DisconnectedRelay,
    DuplicateEdge,
    DuplicateNode,
    GraphError,
    ProbabilityOutOfRange,
    RelayWithZeroInDegree,
    SourceWithInEdges,
    UnknownEdge,
)

NodeId = str
Edge = tuple[NodeId, NodeId]

ROLE_HINTS = ("source", "relay", "destination")


class NodeRole(Enum):
    SOURCE = "source"
    CODING_RELAY = "coding-relay"
    FORWARDING_RELAY = "forwarding-relay"
    DESTINATION = "destination"

    @property
    def is_relay(self) -> bool:
        return self in (NodeRole.CODING_RELAY, NodeRole.FORWARDING_RELAY)

    @property
    def hint(self) -> str:
        return "relay" if self.is_relay else self.value


@dataclass(frozen=True)
class NetworkGraph:
    """Validated, immutable network DAG.

    Use :func:`build_network` rather than calling the constructor directly;
    the constructor trusts its arguments.
    """

    nodes: tuple[NodeId, ...]
    roles: Mapping[NodeId, NodeRole]
    edges: tuple[Edge, ...]
    in_neighbors: Mapping[NodeId, tuple[NodeId, ...]]
    out_neighbors: Mapping[NodeId, tuple[NodeId, ...]]
    order: tuple[NodeId, ...] = field(repr=False)

    @property
    def sources(self) -> tuple[NodeId, ...]:
        return tuple(n for n in self.nodes if self.roles[n] is NodeRole.SOURCE)

    @property
    def destinations(self) -> tuple[NodeId, ...]:
        return tuple(n for n in self.nodes if self.roles[n] is NodeRole.DESTINATION)

    @property
    def relays(self) -> tuple[NodeId, ...]:
        """Relays sorted by id (the canonical strategy order)."""
        return tuple(sorted(n for n in self.nodes if self.roles[n].is_relay))

    @property
    def coding_relays(self) -> tuple[NodeId, ...]:
        return tuple(n for n in self.relays if self.roles[n] is NodeRole.CODING_RELAY)

    @property
    def forwarding_relays(self) -> tuple[NodeId, ...]:
        return tuple(n for n in self.relays if self.roles[n] is NodeRole.FORWARDING_RELAY)

    @property
    def n_relays(self) -> int:
        return len(self.relays)

    @property
    def n_coding(self) -> int:
        return len(self.coding_relays)

    @property
    def strategy_space_size(self) -> int:
        return 3**self.n_coding * 2 ** (self.n_relays - self.n_coding)

    def is_coding(self, node: NodeId) -> bool:
        return self.roles[node] is NodeRole.CODING_RELAY

    def has_edge(self, edge: Edge) -> bool:
        return edge in self._edge_set

    @property
    def _edge_set(self) -> frozenset[Edge]:
        # cached lazily on a frozen dataclass
        try:
            return self.__dict__["_edges_cache"]
        except KeyError:
            s = frozenset(self.edges)
            object.__setattr__(self, "_edges_cache", s)
            return s


def classify(role_hint: str, in_degree: int) -> NodeRole:
    if role_hint == "source":
        return NodeRole.SOURCE
    if role_hint == "destination":
        return NodeRole.DESTINATION
    return NodeRole.CODING_RELAY if in_degree > 1 else NodeRole.FORWARDING_RELAY


def _lexicographic_topo(
    nodes: Sequence[NodeId], ins: Mapping[NodeId, list], outs: Mapping[NodeId, list]
) -> list[NodeId] | None:
    indeg = {n: len(ins[n]) for n in nodes}
    heap = [n for n in nodes if indeg[n] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        n = heapq.heappop(heap)
        order.append(n)
        for m in outs[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(heap, m)
    if len(order) != len(nodes):
        return None
    return order


def _reachable(start: Iterable[NodeId], adj: Mapping[NodeId, Sequence[NodeId]]) -> set[NodeId]:
    seen = set(start)
    stack = list(seen)
    while stack:
        n = stack.pop()
        for m in adj[n]:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def build_network(
    nodes: Sequence[tuple[NodeId, str]], edges: Sequence[Edge]
) -> NetworkGraph:
    """Validate a node/edge description and return a :class:`NetworkGraph`.

    ``nodes`` holds ``(id, hint)`` pairs where hint is ``"source"``,
    ``"relay"`` or ``"destination"``. Relays become coding relays when their
    in-degree exceeds one.
    """
    hints: dict[NodeId, str] = {}
    for node_id, hint in nodes:
        if not isinstance(node_id, str) or not node_id:
            raise GraphError(f"node id must be a non-empty string, got {node_id!r}")
        if hint not in ROLE_HINTS:
            raise GraphError(f"node {node_id!r}: unknown role {hint!r}")
        if node_id in hints:
            raise DuplicateNode(f"node {node_id!r} declared twice")
        hints[node_id] = hint

    ins: dict[NodeId, list[NodeId]] = {n: [] for n in hints}
    outs: dict[NodeId, list[NodeId]] = {n: [] for n in hints}
    seen: set[Edge] = set()
    for u, v in edges:
        if u not in hints or v not in hints:
            missing = u if u not in hints else v
            raise DanglingEdge(f"edge ({u},{v}) references unknown node {missing!r}")
        if (u, v) in seen:
            raise DuplicateEdge(f"edge ({u},{v}) listed twice")
        seen.add((u, v))
        outs[u].append(v)
        ins[v].append(u)

    node_ids = sorted(hints)
    order = _lexicographic_topo(node_ids, ins, outs)
    if order is None:
        raise CycleDetected("graph contains a directed cycle")

    for n in node_ids:
        if hints[n] == "source" and ins[n]:
            raise SourceWithInEdges(f"source {n!r} has incoming edges")
        if hints[n] == "destination" and outs[n]:
            raise DestinationWithOutEdges(f"destination {n!r} has outgoing edges")
        if hints[n] == "relay" and not ins[n]:
            raise RelayWithZeroInDegree(f"relay {n!r} has no incoming edge")

    from_sources = _reachable([n for n in node_ids if hints[n] == "source"], outs)
    to_dests = _reachable([n for n in node_ids if hints[n] == "destination"], ins)
    for n in node_ids:
        if hints[n] == "relay" and not (n in from_sources and n in to_dests):
            raise DisconnectedRelay(
                f"relay {n!r} is not on any source-to-destination path"
            )

    depth: dict[NodeId, int] = {}
    for n in order:
        depth[n] = max((depth[k] + 1 for k in ins[n]), default=0)
    order = sorted(order, key=lambda n: (depth[n], n))

    roles = {n: classify(hints[n], len(ins[n])) for n in node_ids}
    return NetworkGraph(
        nodes=tuple(node_ids),
        roles=MappingProxyType(roles),
        edges=tuple(sorted(seen)),
        in_neighbors=MappingProxyType({n: tuple(sorted(ins[n])) for n in node_ids}),
        out_neighbors=MappingProxyType({n: tuple(sorted(outs[n])) for n in node_ids}),
        order=tuple(order),
    )


def topological_order(graph: NetworkGraph) -> list[NodeId]:
    """Nodes sorted by longest-path depth from the roots, ties by id.

    Every edge goes from a shallower to a deeper node, so this is a valid
    topological order that also visits layered networks layer by layer.
    """
    return list(graph.order)


BUTTERFLY_NODES = (
    ("A", "source"),
    ("B", "source"),
    ("C", "relay"),
    ("D", "relay"),
    ("E", "destination"),
    ("F", "destination"),
)
BUTTERFLY_EDGES = (
    ("A", "C"),
    ("A", "E"),
    ("B", "C"),
    ("B", "F"),
    ("C", "D"),
    ("D", "E"),
    ("D", "F"),
)


def butterfly() -> NetworkGraph:
    """The two-source, two-destination butterfly: C codes, D forwards."""
    return build_network(BUTTERFLY_NODES, BUTTERFLY_EDGES)


def is_butterfly(graph: NetworkGraph) -> bool:
    ref = butterfly()
    return graph.edges == ref.edges and dict(graph.roles) == dict(ref.roles)


@dataclass(frozen=True)
class AttackTopology:
    """Per-edge attack probabilities; every graph edge has an entry."""

    probabilities: Mapping[Edge, float]

    def __getitem__(self, edge: Edge) -> float:
        return self.probabilities[edge]

    def get(self, edge: Edge, default: float = 0.0) -> float:
        return self.probabilities.get(edge, default)

    def items(self):
        return self.probabilities.items()

    def with_updates(self, graph: NetworkGraph, entries: Mapping[Edge, float]) -> AttackTopology:
        merged = dict(self.probabilities)
        merged.update(entries)
        return make_attack(graph, merged.items())


def check_probability(value: float, what: str, exc: type[Exception] = ProbabilityOutOfRange) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise exc(f"{what}: {value!r} is not a number") from None
    if math.isnan(x) or not 0.0 <= x <= 1.0:
        raise exc(f"{what}: {value!r} not in [0, 1]")
    return x


def make_attack(
    graph: NetworkGraph, entries: Iterable[tuple[Edge, float]] | Mapping[Edge, float] = ()
) -> AttackTopology:
    """Attack topology with the listed probabilities and 0 on every other edge."""
    if isinstance(entries, Mapping):
        entries = entries.items()
    probs = {e: 0.0 for e in graph.edges}
    for edge, p in entries:
        edge = tuple(edge)
        if not graph.has_edge(edge):
            raise UnknownEdge(f"edge ({edge[0]},{edge[1]}) is not in the graph")
        probs[edge] = check_probability(p, f"attack probability on ({edge[0]},{edge[1]})")
    return AttackTopology(MappingProxyType(probs))
