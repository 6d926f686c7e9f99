"""Random networks, attack topologies and strategies for property testing."""

from __future__ import annotations

import numpy as np

from .analytics import CODING_LABELS, FORWARDING_LABELS, NetworkStrategy, NodeStrategy
from .graph import AttackTopology, NetworkGraph, build_network, make_attack


def _sample(rng: np.random.Generator, pool: list, k: int) -> list:
    k = min(k, len(pool))
    return [pool[j] for j in sorted(rng.choice(len(pool), size=k, replace=False))]


def random_dag(
    rng: np.random.Generator,
    max_nodes: int = 10,
    *,
    independent_inputs: bool = False,
    max_in_degree: int = 3,
) -> NetworkGraph:
    """Random valid network with at most ``max_nodes`` nodes.

    With ``independent_inputs`` every node's in-neighbours have disjoint
    relay ancestries, the class of graphs on which the analytic product
    formulas are exact.
    """
    if max_nodes < 2:
        raise ValueError("need at least 2 nodes")
    for _ in range(1000):
        g = _try_dag(rng, max_nodes, independent_inputs, max_in_degree)
        if g is not None:
            return g
    raise RuntimeError("could not generate a graph")  # pragma: no cover


def _try_dag(rng, max_nodes, independent, max_in):
    n_src = int(rng.integers(1, min(3, max_nodes - 1) + 1))
    n_relay = int(rng.integers(0, max(max_nodes - n_src - 1, 0) + 1))
    sources = [f"s{j}" for j in range(n_src)]
    relays = [f"r{j}" for j in range(n_relay)]
    edges: list[tuple[str, str]] = []
    # relay ancestry (relays only, including self)
    anc: dict[str, frozenset] = {s: frozenset() for s in sources}

    def pick_inputs(pool, k):
        chosen: list[str] = []
        used: set = set()
        for u in rng.permutation(pool):
            u = str(u)
            if len(chosen) == k:
                break
            if independent and anc[u] & used:
                continue
            chosen.append(u)
            used |= anc[u]
        return chosen

    for r in relays:
        pool = sources + [x for x in relays if x in anc]
        k = int(rng.integers(1, max_in + 1))
        ins = pick_inputs(pool, k)
        edges += [(u, r) for u in ins]
        anc[r] = frozenset().union(*(anc[u] for u in ins)) | {r}

    has_out = {u for u, _ in edges}
    dests: list[str] = []
    dest_inputs: dict[str, list[str]] = {}
    budget = max_nodes - n_src - n_relay
    sinks = [r for r in relays if r not in has_out]
    for r in sinks:
        placed = False
        for d in dests:
            used = frozenset().union(*(anc[u] for u in dest_inputs[d]))
            if len(dest_inputs[d]) < max_in and not (independent and used & anc[r]):
                dest_inputs[d].append(r)
                placed = True
                break
        if not placed:
            if len(dests) >= budget:
                return None
            d = f"t{len(dests)}"
            dests.append(d)
            dest_inputs[d] = [r]
    if not dests:
        if budget < 1:
            return None
        dests.append("t0")
        dest_inputs["t0"] = []
    # extra inputs for destinations, drawn from sources and relays
    for d in dests:
        extra = int(rng.integers(0, 2))
        pool = [u for u in sources + relays if u not in dest_inputs[d]]
        for u in rng.permutation(pool)[:extra] if pool else []:
            u = str(u)
            used = frozenset().union(*(anc[x] for x in dest_inputs[d])) if dest_inputs[d] else frozenset()
            if len(dest_inputs[d]) < max_in and not (independent and used & anc[u]):
                dest_inputs[d].append(u)
        if not dest_inputs[d]:
            dest_inputs[d].append(str(rng.choice(sources)))
    for d in dests:
        edges += [(u, d) for u in dest_inputs[d]]

    nodes = [(s, "source") for s in sources] + [(r, "relay") for r in relays] + [(d, "destination") for d in dests]
    return build_network(nodes, edges)


def random_attacks(rng: np.random.Generator, graph: NetworkGraph, p_max: float = 1.0, density: float = 0.7) -> AttackTopology:
    entries = {}
    for e in graph.edges:
        if rng.random() < density:
            entries[e] = float(rng.uniform(0.0, p_max))
    return make_attack(graph, entries)


def random_strategy(rng: np.random.Generator, graph: NetworkGraph) -> NetworkStrategy:
    nodes = {}
    for n in graph.relays:
        labels = CODING_LABELS if graph.is_coding(n) else FORWARDING_LABELS
        nodes[n] = NodeStrategy.from_label(labels[int(rng.integers(len(labels)))])
    return NetworkStrategy(nodes)
