"""Seeded Monte Carlo simulation of pollution, node behaviour and decoding.

Each trial sends one message from every source. Nodes are visited in
topological order:

* a transmitting node's copy reaches every out-neighbour; the copy is
  polluted if the sender's payload is polluted or an independent attack on
  the edge fires;
* forwarding relays in F pass the copy on, in AF they authenticate it and
  drop it if polluted;
* coding relays in XF XOR everything received (polluted if any input is),
  in AXF authenticate each copy and XOR the clean ones, in XAF XOR first,
  authenticate once and forward only if every received copy was clean;
* destinations authenticate every copy and decode over GF(2) from the
  clean ones.

Payload contents are tracked as bitmasks of XOR-ed source messages, so
decoding is a span test over GF(2).

Trials are processed in fixed-size chunks. Chunk ``j`` draws its attack
uniforms from ``Philox4x64-10`` keyed by the seed with counter
``[0, 0, 0, j]``, so the estimate does not depend on worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .analytics import DEFAULT_CONSTANTS, EnergyConstants, NetworkStrategy, validate_strategy
from .errors import InputOutOfRange
from .graph import AttackTopology, Edge, NetworkGraph, NodeId, NodeRole

CHUNK = 1 << 16
RNG_ALGORITHM = f"numpy-{np.__version__}/Philox4x64-10/chunk={CHUNK}/counter=[0,0,0,chunk]"
WORKERS_ENV = "AUTHPLAN_WORKERS"
MAX_SOURCES = 64


@dataclass(frozen=True)
class SimulationConfig:
    graph: NetworkGraph
    attacks: AttackTopology
    strategy: NetworkStrategy
    constants: EnergyConstants = DEFAULT_CONSTANTS
    trials: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.trials, int) or self.trials < 1:
            raise InputOutOfRange(f"trials must be a positive integer, got {self.trials!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise InputOutOfRange(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        validate_strategy(self.graph, self.strategy)
        if len(self.graph.sources) > MAX_SOURCES:
            raise InputOutOfRange(f"at most {MAX_SOURCES} sources are supported")


Estimate = tuple[float, float]


@dataclass(frozen=True)
class SimulationResult:
    est_forward: Mapping[NodeId, Estimate]
    est_pollute: Mapping[Edge, Estimate]
    est_energy: Estimate
    est_throughput: Estimate
    est_decode: Mapping[NodeId, Estimate]
    trials: int
    seed: int
    rng: str = RNG_ALGORITHM

    def as_records(self) -> list[dict[str, str]]:
        """Flat rows (quantity, key, mean, se) with run metadata on each row."""
        rows = []

        def add(quantity, key, est):
            rows.append(
                {
                    "quantity": quantity,
                    "key": key,
                    "mean": f"{est[0]:.12g}",
                    "se": f"{est[1]:.12g}",
                    "trials": str(self.trials),
                    "seed": str(self.seed),
                    "rng": self.rng,
                }
            )

        for n, est in self.est_forward.items():
            add("f", n, est)
        for (k, i), est in self.est_pollute.items():
            add("P", f"{k}->{i}", est)
        for d, est in self.est_decode.items():
            add("decode", d, est)
        add("F_E", "", self.est_energy)
        add("P_th", "", self.est_throughput)
        return rows


@dataclass(frozen=True)
class TrialOutcome:
    transmitted: Mapping[NodeId, bool]
    polluted: Mapping[Edge, bool]
    energy: float
    decoded: Mapping[NodeId, bool]


def _required_sources(graph: NetworkGraph) -> dict[NodeId, int]:
    """Bitmask of sources upstream of each node."""
    src_bit = {s: i for i, s in enumerate(graph.sources)}
    req: dict[NodeId, int] = {}
    for n in graph.order:
        m = 1 << src_bit[n] if n in src_bit else 0
        for k in graph.in_neighbors[n]:
            m |= req[k]
        req[n] = m
    return req


def _in_span(vectors: list[int], target: int) -> bool:
    basis: dict[int, int] = {}
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
    while target:
        top = target.bit_length() - 1
        if top not in basis:
            return False
        target ^= basis[top]
    return True


def simulate_trial(
    graph: NetworkGraph,
    attacks: AttackTopology,
    strategy: NetworkStrategy,
    constants: EnergyConstants = DEFAULT_CONSTANTS,
    rng: np.random.Generator | None = None,
    *,
    fires: Mapping[Edge, bool] | None = None,
) -> TrialOutcome:
    """One trial in plain Python.

    Attack outcomes come from ``fires`` when given, otherwise one uniform per
    edge (in ``graph.edges`` order) is drawn from ``rng``.
    """
    c = constants
    if fires is None:
        if rng is None:
            raise InputOutOfRange("either rng or fires is required")
        u = rng.random(len(graph.edges))
        fires = {e: bool(u[j] < attacks[e]) for j, e in enumerate(graph.edges)}
    src_bit = {s: i for i, s in enumerate(graph.sources)}
    required = _required_sources(graph)

    tx: dict[NodeId, bool] = {}
    dirty: dict[NodeId, bool] = {}
    mask: dict[NodeId, int] = {}
    polluted: dict[Edge, bool] = {}
    decoded: dict[NodeId, bool] = {}
    e = 0.0

    for i in graph.order:
        role = graph.roles[i]
        if role is NodeRole.SOURCE:
            e += c.Q_T + c.Q_A
            tx[i], dirty[i], mask[i] = True, False, 1 << src_bit[i]
            continue
        got = []  # (polluted, mask) per received copy, in in-neighbour order
        for k in graph.in_neighbors[i]:
            if tx[k]:
                bad = dirty[k] or bool(fires[(k, i)])
                got.append((bad, mask[k]))
                polluted[(k, i)] = bad
                e += (c.Q_R + c.Q_A) if role is NodeRole.DESTINATION else c.Q_R
            else:
                polluted[(k, i)] = False
                e += 0.0

        if role is NodeRole.DESTINATION:
            clean = [m for bad, m in got if not bad]
            decoded[i] = all(
                _in_span(clean, 1 << b) for b in range(len(src_bit)) if required[i] >> b & 1
            )
            continue

        s = strategy[i]
        r = len(got)
        if role is NodeRole.FORWARDING_RELAY:
            if s.authenticate:
                e += c.Q_A if r else 0.0
                ok = r == 1 and not got[0][0]
                tx[i], dirty[i] = ok, False
            else:
                tx[i], dirty[i] = r == 1, r == 1 and got[0][0]
            mask[i] = got[0][1] if r else 0
        else:
            combined = 0
            if not s.authenticate:
                for _, m in got:
                    combined ^= m
                tx[i], dirty[i] = r >= 1, any(bad for bad, _ in got)
            elif s.mode == 0:
                e += (r * c.Q_A + (r - 1) * c.Q_XOR) if r else 0.0
                for bad, m in got:
                    if not bad:
                        combined ^= m
                tx[i], dirty[i] = any(not bad for bad, _ in got), False
            else:
                e += (c.Q_A + (r - 1) * c.Q_XOR) if r else 0.0
                for _, m in got:
                    combined ^= m
                tx[i], dirty[i] = r >= 1 and not any(bad for bad, _ in got), False
            mask[i] = combined
        e += c.Q_T if tx[i] else 0.0

    return TrialOutcome(
        transmitted=MappingProxyType({n: tx[n] for n in graph.nodes if n in tx}),
        polluted=MappingProxyType(polluted),
        energy=e,
        decoded=MappingProxyType(decoded),
    )


def run_block(
    graph: NetworkGraph,
    strategy: NetworkStrategy,
    constants: EnergyConstants,
    fires: np.ndarray,
) -> dict[str, np.ndarray]:
    """Vectorised trials; ``fires`` is a bool array of shape (n_edges, n_trials).

    Returns ``tx`` (n_nodes, n), ``polluted`` (n_edges, n), ``energy`` (n,) and
    ``decoded`` (n_destinations, n); node order is ``graph.nodes``.
    """
    c = constants
    n = fires.shape[1]
    node_ix = {v: j for j, v in enumerate(graph.nodes)}
    edge_ix = {e: j for j, e in enumerate(graph.edges)}
    src_bit = {s: b for b, s in enumerate(graph.sources)}
    required = _required_sources(graph)

    tx = np.zeros((len(graph.nodes), n), dtype=bool)
    dirty = np.zeros((len(graph.nodes), n), dtype=bool)
    mask = np.zeros((len(graph.nodes), n), dtype=np.uint64)
    polluted = np.zeros((len(graph.edges), n), dtype=bool)
    decoded = np.zeros((len(graph.destinations), n), dtype=bool)
    dest_ix = {d: j for j, d in enumerate(graph.destinations)}
    e = np.zeros(n)
    zero = np.uint64(0)

    for i in graph.order:
        role = graph.roles[i]
        ii = node_ix[i]
        if role is NodeRole.SOURCE:
            e += c.Q_T + c.Q_A
            tx[ii] = True
            mask[ii] = np.uint64(1) << np.uint64(src_bit[i])
            continue
        recv, bad, masks = [], [], []
        for k in graph.in_neighbors[i]:
            kk, ej = node_ix[k], edge_ix[(k, i)]
            r_k = tx[kk]
            b_k = r_k & (dirty[kk] | fires[ej])
            polluted[ej] = b_k
            recv.append(r_k)
            bad.append(b_k)
            masks.append(mask[kk])
            e += r_k * ((c.Q_R + c.Q_A) if role is NodeRole.DESTINATION else c.Q_R)

        if role is NodeRole.DESTINATION:
            clean = [np.where(r_k & ~b_k, m, zero) for r_k, b_k, m in zip(recv, bad, masks)]
            ok = np.ones(n, dtype=bool)
            for b in range(len(src_bit)):
                if required[i] >> b & 1:
                    ok &= _span_contains(clean, np.uint64(1) << np.uint64(b), len(src_bit))
            decoded[dest_ix[i]] = ok
            continue

        s = strategy[i]
        if role is NodeRole.FORWARDING_RELAY:
            (r_k,), (b_k,), (m,) = recv, bad, masks
            if s.authenticate:
                e += r_k * c.Q_A
                tx[ii] = r_k & ~b_k
            else:
                tx[ii] = r_k
                dirty[ii] = b_k
            mask[ii] = np.where(r_k, m, zero)
        else:
            count = np.sum(recv, axis=0)
            any_bad = np.logical_or.reduce(bad)
            combined = np.zeros(n, dtype=np.uint64)
            if not s.authenticate:
                for r_k, m in zip(recv, masks):
                    combined ^= np.where(r_k, m, zero)
                tx[ii] = count >= 1
                dirty[ii] = any_bad
            elif s.mode == 0:
                e += np.where(count > 0, count * c.Q_A + (count - 1) * c.Q_XOR, 0.0)
                good = [r_k & ~b_k for r_k, b_k in zip(recv, bad)]
                for g_k, m in zip(good, masks):
                    combined ^= np.where(g_k, m, zero)
                tx[ii] = np.logical_or.reduce(good)
            else:
                e += np.where(count > 0, c.Q_A + (count - 1) * c.Q_XOR, 0.0)
                for r_k, m in zip(recv, masks):
                    combined ^= np.where(r_k, m, zero)
                tx[ii] = (count >= 1) & ~any_bad
            mask[ii] = combined
        e += tx[ii] * c.Q_T

    return {"tx": tx, "polluted": polluted, "energy": e, "decoded": decoded}


def _span_contains(vectors: list[np.ndarray], target: np.uint64, nbits: int) -> np.ndarray:
    """Per-trial test whether ``target`` lies in the GF(2) span of ``vectors``."""
    n = vectors[0].shape[0] if vectors else 0
    one, zero = np.uint64(1), np.uint64(0)
    basis = [np.zeros(n, dtype=np.uint64) for _ in range(nbits)]
    for v in vectors:
        v = v.copy()
        placed = np.zeros(n, dtype=bool)
        for b in reversed(range(nbits)):
            bit = ((v >> np.uint64(b)) & one).astype(bool) & ~placed
            empty = basis[b] == zero
            put = bit & empty
            basis[b] = np.where(put, v, basis[b])
            placed |= put
            v = np.where(bit & ~empty, v ^ basis[b], v)
    t = np.full(n, target, dtype=np.uint64)
    for b in reversed(range(nbits)):
        bit = ((t >> np.uint64(b)) & one).astype(bool)
        t = np.where(bit, t ^ basis[b], t)
    return t == zero


def _chunk_fires(p: np.ndarray, seed: int, chunk: int, size: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, chunk]))
    return gen.random((p.shape[0], size)) < p[:, None]


def _moments(x: np.ndarray) -> tuple[int, float, float]:
    x0 = x[0]
    d = x - x0
    md = d.mean()
    return x.shape[0], float(x0 + md), float(np.sum((d - md) ** 2))


def _combine(a: tuple[int, float, float], b: tuple[int, float, float]) -> tuple[int, float, float]:
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def _bernoulli(count: int, n: int) -> Estimate:
    m = count / n
    if n < 2:
        return m, math.nan
    return m, math.sqrt(max(m * (1.0 - m), 0.0) / (n - 1))


def _moment_estimate(mom: tuple[int, float, float]) -> Estimate:
    n, m, s = mom
    if n < 2:
        return m, math.nan
    return m, math.sqrt(s / (n - 1) / n)


def _workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def simulate(config: SimulationConfig, workers: int | None = None) -> SimulationResult:
    g = config.graph
    p = np.array([config.attacks[e] for e in g.edges], dtype=float)
    n_chunks = -(-config.trials // CHUNK)

    def run(j: int):
        size = min(CHUNK, config.trials - j * CHUNK)
        fires = _chunk_fires(p, config.seed, j, size)
        out = run_block(g, config.strategy, config.constants, fires)
        nd = max(len(g.destinations), 1)
        thr = out["decoded"].sum(axis=0) / nd if len(g.destinations) else np.ones(size)
        return (
            out["tx"].sum(axis=1),
            out["polluted"].sum(axis=1),
            out["decoded"].sum(axis=1),
            _moments(out["energy"]),
            _moments(thr),
        )

    workers = workers or _workers()
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=min(workers, n_chunks)) as pool:
            parts = list(pool.map(run, range(n_chunks)))
    else:
        parts = [run(j) for j in range(n_chunks)]

    tx = sum(part[0] for part in parts)
    pol = sum(part[1] for part in parts)
    dec = sum(part[2] for part in parts)
    e_mom, t_mom = parts[0][3], parts[0][4]
    for part in parts[1:]:
        e_mom = _combine(e_mom, part[3])
        t_mom = _combine(t_mom, part[4])

    n = config.trials
    relay_or_source = [v for v in g.nodes if g.roles[v] is not NodeRole.DESTINATION]
    node_ix = {v: j for j, v in enumerate(g.nodes)}
    return SimulationResult(
        est_forward=MappingProxyType({v: _bernoulli(int(tx[node_ix[v]]), n) for v in relay_or_source}),
        est_pollute=MappingProxyType({e: _bernoulli(int(pol[j]), n) for j, e in enumerate(g.edges)}),
        est_energy=_moment_estimate(e_mom),
        est_throughput=_moment_estimate(t_mom),
        est_decode=MappingProxyType({d: _bernoulli(int(dec[j]), n) for j, d in enumerate(g.destinations)}),
        trials=n,
        seed=config.seed,
    )
