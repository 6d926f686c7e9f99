"""Exhaustive search over network authentication strategies."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping, Sequence

from .analytics import (
    CODING_LABELS,
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    FORWARDING_LABELS,
    DEFAULT_CONSTANTS,
    EnergyBreakdown,
    EnergyConstants,
    NetworkStrategy,
    NodeStrategy,
    evaluate,
    throughput,
)
from .errors import CapacityExceeded, InputOutOfRange
from .graph import AttackTopology, Edge, NetworkGraph, make_attack

ENERGY_TIE_TOL = 1e-12
DEFAULT_THROUGHPUT_TOL = 1e-9
DEFAULT_MAX_RELAYS = 24


class Objective(Enum):
    ENERGY_ONLY = "energy"
    ENERGY_BEST_THROUGHPUT = "energy-throughput"


@dataclass(frozen=True)
class OptimizationResult:
    strategy: NetworkStrategy
    energy: EnergyBreakdown
    throughput: float
    objective: Objective
    index: int


@dataclass(frozen=True)
class SweepRow:
    p: float
    labels: Mapping[str, str]
    F_E: float
    P_th: float

    def label_vector(self) -> tuple[str, ...]:
        return tuple(self.labels.values())


def enumerate_strategies(graph: NetworkGraph, max_relays: int = DEFAULT_MAX_RELAYS) -> Iterator[NetworkStrategy]:
    """All 3^c * 2^(N-c) strategies, relays in id order, last relay varying fastest."""
    relays = graph.relays
    if len(relays) > max_relays:
        raise CapacityExceeded(
            f"{len(relays)} relays exceeds the exhaustive-search cap of {max_relays}"
        )
    choices = [
        [NodeStrategy.from_label(lab) for lab in (CODING_LABELS if graph.is_coding(n) else FORWARDING_LABELS)]
        for n in relays
    ]
    for combo in itertools.product(*choices):
        yield NetworkStrategy(dict(zip(relays, combo)))


def _better(energy: float, best: float | None) -> bool:
    return best is None or energy < best - ENERGY_TIE_TOL


def optimize_energy(
    graph: NetworkGraph,
    attacks: AttackTopology,
    constants: EnergyConstants = DEFAULT_CONSTANTS,
    *,
    max_relays: int = DEFAULT_MAX_RELAYS,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
) -> OptimizationResult:
    """Minimum-energy strategy; near-ties (1e-12 J) go to the earliest enumerated."""
    best = None
    for idx, strategy in enumerate(enumerate_strategies(graph, max_relays)):
        _, e = evaluate(graph, attacks, strategy, constants)
        if _better(e.total, best[1].total if best else None):
            best = (strategy, e, idx)
    strategy, e, idx = best
    p_th = throughput(graph, attacks, strategy, trials=trials, seed=seed)
    return OptimizationResult(strategy, e, p_th, Objective.ENERGY_ONLY, idx)


def optimize_energy_best_throughput(
    graph: NetworkGraph,
    attacks: AttackTopology,
    constants: EnergyConstants = DEFAULT_CONSTANTS,
    throughput_tolerance: float = DEFAULT_THROUGHPUT_TOL,
    *,
    max_relays: int = DEFAULT_MAX_RELAYS,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
) -> OptimizationResult:
    """Cheapest strategy among those within ``throughput_tolerance`` of the best throughput."""
    if not throughput_tolerance >= 0:
        raise InputOutOfRange(f"throughput tolerance must be >= 0, got {throughput_tolerance!r}")
    evaluated = []
    for idx, strategy in enumerate(enumerate_strategies(graph, max_relays)):
        _, e = evaluate(graph, attacks, strategy, constants)
        p_th = throughput(graph, attacks, strategy, trials=trials, seed=seed)
        evaluated.append((strategy, e, p_th, idx))
    top = max(p for _, _, p, _ in evaluated)
    best = None
    for strategy, e, p_th, idx in evaluated:
        if p_th >= top - throughput_tolerance and _better(e.total, best[1].total if best else None):
            best = (strategy, e, p_th, idx)
    strategy, e, p_th, idx = best
    return OptimizationResult(strategy, e, p_th, Objective.ENERGY_BEST_THROUGHPUT, idx)


def optimize(
    graph: NetworkGraph,
    attacks: AttackTopology,
    objective: Objective = Objective.ENERGY_ONLY,
    constants: EnergyConstants = DEFAULT_CONSTANTS,
    throughput_tolerance: float = DEFAULT_THROUGHPUT_TOL,
    **kwargs,
) -> OptimizationResult:
    if objective is Objective.ENERGY_ONLY:
        return optimize_energy(graph, attacks, constants, **kwargs)
    return optimize_energy_best_throughput(graph, attacks, constants, throughput_tolerance, **kwargs)


def sweep(
    graph: NetworkGraph,
    swept: Sequence[Edge],
    p_grid: Sequence[float],
    objective: Objective = Objective.ENERGY_ONLY,
    constants: EnergyConstants = DEFAULT_CONSTANTS,
    *,
    fixed: Mapping[Edge, float] | None = None,
    throughput_tolerance: float = DEFAULT_THROUGHPUT_TOL,
    **kwargs,
) -> list[SweepRow]:
    """Optimise at every grid point with all ``swept`` edges set to ``p``."""
    grid = [float(p) for p in p_grid]
    for p in grid:
        if not 0.0 <= p <= 1.0:
            raise InputOutOfRange(f"grid value {p} not in [0, 1]")
    for a, b in zip(grid, grid[1:]):
        if not b > a:
            raise InputOutOfRange("grid must be strictly increasing")
    base = dict(fixed or {})
    rows = []
    for p in grid:
        entries = dict(base)
        entries.update({tuple(e): p for e in swept})
        attacks = make_attack(graph, entries)
        res = optimize(graph, attacks, objective, constants, throughput_tolerance, **kwargs)
        rows.append(SweepRow(p, res.strategy.labels(), res.energy.total, res.throughput))
    return rows


def switch_points(rows: Sequence[SweepRow]) -> list[tuple[float, tuple[str, ...], tuple[str, ...]]]:
    """``(p, before, after)`` for every grid point where the optimal label vector changes."""
    out = []
    for prev, cur in zip(rows, rows[1:]):
        if prev.label_vector() != cur.label_vector():
            out.append((cur.p, prev.label_vector(), cur.label_vector()))
    return out


def sweep_csv(rows: Sequence[SweepRow], relays: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", *relays, "F_E_joules", "P_th"])
    for r in rows:
        w.writerow([f"{r.p:.12g}", *(r.labels[n] for n in relays), f"{r.F_E:.12g}", f"{r.P_th:.12g}"])
    return buf.getvalue()
