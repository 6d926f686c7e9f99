"""Analytic forwarding/pollution probabilities, expected energy and throughput.

All probabilities are unconditional: ``forward[i]`` is the probability that
node ``i`` transmits during one round, ``pollute[(k, i)]`` the probability
that a polluted copy arrives at ``i`` from ``k``. When every upstream node
transmits with certainty the formulas collapse to the classic per-node
closed forms (non-authenticating relay forwards with probability 1, AXF
forwards with ``1 - prod(P)``, XAF with ``prod(1 - P)``).

The product forms assume the states of a node's incoming edges are
independent. That holds exactly when the relay ancestries of a node's
in-neighbours are disjoint (e.g. the butterfly); on graphs with
re-converging relay paths the results are an approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

from .errors import InputOutOfRange, NotACodingNode, StrategyError
from .graph import AttackTopology, Edge, NetworkGraph, NodeId, NodeRole, check_probability, is_butterfly

CODING_LABELS = ("XF", "AXF", "XAF")
FORWARDING_LABELS = ("F", "AF")
LABELS = CODING_LABELS + FORWARDING_LABELS


@dataclass(frozen=True)
class NodeStrategy:
    """Authentication choice of one relay.

    ``mode`` is ``None`` for forwarding relays; for coding relays it is 1
    (XAF) or 0 (AXF). A non-authenticating coding relay is normalised to
    mode 1 so that XF has a single representation.
    """

    authenticate: bool
    mode: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "authenticate", bool(self.authenticate))
        if self.mode is not None:
            if self.mode not in (0, 1):
                raise StrategyError(f"mode must be 0 or 1, got {self.mode!r}")
            if not self.authenticate:
                object.__setattr__(self, "mode", 1)

    @property
    def is_coding(self) -> bool:
        return self.mode is not None

    @property
    def label(self) -> str:
        if self.mode is None:
            return "AF" if self.authenticate else "F"
        if not self.authenticate:
            return "XF"
        return "XAF" if self.mode == 1 else "AXF"

    @classmethod
    def from_label(cls, label: str) -> NodeStrategy:
        label = label.strip().upper()
        try:
            return _BY_LABEL[label]
        except KeyError:
            raise StrategyError(f"unknown strategy label {label!r}") from None


_BY_LABEL = {
    "XF": NodeStrategy(False, 1),
    "AXF": NodeStrategy(True, 0),
    "XAF": NodeStrategy(True, 1),
    "F": NodeStrategy(False),
    "AF": NodeStrategy(True),
}


@dataclass(frozen=True)
class NetworkStrategy:
    """One :class:`NodeStrategy` per relay, keyed by relay id."""

    nodes: Mapping[NodeId, NodeStrategy]

    def __post_init__(self):
        object.__setattr__(self, "nodes", MappingProxyType(dict(sorted(self.nodes.items()))))

    def __getitem__(self, node: NodeId) -> NodeStrategy:
        return self.nodes[node]

    def __hash__(self):
        return hash(tuple(self.nodes.items()))

    def __eq__(self, other):
        if not isinstance(other, NetworkStrategy):
            return NotImplemented
        return tuple(self.nodes.items()) == tuple(other.nodes.items())

    def labels(self) -> dict[NodeId, str]:
        return {n: s.label for n, s in self.nodes.items()}

    def describe(self) -> str:
        """``(C: XAF, D: F)`` style rendering."""
        return "(" + ", ".join(f"{n}: {s.label}" for n, s in self.nodes.items()) + ")"

    def short(self) -> str:
        """``(XAF;F)`` style rendering, relays in id order."""
        return "(" + ";".join(s.label for s in self.nodes.values()) + ")"

    @classmethod
    def from_labels(cls, graph: NetworkGraph, labels: Mapping[NodeId, str]) -> NetworkStrategy:
        strategy = cls({n: NodeStrategy.from_label(lab) for n, lab in labels.items()})
        validate_strategy(graph, strategy)
        return strategy

    @classmethod
    def uniform(cls, graph: NetworkGraph, authenticate: bool = False, mode: int = 1) -> NetworkStrategy:
        return cls(
            {
                n: NodeStrategy(authenticate, mode if graph.is_coding(n) else None)
                for n in graph.relays
            }
        )


def validate_strategy(graph: NetworkGraph, strategy: NetworkStrategy) -> None:
    relays = set(graph.relays)
    given = set(strategy.nodes)
    if given != relays:
        missing = sorted(relays - given)
        extra = sorted(given - relays)
        raise StrategyError(f"strategy must cover exactly the relays; missing={missing} extra={extra}")
    for n, s in strategy.nodes.items():
        if graph.is_coding(n) != s.is_coding:
            kind = "coding" if graph.is_coding(n) else "forwarding"
            allowed = CODING_LABELS if graph.is_coding(n) else FORWARDING_LABELS
            raise StrategyError(
                f"label {s.label} is not valid for {kind} relay {n!r} (allowed: {', '.join(allowed)})"
            )


@dataclass(frozen=True)
class EnergyConstants:
    """Per-message energy costs in joules."""

    Q_T: float = 0.556851e-4
    Q_R: float = 0.7995405e-4
    Q_A: float = 1.686154e-4
    Q_XOR: float = 0.00003135e-4

    def __post_init__(self):
        for name in ("Q_T", "Q_R", "Q_A", "Q_XOR"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InputOutOfRange(f"{name} must be a positive finite number, got {v!r}")


DEFAULT_CONSTANTS = EnergyConstants()


@dataclass(frozen=True)
class PropagationState:
    forward: Mapping[NodeId, float]
    pollute: Mapping[Edge, float]
    expected_in: Mapping[NodeId, float]
    recv_any: Mapping[NodeId, float]


@dataclass(frozen=True)
class RelayEnergy:
    reception: float
    authentication: float
    transmission: float

    @property
    def total(self) -> float:
        return self.reception + self.authentication + self.transmission


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    source_cost: float
    relay_cost: float
    destination_cost: float
    relays: Mapping[NodeId, RelayEnergy] = field(default_factory=dict)

    def as_record(self) -> dict[str, str]:
        """Flat record with joule values in scientific notation."""
        rec = {
            "F_E": f"{self.total:.12e}",
            "F_O": f"{self.source_cost:.12e}",
            "F_R": f"{self.relay_cost:.12e}",
            "F_D": f"{self.destination_cost:.12e}",
        }
        for n, r in self.relays.items():
            rec[f"{n}.reception"] = f"{r.reception:.12e}"
            rec[f"{n}.authentication"] = f"{r.authentication:.12e}"
            rec[f"{n}.transmission"] = f"{r.transmission:.12e}"
        return rec


def _prob(x: float, what: str) -> float:
    return check_probability(x, what, InputOutOfRange)


def _bit(x, what: str) -> int:
    if x in (0, 1, True, False):
        return int(x)
    raise InputOutOfRange(f"{what} must be 0 or 1, got {x!r}")


def _prod(values) -> float:
    out = 1.0
    for v in values:
        out *= v
    return out


def pollution_prob(f_k: float, a_k: int, p_ki: float, upstream: Sequence[float]) -> float:
    """Probability that a polluted message arrives at ``i`` from relay ``k``.

    An authenticating sender only emits clean payloads, so pollution comes
    from the link alone: ``f_k * p_ki``. A non-authenticating sender
    emits a polluted payload with probability ``1 - prod(1 - P_lk)`` and
    the link may pollute the rest. With ``f_k = 1`` this equals
    ``1 - (1 - p_ki) * prod(1 - P_lk)``.
    """
    f_k = _prob(f_k, "f_k")
    a_k = _bit(a_k, "a_k")
    p_ki = _prob(p_ki, "p_ki")
    ups = [_prob(x, "upstream pollution") for x in upstream]
    if a_k:
        return f_k * p_ki
    dirty = 1.0 - _prod(1.0 - x for x in ups)
    # a polluted payload implies a transmission
    return min(f_k * p_ki + (1.0 - p_ki) * dirty, 1.0)


def forwarding_relay_prob(a_i: int, P_ki: float, f_k: float = 1.0) -> float:
    """Probability that a single-input relay transmits.

    ``f_k`` is the upstream sender's transmit probability; the basic
    formula ``(1 - a) + a (1 - P)`` is the ``f_k = 1`` case.
    """
    a_i = _bit(a_i, "a_i")
    P_ki = _prob(P_ki, "P_ki")
    f_k = _prob(f_k, "f_k")
    if P_ki > f_k:
        raise InputOutOfRange(f"pollution probability {P_ki} exceeds upstream transmit probability {f_k}")
    return (1 - a_i) * f_k + a_i * (f_k - P_ki)


def coding_relay_prob(
    a_i: int, m_i: int, incoming: Sequence[float], upstream_forward: Sequence[float] | None = None
) -> float:
    """Probability that a coding relay transmits.

    XF sends whenever anything arrives, AXF whenever at least one clean copy
    arrives, XAF whenever something arrives and every arrival is clean.
    ``upstream_forward`` defaults to all ones.
    """
    a_i = _bit(a_i, "a_i")
    m_i = _bit(m_i, "m_i")
    if len(incoming) < 2:
        raise NotACodingNode(f"coding relay needs at least 2 inputs, got {len(incoming)}")
    P = [_prob(x, "incoming pollution") for x in incoming]
    if upstream_forward is None:
        f = [1.0] * len(P)
    else:
        if len(upstream_forward) != len(P):
            raise InputOutOfRange("upstream_forward and incoming differ in length")
        f = [_prob(x, "upstream forward") for x in upstream_forward]
        for pk, fk in zip(P, f):
            if pk > fk:
                raise InputOutOfRange(f"pollution probability {pk} exceeds upstream transmit probability {fk}")
    nothing = _prod(1.0 - fk for fk in f)
    if not a_i:
        return 1.0 - nothing
    xaf = _prod(1.0 - pk for pk in P) - nothing
    axf = 1.0 - _prod(1.0 - fk + pk for pk, fk in zip(P, f))
    return m_i * xaf + (1 - m_i) * axf


def propagate(graph: NetworkGraph, attacks: AttackTopology, strategy: NetworkStrategy) -> PropagationState:
    validate_strategy(graph, strategy)
    forward: dict[NodeId, float] = {}
    pollute: dict[Edge, float] = {}
    expected_in: dict[NodeId, float] = {}
    recv_any: dict[NodeId, float] = {}

    for i in graph.order:
        role = graph.roles[i]
        if role is NodeRole.SOURCE:
            forward[i] = 1.0
            continue
        ins = graph.in_neighbors[i]
        for k in ins:
            p_ki = attacks[(k, i)]
            if graph.roles[k] is NodeRole.SOURCE:
                pollute[(k, i)] = p_ki
            else:
                upstream = [pollute[(l, k)] for l in graph.in_neighbors[k]]
                pollute[(k, i)] = pollution_prob(forward[k], strategy[k].authenticate, p_ki, upstream)
        f_in = [forward[k] for k in ins]
        expected_in[i] = math.fsum(f_in)
        recv_any[i] = 1.0 - _prod(1.0 - f for f in f_in)
        if role is NodeRole.DESTINATION:
            continue
        s = strategy[i]
        if role is NodeRole.CODING_RELAY:
            forward[i] = coding_relay_prob(
                s.authenticate, s.mode, [pollute[(k, i)] for k in ins], f_in
            )
        else:
            (k,) = ins
            forward[i] = forwarding_relay_prob(s.authenticate, pollute[(k, i)], forward[k])

    return PropagationState(
        forward=MappingProxyType(forward),
        pollute=MappingProxyType(pollute),
        expected_in=MappingProxyType(expected_in),
        recv_any=MappingProxyType(recv_any),
    )


def authentication_cost(
    coding: bool, mode: int | None, n_in: float, p_rec: float, constants: EnergyConstants
) -> float:
    """Expected authentication energy of a relay that authenticates.

    The XOR term is ``Q_XOR * (N - P_rec)``: one XOR fewer than the number of
    received copies, and nothing when no copy arrives.
    """
    c = constants
    if not coding:
        return c.Q_A * p_rec
    xor = c.Q_XOR * max(n_in - p_rec, 0.0)
    if mode == 1:
        return xor + c.Q_A * p_rec
    return xor + c.Q_A * n_in


def energy(
    graph: NetworkGraph,
    strategy: NetworkStrategy,
    state: PropagationState,
    constants: EnergyConstants = DEFAULT_CONSTANTS,
) -> EnergyBreakdown:
    c = constants
    source_cost = len(graph.sources) * (c.Q_T + c.Q_A)

    relays: dict[NodeId, RelayEnergy] = {}
    relay_cost = 0.0
    for i in graph.relays:
        s = strategy[i]
        n_in = state.expected_in[i]
        auth = 0.0
        if s.authenticate:
            auth = authentication_cost(s.is_coding, s.mode, n_in, state.recv_any[i], c)
        r = RelayEnergy(n_in * c.Q_R, auth, state.forward[i] * c.Q_T)
        relays[i] = r
        relay_cost += r.reception + r.authentication + r.transmission

    destination_cost = 0.0
    for d in graph.destinations:
        destination_cost += state.expected_in[d] * (c.Q_R + c.Q_A)

    return EnergyBreakdown(
        total=source_cost + relay_cost + destination_cost,
        source_cost=source_cost,
        relay_cost=relay_cost,
        destination_cost=destination_cost,
        relays=MappingProxyType(relays),
    )


def evaluate(
    graph: NetworkGraph,
    attacks: AttackTopology,
    strategy: NetworkStrategy,
    constants: EnergyConstants = DEFAULT_CONSTANTS,
) -> tuple[PropagationState, EnergyBreakdown]:
    state = propagate(graph, attacks, strategy)
    return state, energy(graph, strategy, state, constants)


def butterfly_throughput_closed_form(p_AC: float, p_BC: float, p_CD: float, c_strategy: str) -> float:
    """Average decoding probability at E and F on the butterfly.

    ``0.5 * f_C * (1 - p_CD) * (2 - p_AC - p_BC)`` where ``f_C`` is the
    probability that C emits a clean combination: ``1 - p_AC p_BC`` for AXF
    and ``(1 - p_AC)(1 - p_BC)`` for XAF and XF (XF forwards polluted
    combinations, which destinations discard).
    """
    p_AC = _prob(p_AC, "p_AC")
    p_BC = _prob(p_BC, "p_BC")
    p_CD = _prob(p_CD, "p_CD")
    label = c_strategy.upper()
    if label == "AXF":
        f_c = 1.0 - p_AC * p_BC
    elif label in ("XAF", "XF"):
        f_c = (1.0 - p_AC) * (1.0 - p_BC)
    else:
        raise InputOutOfRange(f"coding strategy must be AXF, XAF or XF, got {c_strategy!r}")
    return 0.5 * f_c * (1.0 - p_CD) * (2.0 - p_AC - p_BC)


DEFAULT_TRIALS = 1_000_000
DEFAULT_SEED = 0


def throughput(
    graph: NetworkGraph,
    attacks: AttackTopology,
    strategy: NetworkStrategy,
    *,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
) -> float:
    """Closed form on the canonical butterfly, seeded Monte Carlo elsewhere."""
    validate_strategy(graph, strategy)
    if is_butterfly(graph):
        return butterfly_throughput_closed_form(
            attacks[("A", "C")], attacks[("B", "C")], attacks[("C", "D")], strategy["C"].label
        )
    from .simulator import SimulationConfig, simulate

    result = simulate(SimulationConfig(graph, attacks, strategy, trials=trials, seed=seed))
    return result.est_throughput[0]
