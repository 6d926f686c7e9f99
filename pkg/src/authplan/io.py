"""JSON network/attack/strategy/constants files and command-line value syntax.

Network file::

    {"nodes": [{"id": "A", "role": "source"}, ...],
     "edges": [{"from": "A", "to": "C", "p": 0.3}, ...]}

Attack file (overrides edge-level ``p``)::

    {"attacks": [{"from": "A", "to": "C", "p": 0.3}]}

Strategy file::

    {"strategy": {"C": "XAF", "D": "F"}}
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Mapping

from .analytics import EnergyConstants, NetworkStrategy
from .errors import AuthPlanError, ParseError
from .graph import ROLE_HINTS, AttackTopology, Edge, NetworkGraph, build_network, butterfly, make_attack

BUILTIN_NETWORKS = {"butterfly": butterfly}


def _read_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", source=str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", source=str(path)) from None


def _expect(obj: Any, kind: type, path: str, source: str | None):
    if not isinstance(obj, kind) or (kind in (int, float) and isinstance(obj, bool)):
        names = {dict: "object", list: "array", str: "string", float: "number"}
        raise ParseError(f"expected {names.get(kind, kind.__name__)}, got {type(obj).__name__}", path, source)
    return obj


def _number(obj: Any, path: str, source: str | None) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ParseError(f"expected number, got {type(obj).__name__}", path, source)
    return float(obj)


def _edge_entries(items: Any, key: str, source: str | None, require_p: bool) -> list[tuple[Edge, float | None]]:
    _expect(items, list, key, source)
    out = []
    for j, item in enumerate(items):
        where = f"{key}[{j}]"
        _expect(item, dict, where, source)
        for field in ("from", "to"):
            if field not in item:
                raise ParseError(f"missing field {field!r}", where, source)
            _expect(item[field], str, f"{where}.{field}", source)
        p = None
        if "p" in item:
            p = _number(item["p"], f"{where}.p", source)
        elif require_p:
            raise ParseError("missing field 'p'", where, source)
        out.append(((item["from"], item["to"]), p))
    return out


def network_from_dict(data: Any, source: str | None = None) -> tuple[NetworkGraph, AttackTopology]:
    _expect(data, dict, "$", source)
    for key in ("nodes", "edges"):
        if key not in data:
            raise ParseError(f"missing top-level field {key!r}", "$", source)
    nodes = []
    for j, item in enumerate(_expect(data["nodes"], list, "nodes", source)):
        where = f"nodes[{j}]"
        _expect(item, dict, where, source)
        if "id" not in item:
            raise ParseError("missing field 'id'", where, source)
        if "role" not in item:
            raise ParseError("missing field 'role'", where, source)
        _expect(item["id"], str, f"{where}.id", source)
        role = _expect(item["role"], str, f"{where}.role", source)
        if role not in ROLE_HINTS:
            raise ParseError(f"role must be one of {', '.join(ROLE_HINTS)}, got {role!r}", f"{where}.role", source)
        nodes.append((item["id"], role))
    entries = _edge_entries(data["edges"], "edges", source, require_p=False)
    try:
        graph = build_network(nodes, [e for e, _ in entries])
        attacks = make_attack(graph, [(e, p) for e, p in entries if p is not None])
        if "attacks" in data:
            attacks = attacks.with_updates(graph, dict(_edge_entries(data["attacks"], "attacks", source, True)))
    except ParseError:
        raise
    except AuthPlanError as exc:
        raise ParseError(str(exc), "edges", source) from exc
    return graph, attacks


def load_network(spec: str | Path) -> tuple[NetworkGraph, AttackTopology]:
    """Load a network file, or a built-in network by name (``butterfly``)."""
    if str(spec) in BUILTIN_NETWORKS and not Path(spec).exists():
        g = BUILTIN_NETWORKS[str(spec)]()
        return g, make_attack(g)
    return network_from_dict(_read_json(spec), str(spec))


def load_attacks(path: str | Path, graph: NetworkGraph, base: AttackTopology | None = None) -> AttackTopology:
    data = _read_json(path)
    _expect(data, dict, "$", str(path))
    if "attacks" not in data:
        raise ParseError("missing top-level field 'attacks'", "$", str(path))
    entries = dict(_edge_entries(data["attacks"], "attacks", str(path), True))
    try:
        return (base or make_attack(graph)).with_updates(graph, entries)
    except AuthPlanError as exc:
        raise ParseError(str(exc), "attacks", str(path)) from exc


def network_to_dict(graph: NetworkGraph, attacks: AttackTopology | None = None) -> dict:
    return {
        "nodes": [{"id": n, "role": graph.roles[n].hint} for n in graph.nodes],
        "edges": [
            {"from": u, "to": v, "p": attacks[(u, v)] if attacks else 0.0} for u, v in graph.edges
        ],
    }


def dump_network(graph: NetworkGraph, attacks: AttackTopology | None = None) -> str:
    return json.dumps(network_to_dict(graph, attacks), indent=2) + "\n"


def load_constants(path: str | Path) -> EnergyConstants:
    data = _read_json(path)
    _expect(data, dict, "$", str(path))
    values = {}
    for key in ("Q_T", "Q_R", "Q_A", "Q_XOR"):
        if key in data:
            values[key] = _number(data[key], key, str(path))
    unknown = sorted(set(data) - {"Q_T", "Q_R", "Q_A", "Q_XOR"})
    if unknown:
        raise ParseError(f"unknown constant(s): {', '.join(unknown)}", "$", str(path))
    try:
        return EnergyConstants(**values)
    except AuthPlanError as exc:
        raise ParseError(str(exc), "$", str(path)) from exc


def parse_edge(text: str) -> Edge:
    """``A-C`` or ``A->C``."""
    text = text.strip()
    sep = "->" if "->" in text else "-"
    parts = text.split(sep)
    if len(parts) != 2 or not all(parts):
        raise ParseError(f"edge must look like FROM-TO, got {text!r}")
    return parts[0].strip(), parts[1].strip()


def parse_links(text: str) -> list[Edge]:
    return [parse_edge(t) for t in text.split(",") if t.strip()]


def parse_attack_overrides(items: list[str]) -> dict[Edge, float]:
    """``A-C=0.5`` entries, comma-separated or repeated."""
    out = {}
    for item in items:
        for tok in item.split(","):
            if not tok.strip():
                continue
            if "=" not in tok:
                raise ParseError(f"attack override must look like FROM-TO=P, got {tok!r}", "--attack")
            edge, value = tok.split("=", 1)
            try:
                out[parse_edge(edge)] = float(value)
            except ValueError:
                raise ParseError(f"not a number: {value!r}", "--attack") from None
    return out


def parse_grid(text: str, tol: float = 1e-12) -> list[float]:
    """``start:stop:step``, inclusive of ``stop`` when the step divides the range."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ParseError(f"grid must look like start:stop:step, got {text!r}", "--grid")
    try:
        start, stop, step = (float(x) for x in parts)
    except ValueError:
        raise ParseError(f"grid values must be numbers, got {text!r}", "--grid") from None
    if stop < start:
        raise ParseError("grid stop is below start", "--grid")
    if start == stop:
        return [start]
    if not step > 0:
        raise ParseError("grid step must be positive", "--grid")
    n = math.floor((stop - start) / step + tol)
    return [round(start + k * step, 12) for k in range(n + 1)]


def _labels_from(obj: Any, source: str | None) -> dict[str, str]:
    _expect(obj, dict, "strategy", source)
    for node, label in obj.items():
        _expect(label, str, f"strategy.{node}", source)
    return dict(obj)


def parse_strategy(text: str, graph: NetworkGraph) -> NetworkStrategy:
    """``C=XAF,D=F`` or a path to a strategy JSON file."""
    if Path(text).is_file():
        data = _read_json(text)
        _expect(data, dict, "$", text)
        if "strategy" not in data:
            raise ParseError("missing top-level field 'strategy'", "$", text)
        labels = _labels_from(data["strategy"], text)
    else:
        labels = {}
        for tok in text.split(","):
            if not tok.strip():
                continue
            if "=" not in tok:
                raise ParseError(f"strategy entries must look like NODE=LABEL, got {tok!r}", "--strategy")
            node, label = tok.split("=", 1)
            labels[node.strip()] = label.strip()
    try:
        return NetworkStrategy.from_labels(graph, labels)
    except AuthPlanError as exc:
        raise ParseError(str(exc), "--strategy") from exc


def strategy_to_dict(strategy: NetworkStrategy) -> dict:
    return {"strategy": strategy.labels()}


def constants_to_dict(c: EnergyConstants) -> Mapping[str, float]:
    return {"Q_T": c.Q_T, "Q_R": c.Q_R, "Q_A": c.Q_A, "Q_XOR": c.Q_XOR}
