"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 validation threshold exceeded,
4 strategy space over the search cap.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .analytics import DEFAULT_CONSTANTS, butterfly_throughput_closed_form, evaluate
from .errors import AuthPlanError, CapacityExceeded
from .graph import is_butterfly, make_attack
from .io import (
    constants_to_dict,
    load_attacks,
    load_constants,
    load_network,
    parse_attack_overrides,
    parse_grid,
    parse_links,
    parse_strategy,
)
from .optimizer import (
    DEFAULT_MAX_RELAYS,
    DEFAULT_THROUGHPUT_TOL,
    Objective,
    optimize,
    sweep,
    sweep_csv,
    switch_points,
)
from .simulator import RNG_ALGORITHM, SimulationConfig, simulate

EXIT_INPUT = 2
EXIT_VALIDATION = 3
EXIT_CAPACITY = 4


def _write_with_manifest(path: str, content: str, manifest: dict) -> None:
    Path(path).write_text(content, encoding="utf-8")
    Path(path + ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _manifest(args, **params) -> dict:
    inputs = {"network": args.network}
    for name in ("attacks_file", "constants_file"):
        if getattr(args, name, None):
            inputs[name] = getattr(args, name)
    return {"command": args.command, "inputs": inputs, "parameters": params, "version": __version__}


def _load_inputs(args):
    graph, attacks = load_network(args.network)
    if getattr(args, "attacks_file", None):
        attacks = load_attacks(args.attacks_file, graph, attacks)
    overrides = parse_attack_overrides(getattr(args, "attack", None) or [])
    if overrides:
        attacks = attacks.with_updates(graph, overrides)
    constants = DEFAULT_CONSTANTS
    if getattr(args, "constants_file", None):
        constants = load_constants(args.constants_file)
    return graph, attacks, constants


def cmd_describe(args) -> int:
    graph, attacks = load_network(args.network)
    print(f"network: {args.network}")
    print("nodes:")
    for n in graph.nodes:
        role = graph.roles[n]
        print(f"  {n:<12} {role.value:<17} in={len(graph.in_neighbors[n])} out={len(graph.out_neighbors[n])}")
    print(f"c={graph.n_coding}, N={graph.n_relays}, strategies={graph.strategy_space_size}")
    print("edges:")
    for u, v in graph.edges:
        print(f"  {u} -> {v}  p={attacks[(u, v)]:.12g}")
    return 0


def _print_result(res, graph) -> None:
    e = res.energy
    print(f"objective: {res.objective.value}")
    print(f"strategy: {res.strategy.describe()}")
    print(f"F_E = {e.total:.6e} J  (F_O = {e.source_cost:.6e}, F_R = {e.relay_cost:.6e}, F_D = {e.destination_cost:.6e})")
    for n, r in e.relays.items():
        print(
            f"  {n}: reception {r.reception:.6e}  authentication {r.authentication:.6e}  "
            f"transmission {r.transmission:.6e}"
        )
    kind = "closed form" if is_butterfly(graph) else "Monte Carlo"
    print(f"P_th = {res.throughput:.6f} ({kind})")


def cmd_optimize(args) -> int:
    graph, attacks, constants = _load_inputs(args)
    objective = Objective(args.objective)
    res = optimize(
        graph,
        attacks,
        objective,
        constants,
        args.tolerance,
        max_relays=args.max_relays,
        trials=args.trials,
        seed=args.seed,
    )
    _print_result(res, graph)
    if args.out:
        record = {"objective": objective.value, **{f"label.{k}": v for k, v in res.strategy.labels().items()}}
        record.update(res.energy.as_record())
        record["P_th"] = f"{res.throughput:.12g}"
        content = ",".join(record) + "\n" + ",".join(record.values()) + "\n"
        manifest = _manifest(
            args,
            objective=objective.value,
            attack=args.attack or [],
            trials=args.trials,
            seed=args.seed,
            tolerance=args.tolerance,
            max_relays=args.max_relays,
            constants=constants_to_dict(constants),
        )
        _write_with_manifest(args.out, content, manifest)
    return 0


def cmd_sweep(args) -> int:
    graph, attacks, constants = _load_inputs(args)
    links = parse_links(args.links)
    grid = parse_grid(args.grid)
    for e in links:
        if not graph.has_edge(e):
            raise AuthPlanError(f"--links: edge ({e[0]},{e[1]}) is not in the graph")
    objective = Objective(args.objective)
    fixed = {e: p for e, p in attacks.items() if p and e not in links}
    rows = sweep(
        graph,
        links,
        grid,
        objective,
        constants,
        fixed=fixed,
        throughput_tolerance=args.tolerance,
        max_relays=args.max_relays,
        trials=args.trials,
        seed=args.seed,
    )
    content = sweep_csv(rows, graph.relays)
    if args.out:
        manifest = _manifest(
            args,
            links=[f"{u}-{v}" for u, v in links],
            grid=args.grid,
            objective=objective.value,
            trials=args.trials,
            seed=args.seed,
            tolerance=args.tolerance,
            constants=constants_to_dict(constants),
        )
        _write_with_manifest(args.out, content, manifest)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        sys.stdout.write(content)
    switches = switch_points(rows)
    if not switches:
        print("no strategy switch on this grid")
    for p, before, after in switches:
        print(f"switch at p={p:.12g}: ({';'.join(before)}) -> ({';'.join(after)})")
    return 0


def _z(analytic: float, mean: float, se: float) -> tuple[str, str, bool]:
    """(z text, status, within threshold check value) for one comparison row."""
    if not se > 0:
        if abs(mean - analytic) <= 1e-12:
            return "", "exact", True
        return "inf", "MISMATCH", False
    z = (mean - analytic) / se
    return f"{z:+.3f}", "", True


def cmd_simulate(args) -> int:
    graph, attacks, constants = _load_inputs(args)
    strategy = parse_strategy(args.strategy, graph)
    state, e = evaluate(graph, attacks, strategy, constants)
    result = simulate(SimulationConfig(graph, attacks, strategy, constants, trials=args.trials, seed=args.seed))

    rows = []
    for n, f in state.forward.items():
        rows.append(("f", n, f, *result.est_forward[n], True, ""))
    for (k, i), p in state.pollute.items():
        rows.append(("P", f"{k}->{i}", p, *result.est_pollute[(k, i)], True, ""))
    rows.append(("F_E", "", e.total, *result.est_energy, True, ""))
    if is_butterfly(graph):
        label = strategy["C"].label
        closed = butterfly_throughput_closed_form(attacks[("A", "C")], attacks[("B", "C")], attacks[("C", "D")], label)
        note = f"closed form vs strict decoding ({label} at C), diff={result.est_throughput[0] - closed:+.6f}; not gated"
        rows.append(("P_th", "", closed, *result.est_throughput, False, note))
    else:
        rows.append(("P_th", "", math.nan, *result.est_throughput, False, "no closed form; Monte Carlo only"))

    failed = False
    out_rows = []
    print(f"strategy {strategy.describe()}  trials={result.trials} seed={result.seed} rng={result.rng}")
    print(f"{'qty':<5}{'key':<12}{'analytic':>16}{'simulated':>16}{'se':>14}{'z':>10}  status")
    for qty, key, analytic, mean, se, gated, note in rows:
        if math.isnan(analytic):
            ztxt, status, ok = "", "", True
        else:
            ztxt, status, ok = _z(analytic, mean, se)
            if ztxt and ztxt != "inf" and args.fail_z is not None and abs(float(ztxt)) > args.fail_z:
                ok = False
        if gated and not ok:
            failed = True
            status = status or "FAIL"
        if note:
            status = f"{status} {note}".strip()
        print(f"{qty:<5}{key:<12}{analytic:>16.10g}{mean:>16.10g}{se:>14.4g}{ztxt:>10}  {status}")
        out_rows.append([qty, key, f"{analytic:.12g}", f"{mean:.12g}", f"{se:.12g}", ztxt, status])

    if args.out:
        lines = ["quantity,key,analytic,mean,se,z,status"]
        for r in out_rows:
            lines.append(",".join(f'"{x}"' if "," in x else x for x in r))
        manifest = _manifest(
            args,
            strategy=strategy.labels(),
            attack=args.attack or [],
            trials=args.trials,
            seed=args.seed,
            rng=RNG_ALGORITHM,
            fail_z=args.fail_z,
            constants=constants_to_dict(constants),
        )
        _write_with_manifest(args.out, "\n".join(lines) + "\n", manifest)

    if args.fail_z is not None and failed:
        print(f"validation failed: |z| > {args.fail_z} or zero-variance mismatch", file=sys.stderr)
        return EXIT_VALIDATION
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="authplan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"authplan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, attacks=True):
        p.add_argument("network", help="network JSON file, or 'butterfly' for the built-in network")
        if attacks:
            p.add_argument("--attack", action="append", metavar="FROM-TO=P", help="override attack probabilities")
            p.add_argument("--attacks-file", help="JSON file with an 'attacks' list")
            p.add_argument("--constants-file", help="JSON file with Q_T, Q_R, Q_A, Q_XOR in joules")
            p.add_argument("--trials", type=int, default=1_000_000)
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("describe", help="print roles, c, N and the strategy-space size")
    common(p, attacks=False)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("optimize", help="find the optimal strategy")
    common(p)
    p.add_argument("--objective", choices=[o.value for o in Objective], default="energy")
    p.add_argument("--tolerance", type=float, default=DEFAULT_THROUGHPUT_TOL)
    p.add_argument("--max-relays", type=int, default=DEFAULT_MAX_RELAYS)
    p.add_argument("--out", help="write a one-row CSV record here")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="optimise over a grid of attack probabilities")
    common(p)
    p.add_argument("--links", required=True, help="swept edges, e.g. A-C,B-C")
    p.add_argument("--grid", default="0:1:0.01", help="start:stop:step (inclusive)")
    p.add_argument("--objective", choices=[o.value for o in Objective], default="energy")
    p.add_argument("--tolerance", type=float, default=DEFAULT_THROUGHPUT_TOL)
    p.add_argument("--max-relays", type=int, default=DEFAULT_MAX_RELAYS)
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="compare analytic values with Monte Carlo estimates")
    common(p)
    p.add_argument("--strategy", required=True, help="NODE=LABEL pairs (C=XAF,D=F) or a strategy JSON file")
    p.add_argument("--fail-z", type=float, default=None, help="exit 3 if any |z| exceeds this")
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except AuthPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
