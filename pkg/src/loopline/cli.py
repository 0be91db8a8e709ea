"""``loopline run|diagram|oracle <scenario> [flags]``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import DegenerateCut, InvariantBreach, LooplineError
from .events import STRONG, Postulate, evolve, phase_observability_oracle
from .events.decision import ORACLE_TOL
from .graph import Cut, loop_area, topological_loop_exists
from .diagram import render
from .runner import area_json, run_report, table
from .scenarios import ScenarioDoc, load

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 2, 3
DEFAULT_SWEEP = (0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


class InputError(Exception):
    """Bad command-line input; reported on stderr with exit code 2."""


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _seed(args, doc: ScenarioDoc) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("LOOPLINE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"LOOPLINE_SEED must be an integer, got {env!r}") from None
    return doc.seed


def _postulate(args, doc: ScenarioDoc) -> Postulate:
    version = args.version or ("weak" if args.a_max is not None else None)
    if version is None:
        return doc.postulate
    if version == "strong":
        if args.a_max is not None:
            raise InputError("--a-max only applies to --version weak")
        return STRONG
    if args.a_max is None:
        if doc.postulate.kind == "weak":
            return doc.postulate
        raise InputError("--version weak needs --a-max")
    if args.a_max < 0:
        raise InputError("--a-max must be nonnegative")
    return Postulate.weak(args.a_max)


def cmd_run(args) -> int:
    doc = load(args.scenario)
    if args.repeat < 1:
        raise InputError("--repeat must be at least 1")
    seed = _seed(args, doc)
    version = _postulate(args, doc) if doc.is_graph else None
    if not doc.is_graph and (args.version or args.a_max is not None):
        raise InputError("--version and --a-max apply to graph scenarios only")
    report = run_report(doc, seed, version, args.repeat)
    if args.out:
        _write(args.out, _dump(report))
    if args.log and doc.is_graph:
        lines = [json.dumps(ev, sort_keys=True, ensure_ascii=False) for ev in report["events"]]
        _write(args.log, "".join(line + "\n" for line in lines))
    sys.stdout.write(_dump(report) if args.json else table(report))
    return EXIT_OK


def cmd_diagram(args) -> int:
    doc = load(args.scenario)
    _write(args.out, render(doc, args.format))
    return EXIT_OK


def parse_cut(spec: str, doc: ScenarioDoc) -> tuple[frozenset, frozenset]:
    if spec.count("|") != 1:
        raise InputError(f"cut must look like 'A,B|C', got {spec!r}")
    left, right = (frozenset(x.strip() for x in side.split(",") if x.strip()) for side in spec.split("|"))
    if not left or not right:
        raise InputError("both sides of the cut must name subsystems")
    unknown = (left | right) - set(doc.register)
    if unknown:
        raise InputError(f"unknown subsystems in cut: {', '.join(sorted(unknown))}")
    if left & right:
        raise InputError("cut sides overlap")
    return left, right


def cmd_oracle(args) -> int:
    doc = load(args.scenario)
    if not doc.is_graph:
        raise InputError("the oracle applies to graph scenarios only")
    side_s, side_w = parse_cut(args.cut, doc)
    g = doc.graph()
    if args.node is not None:
        try:
            node = g.node(args.node)
        except KeyError:
            raise InputError(f"no node {args.node!r}") from None
    else:
        touching = [nd for nd in g.ordered if set(nd.participants) & (side_s | side_w)]
        covering = [nd for nd in touching if (side_s | side_w) <= set(nd.participants)]
        if not touching:
            raise InputError("no node touches the cut's subsystems")
        node = (covering or touching)[0]
    psi = evolve(doc.initial_ket(), [nd for nd in g.ordered if nd.tick <= node.tick])
    cut = Cut(node.id, side_s, side_w)
    loop = topological_loop_exists(g, cut)
    area = loop_area(g, cut, strict=False)
    tol = doc.tolerances.get("oracle", ORACLE_TOL)
    try:
        observable = loop and phase_observability_oracle(g, cut, psi, tol)
    except DegenerateCut as exc:
        raise InputError(str(exc)) from None
    sweep = sorted(set(DEFAULT_SWEEP) | set(args.a_max or ()))
    weak = []
    for a in sweep:
        weak_event = (not observable) or area > a
        weak.append({"a_max": a, "verdict": "EVENT" if weak_event else "NO_EVENT"})
    report = {
        "scenario": doc.name,
        "node": node.id,
        "tick": node.tick,
        "cut": cut.label(g.register),
        "topological_loop": loop,
        "loop_area": area_json(area),
        "phase_observable": observable,
        "strong": "NO_EVENT" if observable else "EVENT",
        "weak": weak,
    }
    if args.json:
        sys.stdout.write(_dump(report))
    else:
        lines = [
            f"scenario {doc.name}  node {node.id} (tick {node.tick})  cut {report['cut']}",
            f"topological_loop {str(loop).lower()}",
            f"loop_area {'inf' if report['loop_area'] is None else f'{area:g}'}",
            f"phase_observable {str(observable).lower()}",
            f"STRONG verdict {report['strong']}",
        ]
        lines += [f"WEAK(a_max={w['a_max']:g}) verdict {w['verdict']}" for w in weak]
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="loopline", description="Run entanglement-loop event scenarios.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and report outcomes")
    r.add_argument("scenario", help="built-in name or path to a JSON scenario")
    r.add_argument("--seed", type=int, default=None, help="base seed (else LOOPLINE_SEED, else the scenario's)")
    r.add_argument("--version", choices=("strong", "weak"), default=None)
    r.add_argument("--a-max", type=float, default=None, help="loop-area bound for the weak postulate")
    r.add_argument("--repeat", type=int, default=1, help="number of runs, seeds seed..seed+repeat-1")
    r.add_argument("--out", default=None, help="write the JSON report here")
    r.add_argument("--log", default=None, help="write the first run's event log here (JSON lines)")
    r.add_argument("--json", action="store_true", help="print the JSON report instead of the table")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("diagram", help="render a spacetime diagram")
    d.add_argument("scenario")
    d.add_argument("--format", choices=("ascii", "svg"), default="ascii")
    d.add_argument("--out", default=None)
    d.set_defaults(func=cmd_diagram)

    o = sub.add_parser("oracle", help="loop and phase-observability report for one cut")
    o.add_argument("scenario")
    o.add_argument("--cut", required=True, help="system|record sides, e.g. 'A,B|C'")
    o.add_argument("--node", default=None, help="node id (default: first node touching the cut)")
    o.add_argument("--a-max", type=float, action="append", default=None, help="extra A_max value for the sweep")
    o.add_argument("--json", action="store_true")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantBreach as exc:
        print(f"loopline: invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (InputError, LooplineError, ValueError) as exc:
        print(f"loopline: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"loopline: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
