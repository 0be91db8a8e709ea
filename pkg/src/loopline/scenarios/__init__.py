"""Scenario documents: JSON parsing, serialization and the built-in library."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np
from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from ..errors import BadAmplitudes, ParseError, UnknownGate, UnknownScenario
from ..events.decision import STRONG, Postulate
from ..gates import GATES, make_gate
from ..graph import InteractionGraph, InteractionNode, validate
from ..hilbert import Ket, Register, ghz3, phi_pair, singlet
from ..transact import SiteNode
from .schema import SCENARIO_SCHEMA

BUILTINS = (
    "fig1a",
    "fig1b",
    "eq5-measurement",
    "singlet-symmetry",
    "avalanche-decoherence",
    "fig2a",
    "fig2b",
    "locality-equivalence",
)
NORM_TOL = 1e-8
PHI_REF = "$phi"

_VALIDATOR = Draft202012Validator(SCENARIO_SCHEMA)


@dataclass(frozen=True)
class NodeDoc:
    id: str
    participants: tuple[str, ...]
    gate: str
    params: dict = field(default_factory=dict)
    position: int | None = None
    non_reversed: bool = False


@dataclass(frozen=True)
class ScenarioDoc:
    name: str
    kind: str
    description: str = ""
    phi: float = 0.0
    seed: int = 0
    # graph scenarios
    register: tuple[str, ...] = ()
    initial: dict = field(default_factory=dict)
    schedule: tuple[tuple[int, tuple[NodeDoc, ...]], ...] = ()
    horizon: int = 0
    postulate: Postulate = STRONG
    tolerances: dict = field(default_factory=dict)
    probe: dict | None = None
    # transact scenarios
    sites: tuple[SiteNode, ...] = ()
    light_speed: int = 1
    order2_fraction: float = 1 / 3
    amplitudes: dict | None = None

    @property
    def is_graph(self) -> bool:
        return self.kind == "graph"

    def nodes(self) -> list[InteractionNode]:
        out = []
        for tick, nodes in self.schedule:
            for nd in nodes:
                params = {k: (self.phi if v == PHI_REF else v) for k, v in nd.params.items()}
                gate = make_gate(nd.gate, nd.participants, params)
                out.append(InteractionNode(nd.id, tick, nd.participants, gate, nd.position, nd.non_reversed, params))
        return out

    def graph(self) -> InteractionGraph:
        return InteractionGraph(Register(self.register), tuple(self.nodes()), self.horizon)

    def initial_ket(self) -> Ket:
        return _initial_ket(self.initial, self.register, self.phi)

    def layout(self) -> list[SiteNode]:
        return list(self.sites)


def _complex(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)


def _initial_ket(spec: Mapping, names: tuple[str, ...], phi: float, path: str = "initial") -> Ket:
    reg = Register(names)
    if "amplitudes" in spec:
        amps = np.array([_complex(a) for a in spec["amplitudes"]])
        if len(amps) != reg.dim:
            raise BadAmplitudes(f"expected {reg.dim} amplitudes, got {len(amps)}", f"{path}/amplitudes")
        nrm = float(np.linalg.norm(amps))
        if abs(nrm - 1) > NORM_TOL:
            raise BadAmplitudes(f"amplitude norm is {nrm:.12g}, not 1", f"{path}/amplitudes")
        return Ket(reg, amps / nrm)
    preset = spec["preset"]
    need = {"singlet": 2, "ghz3": 3, "phi-plus": 2, "phi-minus": 2}
    if preset == "product":
        symbols = spec.get("symbols")
        if symbols is None or len(symbols) != len(names):
            raise ParseError("product preset needs one symbol per subsystem", f"{path}/symbols")
        try:
            return Ket.product(reg, symbols)
        except (ValueError, KeyError) as exc:
            raise ParseError(str(exc), f"{path}/symbols") from None
    if "symbols" in spec:
        raise ParseError(f"preset {preset!r} takes no symbols", f"{path}/symbols")
    if len(names) != need[preset]:
        raise ParseError(f"preset {preset!r} needs {need[preset]} subsystems, register has {len(names)}", path)
    if preset == "singlet":
        return singlet(*names)
    if preset == "ghz3":
        return ghz3(phi, names)
    return phi_pair(phi, +1 if preset == "phi-plus" else -1, names)


def _schema_error(data) -> None:
    err = best_match(_VALIDATOR.iter_errors(data))
    if err is not None:
        path = "/".join(str(p) for p in err.absolute_path)
        raise ParseError(err.message, path)


def _line_of(text: str, key: str) -> int | None:
    needle = json.dumps(key)
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def from_dict(data: Mapping, text: str = "") -> ScenarioDoc:
    """Validate a decoded document and build the typed scenario."""
    _schema_error(data)
    common = dict(
        name=data["name"],
        kind=data["kind"],
        description=data.get("description", ""),
        phi=float(data.get("phi", 0.0)),
        seed=int(data.get("seed", 0)),
    )
    if data["kind"] == "transact":
        return _transact_doc(data, common)
    return _graph_doc(data, common, text)


def _graph_doc(data, common, text) -> ScenarioDoc:
    schedule = []
    for tick_s in sorted(data["schedule"], key=int):
        nodes = []
        for j, raw in enumerate(data["schedule"][tick_s]):
            path = f"schedule/{tick_s}/{j}"
            if raw["gate"] not in GATES:
                raise UnknownGate(f"unknown gate {raw['gate']!r}", f"{path}/gate", _line_of(text, raw["gate"]))
            nd = NodeDoc(
                raw["id"],
                tuple(raw["participants"]),
                raw["gate"],
                dict(raw.get("params", {})),
                raw.get("position"),
                bool(raw.get("non_reversed", False)),
            )
            nodes.append(nd)
        schedule.append((int(tick_s), tuple(nodes)))
    post = data.get("postulate", {"version": "strong"})
    postulate = STRONG if post["version"] == "strong" else Postulate.weak(float(post["a_max"]))
    doc = ScenarioDoc(
        **common,
        register=tuple(data["register"]),
        initial=dict(data["initial"]),
        schedule=tuple(schedule),
        horizon=int(data["horizon"]),
        postulate=postulate,
        tolerances=dict(data.get("tolerances", {})),
        probe=dict(data["probe"]) if "probe" in data else None,
    )
    try:
        reg = Register(doc.register)
    except ValueError as exc:
        raise ParseError(str(exc), "register") from None
    doc.initial_ket()
    for tick, nodes in doc.schedule:
        for j, nd in enumerate(nodes):
            try:
                params = {k: (doc.phi if v == PHI_REF else v) for k, v in nd.params.items()}
                make_gate(nd.gate, nd.participants, params)
            except (ValueError, TypeError) as exc:
                raise ParseError(str(exc), f"schedule/{tick}/{j}") from None
    diags = validate(InteractionGraph(reg, tuple(doc.nodes()), doc.horizon))
    if diags:
        raise ParseError("graph does not validate: " + "; ".join(str(d) for d in diags), "schedule")
    if doc.probe is not None:
        p = doc.probe
        if not (p["t_i"] <= min(p["ticks"]) and max(p["ticks"]) <= p["t_f"] <= doc.horizon):
            raise ParseError("probe ticks must satisfy t_i <= ticks <= t_f <= horizon", "probe")
    return doc


def _transact_doc(data, common) -> ScenarioDoc:
    sites = tuple(SiteNode(s["name"], s["position"], s["tick"], s["role"]) for s in data["sites"])
    amps = data.get("amplitudes")
    if amps is not None:
        total = sum(abs(_complex(v)) ** 2 for v in amps.values())
        if abs(math.sqrt(total) - 1) > NORM_TOL:
            raise BadAmplitudes(f"amplitude norm is {math.sqrt(total):.12g}, not 1", "amplitudes")
        amps = {k: (list(v) if isinstance(v, list) else v) for k, v in amps.items()}
    return ScenarioDoc(
        **common,
        sites=sites,
        light_speed=int(data.get("light_speed", 1)),
        order2_fraction=float(data.get("order2_fraction", 1 / 3)),
        amplitudes=amps,
    )


def parse(text: str) -> ScenarioDoc:
    """Parse one JSON scenario document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, "", exc.lineno) from None
    if not isinstance(data, dict):
        raise ParseError("a scenario document must be a JSON object")
    return from_dict(data, text)


def to_dict(doc: ScenarioDoc) -> dict:
    out: dict = {"name": doc.name, "kind": doc.kind}
    if doc.description:
        out["description"] = doc.description
    out["phi"] = doc.phi
    out["seed"] = doc.seed
    if doc.kind == "transact":
        out["sites"] = [
            {"name": s.name, "position": s.position, "tick": s.tick, "role": s.role} for s in doc.sites
        ]
        out["light_speed"] = doc.light_speed
        out["order2_fraction"] = doc.order2_fraction
        if doc.amplitudes is not None:
            out["amplitudes"] = doc.amplitudes
        return out
    out["register"] = list(doc.register)
    out["initial"] = doc.initial
    sched = {}
    for tick, nodes in doc.schedule:
        rows = []
        for nd in nodes:
            row = {"id": nd.id, "participants": list(nd.participants), "gate": nd.gate}
            if nd.params:
                row["params"] = nd.params
            if nd.position is not None:
                row["position"] = nd.position
            if nd.non_reversed:
                row["non_reversed"] = True
            rows.append(row)
        sched[str(tick)] = rows
    out["schedule"] = sched
    out["horizon"] = doc.horizon
    out["postulate"] = doc.postulate.to_json()
    if doc.tolerances:
        out["tolerances"] = doc.tolerances
    if doc.probe is not None:
        out["probe"] = doc.probe
    return out


def serialize(doc: ScenarioDoc) -> str:
    return json.dumps(to_dict(doc), indent=2, ensure_ascii=False) + "\n"


def _data_dir():
    return resources.files(__package__) / "data"


def builtin(name: str) -> ScenarioDoc:
    """One of the shipped fixtures, by name."""
    if name not in BUILTINS:
        raise UnknownScenario(f"no built-in scenario {name!r}; choose from {', '.join(BUILTINS)}")
    return parse((_data_dir() / f"{name}.json").read_text(encoding="utf-8"))


def expected(name: str) -> dict:
    """The stored expected output for a built-in scenario."""
    if name not in BUILTINS:
        raise UnknownScenario(f"no built-in scenario {name!r}")
    return json.loads((_data_dir() / f"{name}.expected.json").read_text(encoding="utf-8"))


def load(ref: str) -> ScenarioDoc:
    """A built-in name or a path to a JSON document."""
    if ref in BUILTINS:
        return builtin(ref)
    path = Path(ref)
    if not path.exists():
        raise UnknownScenario(f"{ref!r} is neither a built-in scenario nor a file")
    return parse(path.read_text(encoding="utf-8"))


__all__ = [
    "BUILTINS",
    "NodeDoc",
    "ScenarioDoc",
    "builtin",
    "expected",
    "from_dict",
    "load",
    "parse",
    "serialize",
    "to_dict",
]
