"""Offer/confirmation-wave cascade on a 1-D lattice.

Waves travel along null rays (position changes by ``light_speed`` per tick).
A first-order offer wave (OW) from the emitter is absorbed by the first absorber
on each ray.  Every absorber re-emits an OW one order higher; OWs of order two
or more are absorbed only by a node that receives at least two of them at once.
Confirmation waves (CW) run back down the absorption chain to the emitter, and
every distinct CW origin reaching the emitter is a candidate transaction.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import NoAbsorber, ProtocolError
from .hilbert import Ket, Register, SQRT1_2

EMITTER = "EMITTER"
ABSORBER = "ABSORBER"
OW = "OW"
CW = "CW"


@dataclass(frozen=True)
class SiteNode:
    name: str
    position: int
    tick: int
    role: str = ABSORBER

    def __post_init__(self):
        if self.role not in (EMITTER, ABSORBER):
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class WaveMessage:
    kind: str
    order: int
    source: SiteNode
    target: SiteNode | None
    weight: float

    def __post_init__(self):
        if self.order < 1:
            raise ProtocolError("wave order must be at least 1")
        if self.target is not None:
            dt = self.target.tick - self.source.tick
            if (self.kind == OW and dt <= 0) or (self.kind == CW and dt >= 0):
                raise ProtocolError(f"{self.kind} from {self.source.name} to {self.target.name} breaks causal order")

    @property
    def tick_from(self) -> int:
        return self.source.tick

    @property
    def tick_to(self) -> int | None:
        return None if self.target is None else self.target.tick

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "order": self.order,
            "source": self.source.name,
            "target": None if self.target is None else self.target.name,
            "tick_from": self.tick_from,
            "tick_to": self.tick_to,
            "weight": self.weight,
        }


@dataclass(frozen=True, eq=False)
class Transaction:
    order: int
    participants: frozenset
    outcome: object
    probability: float
    label: str
    origin: str = ""


def pair_ket(first: str, second: str, phi: float = 0.0) -> Ket:
    """(|g>_first |e>_second + e^{i phi} |e>_first |g>_second)/sqrt(2), with g -> bit 0, e -> bit 1."""
    amps = np.zeros(4, dtype=complex)
    amps[1], amps[2] = SQRT1_2, np.exp(1j * phi) * SQRT1_2
    return Ket(Register((first, second)), amps)


def _ray(layout: Sequence[SiteNode], src: SiteNode, direction: int, speed: int) -> list[SiteNode]:
    hits = [
        nd for nd in layout
        if nd.tick > src.tick and nd.position - src.position == direction * speed * (nd.tick - src.tick)
    ]
    return sorted(hits, key=lambda nd: nd.tick)


def check_layout(layout: Sequence[SiteNode]) -> SiteNode:
    emitters = [nd for nd in layout if nd.role == EMITTER]
    if len(emitters) != 1:
        raise ProtocolError(f"a layout needs exactly one emitter, found {len(emitters)}")
    seen = {}
    for nd in layout:
        if (nd.position, nd.tick) in seen:
            raise ProtocolError(f"sites {seen[(nd.position, nd.tick)]} and {nd.name} share a spacetime point")
        seen[(nd.position, nd.tick)] = nd.name
    if len({nd.name for nd in layout}) != len(layout):
        raise ProtocolError("site names must be unique")
    return emitters[0]


def cascade(
    layout: Sequence[SiteNode],
    light_speed: int = 1,
    order2_fraction: float = 1 / 3,
    phi: float = 0.0,
) -> tuple[list[Transaction], list[WaveMessage]]:
    """Run the OW/CW exchange to quiescence; return candidate transactions and the message trace.

    Candidates carry default probabilities: first-order candidates share the
    weight equally, and any higher-order candidates share ``order2_fraction``.
    """
    emitter = check_layout(layout)
    absorbers = [nd for nd in layout if nd.role == ABSORBER]
    max_order = len({nd.tick for nd in absorbers}) + 1
    ow_msgs: list[WaveMessage] = []
    # sources[node] = nodes whose OWs it absorbed; absorbed_order[node] = order absorbed
    sources: dict[str, list[SiteNode]] = {}
    absorbed_order: dict[str, int] = {}
    fully_absorbed: dict[str, bool] = {}

    # first order: first absorber on each ray
    first = []
    for d in (-1, 1):
        hit = next((nd for nd in _ray(layout, emitter, d, light_speed) if nd.role == ABSORBER), None)
        if hit is not None:
            first.append(hit)
    if not first:
        raise NoAbsorber(f"no absorber on the light rays of emitter {emitter.name}")
    for nd in first:
        ow_msgs.append(WaveMessage(OW, 1, emitter, nd, 1 / math.sqrt(len(first))))
        sources[nd.name] = [emitter]
        absorbed_order[nd.name] = 1

    wave = first
    order = 2
    while wave:
        if order > max_order:
            raise ProtocolError(f"cascade exceeded its order bound {max_order}")
        # every ray from every emitter of this order, with the nodes it passes in tick order
        rays = []
        for src in sorted(wave, key=lambda nd: (nd.tick, nd.position)):
            for d in (-1, 1):
                path = [nd for nd in _ray(layout, src, d, light_speed) if nd.role == ABSORBER]
                rays.append({"src": src, "path": path, "absorbed_at": None, "reached": []})
        stops = sorted({nd for r in rays for nd in r["path"]}, key=lambda nd: (nd.tick, nd.position))
        next_wave = []
        for stop in stops:
            incoming = [r for r in rays if stop in r["path"] and r["absorbed_at"] is None
                        and all(p.tick < stop.tick or p is stop for p in r["reached"] + [stop])]
            incoming = [r for r in incoming if r["path"].index(stop) == len(r["reached"])]
            for r in incoming:
                r["reached"].append(stop)
            if len({r["src"].name for r in incoming}) >= 2 and stop.name not in absorbed_order:
                for r in incoming:
                    r["absorbed_at"] = stop
                sources[stop.name] = sorted({r["src"] for r in incoming}, key=lambda nd: nd.position)
                absorbed_order[stop.name] = order
                next_wave.append(stop)
        for src in wave:
            own = [r for r in rays if r["src"] is src]
            targets = [nd for r in own for nd in r["reached"]]
            w = 1 / math.sqrt(max(1, len(targets)))
            if not targets:
                ow_msgs.append(WaveMessage(OW, order, src, None, 1.0))
            for nd in sorted(targets, key=lambda nd: (nd.tick, nd.position)):
                ow_msgs.append(WaveMessage(OW, order, src, nd, w))
            fully_absorbed[src.name] = all(r["absorbed_at"] is not None for r in own)
        wave = next_wave
        order += 1

    # confirmation waves: each node whose onward OW is not fully absorbed confirms the
    # order it absorbed; confirmations are forwarded down the chain to the emitter
    cw_msgs: list[tuple[str, WaveMessage]] = []
    arrivals: dict[str, list[WaveMessage]] = defaultdict(list)
    by_name = {nd.name: nd for nd in layout}

    def send_back(node: SiteNode, cw_order: int, origin: str):
        for src in sources[node.name]:
            msg = WaveMessage(CW, cw_order, node, src, 1.0)
            cw_msgs.append((origin, msg))
            if src is emitter:
                arrivals[origin].append(msg)
            else:
                send_back(src, cw_order, origin)

    originators = sorted(
        (by_name[n] for n in absorbed_order if not fully_absorbed.get(n, False)),
        key=lambda nd: (-nd.tick, nd.position),
    )
    for nd in originators:
        send_back(nd, absorbed_order[nd.name], nd.name)

    candidates = _candidates(arrivals, by_name, sources, absorbed_order, order2_fraction, phi)
    amp = {c.origin: math.sqrt(c.probability) for c in candidates}
    cw_msgs = [replace(m, weight=amp[origin]) for origin, m in cw_msgs]
    trace = ow_msgs + sorted(cw_msgs, key=lambda m: (-m.tick_from, -m.order, m.source.position, m.target.position))
    return candidates, trace


def _chain(name: str, sources, emitter_names) -> set:
    out = {name}
    for src in sources.get(name, []):
        if src.name not in emitter_names:
            out |= _chain(src.name, sources, emitter_names)
    return out


def _candidates(arrivals, by_name, sources, absorbed_order, order2_fraction, phi) -> list[Transaction]:
    emitter_names = {nd.name for nd in by_name.values() if nd.role == EMITTER}
    raw = []
    for origin in sorted(arrivals, key=lambda n: (absorbed_order[n], by_name[n].position)):
        k = absorbed_order[origin]
        members = _chain(origin, sources, emitter_names)
        if k == 1:
            outcome = by_name[origin]
            label = origin
        elif k == 2:
            first, second = (nd.name for nd in sources[origin])
            outcome = pair_ket(first, second, phi)
            label = f"{first}+{second}@{origin}"
        else:
            outcome = None
            label = "+".join(sorted(members - {origin})) + f"@{origin}"
        raw.append((k, frozenset(members), outcome, label, origin))
    n1 = sum(1 for r in raw if r[0] == 1)
    nh = len(raw) - n1
    share_high = order2_fraction if nh and n1 else (1.0 if nh else 0.0)
    out = []
    for k, members, outcome, label, origin in raw:
        p = (1 - share_high) / n1 if k == 1 else share_high / nh
        out.append(Transaction(k, members, outcome, p, label, origin))
    return out


def candidate_probabilities(candidates: Sequence[Transaction], amplitudes=None) -> np.ndarray:
    """Normalized squared amplitudes; defaults to each candidate's own probability."""
    if amplitudes is None:
        p = np.array([c.probability for c in candidates], dtype=float)
    else:
        if isinstance(amplitudes, Mapping):
            amps = [amplitudes[c.label] for c in candidates]
        else:
            amps = list(amplitudes)
        if len(amps) != len(candidates):
            raise ValueError("need one amplitude per candidate")
        p = np.abs(np.array([complex(*a) if isinstance(a, (list, tuple)) else complex(a) for a in amps])) ** 2
    total = p.sum()
    if total <= 0:
        raise ValueError("candidate amplitudes are all zero")
    return p / total


def resolve(
    candidates: Sequence[Transaction],
    underlying_amplitudes=None,
    rng: np.random.Generator | None = None,
    phi: float | None = None,
) -> Transaction:
    """Pick exactly one candidate with probability proportional to its squared amplitude."""
    if not candidates:
        raise ProtocolError("nothing to resolve")
    p = candidate_probabilities(candidates, underlying_amplitudes)
    rng = rng if rng is not None else np.random.default_rng(0)
    u = rng.random()
    idx = min(int(np.searchsorted(np.cumsum(p), u, side="right")), len(p) - 1)
    chosen = candidates[idx]
    outcome = chosen.outcome
    if phi is not None and chosen.order == 2:
        outcome = pair_ket(*outcome.register.names, phi)
    return replace(chosen, probability=float(p[idx]), outcome=outcome)


def trace_lines(trace: Sequence[WaveMessage]) -> list[str]:
    """One JSON object per message, keys in a fixed order."""
    return [json.dumps(m.to_json(), separators=(",", ":")) for m in trace]
