"""Event decisions: loop topology first, then the phase-observability oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from ..errors import DegenerateCut
from ..graph import Cut, InteractionGraph, cone_subsystems, loop_area, topological_loop_exists
from ..hilbert import Ket, apply_gate, reduced
from .branches import Branches, schmidt_rank

EVENT = "EVENT"
NO_EVENT = "NO_EVENT"

ORACLE_TOL = 1e-8
ORACLE_DELTAS = (math.pi / 2, math.pi)


@dataclass(frozen=True)
class Postulate:
    """Which event postulate is active: ``strong``, or ``weak`` with a loop-area bound."""

    kind: str = "strong"
    a_max: float | None = None

    def __post_init__(self):
        if self.kind not in ("strong", "weak"):
            raise ValueError(f"unknown postulate version {self.kind!r}")
        if self.kind == "weak" and (self.a_max is None or self.a_max < 0):
            raise ValueError("the weak postulate needs a nonnegative a_max")
        if self.kind == "strong" and self.a_max is not None:
            raise ValueError("the strong postulate takes no a_max")

    @classmethod
    def weak(cls, a_max: float) -> "Postulate":
        return cls("weak", a_max)

    def __str__(self):
        return "STRONG" if self.kind == "strong" else f"WEAK({self.a_max:g})"

    def to_json(self) -> dict:
        return {"version": self.kind} if self.kind == "strong" else {"version": "weak", "a_max": self.a_max}


STRONG = Postulate()


@dataclass(frozen=True)
class EventDecision:
    cut: Cut
    topological_loop: bool
    phase_observable: bool
    min_loop_area: float
    verdict: str
    version: Postulate


def evolve(psi: Ket, nodes: Iterable) -> Ket:
    for nd in nodes:
        psi = apply_gate(psi, nd.gate)
    return psi


def observable_sets(g: InteractionGraph, cut: Cut) -> list[tuple[str, ...]]:
    """Subsystem singles and pairs whose reduced states the oracle inspects.

    A pair made of one subsystem only the system side ever reaches and one only the
    record side ever reaches is left out: comparing them would itself need a
    meeting that the graph does not contain.
    """
    names = g.register.names
    s_cl = cone_subsystems(g, cut.node, cut.side_s)
    w_cl = cone_subsystems(g, cut.node, cut.side_w)
    s_only, w_only = s_cl - w_cl, w_cl - s_cl
    out = [(n,) for n in names]
    for a, b in combinations(names, 2):
        if (a in s_only and b in w_only) or (a in w_only and b in s_only):
            continue
        out.append((a, b))
    return out


def _observables(psi: Ket, sets: Sequence[tuple[str, ...]]) -> list[np.ndarray]:
    return [reduced(psi, s) for s in sets]


def phase_observability_oracle(
    g: InteractionGraph,
    cut: Cut,
    psi_at_cut: Ket,
    tol: float = ORACLE_TOL,
    deltas: Sequence[float] = ORACLE_DELTAS,
) -> bool:
    """True iff shifting the relative phase of the cut's Schmidt branches changes the horizon.

    The full unitary future of ``cut.node`` is run on the unperturbed ket and on
    each phase-shifted copy; single and pair reduced density matrices at the
    horizon are compared entry by entry.
    """
    branches = Branches(psi_at_cut, cut.side_s)
    start = g.node(cut.node)
    future = g.between(start.tick, g.horizon)
    sets = observable_sets(g, cut)
    ref = _observables(evolve(psi_at_cut, future), sets)
    for delta in deltas:
        moved = _observables(evolve(branches.with_phase(delta), future), sets)
        if any(np.abs(a - b).max() > tol for a, b in zip(ref, moved)):
            return True
    return False


_CACHE: dict = {}
_CACHE_MAX = 8192


def _cached(key, fn):
    try:
        return _CACHE[key]
    except KeyError:
        pass
    if len(_CACHE) >= _CACHE_MAX:
        _CACHE.clear()
    val = _CACHE[key] = fn()
    return val


def decide_event(g: InteractionGraph, cut: Cut, psi: Ket, version: Postulate = STRONG) -> EventDecision:
    """Apply the active event postulate to one cut of ``psi`` at ``cut.node``."""
    key = ("decide", g.fingerprint, cut, psi.register, np.ascontiguousarray(psi.amps).tobytes(), version)
    return _cached(key, lambda: _decide(g, cut, psi, version))


def _decide(g, cut, psi, version):
    if schmidt_rank(psi, cut.side_s) < 2:
        raise DegenerateCut(f"cut {cut.label(g.register)} at {cut.node!r} carries no entanglement")
    loop = topological_loop_exists(g, cut)
    area = loop_area(g, cut, strict=version.kind == "weak")
    observable = loop and phase_observability_oracle(g, cut, psi)
    if version.kind == "strong":
        event = not observable
    else:
        event = (not observable) or area > version.a_max
    return EventDecision(cut, loop, observable, area, EVENT if event else NO_EVENT, version)
