"""Spacetime interaction graph: worldlines on discrete ticks joined by interaction nodes.

A node's future cone follows the worldlines of a set of subsystems forward in
tick order, absorbing every subsystem met on the way.  Two sides of an
entanglement cut close a loop when their cones share a node.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import MissingPositions
from .hilbert import Gate, Register

INFINITE = math.inf


@dataclass(frozen=True, eq=False)
class InteractionNode:
    id: str
    tick: int
    participants: tuple[str, ...]
    gate: Gate
    position: int | None = None
    non_reversed: bool = False
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "participants", tuple(self.participants))
        object.__setattr__(self, "params", dict(self.params))

    @property
    def gate_name(self) -> str:
        return self.gate.name

    def __repr__(self):
        return f"InteractionNode({self.id!r}, tick={self.tick}, participants={list(self.participants)})"


@dataclass(frozen=True)
class Cut:
    node: str
    side_s: frozenset
    side_w: frozenset

    def __post_init__(self):
        object.__setattr__(self, "side_s", frozenset(self.side_s))
        object.__setattr__(self, "side_w", frozenset(self.side_w))
        if not self.side_s or not self.side_w:
            raise ValueError("both sides of a cut must be nonempty")
        if self.side_s & self.side_w:
            raise ValueError("cut sides must be disjoint")

    def swapped(self) -> "Cut":
        return Cut(self.node, self.side_w, self.side_s)

    def label(self, register: Register | None = None) -> str:
        order = (lambda s: [n for n in register.names if n in s]) if register else sorted
        return ",".join(order(self.side_s)) + "|" + ",".join(order(self.side_w))


@dataclass(frozen=True, eq=False)
class InteractionGraph:
    register: Register
    nodes: tuple[InteractionNode, ...]
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))

    @cached_property
    def ordered(self) -> tuple[InteractionNode, ...]:
        """Nodes by tick, then by register position of their first participant, then id."""
        def key(nd):
            first = min((self.register.names.index(p) for p in nd.participants if p in self.register), default=-1)
            return (nd.tick, first, nd.id)
        return tuple(sorted(self.nodes, key=key))

    @cached_property
    def _by_id(self) -> dict[str, InteractionNode]:
        return {nd.id: nd for nd in self.nodes}

    def node(self, node_id: str) -> InteractionNode:
        return self._by_id[node_id]

    def ticks(self) -> list[int]:
        return sorted({nd.tick for nd in self.nodes})

    def at_tick(self, tick: int) -> list[InteractionNode]:
        return [nd for nd in self.ordered if nd.tick == tick]

    def between(self, after: int, upto: int) -> list[InteractionNode]:
        """Nodes with ``after < tick <= upto`` in processing order."""
        return [nd for nd in self.ordered if after < nd.tick <= upto]

    def worldline(self, name: str) -> list[InteractionNode]:
        return [nd for nd in self.ordered if name in nd.participants]

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(repr((self.register.names, self.horizon)).encode())
        for nd in self.ordered:
            h.update(repr((nd.id, nd.tick, nd.participants, nd.gate.targets, nd.position, nd.non_reversed)).encode())
            h.update(np.ascontiguousarray(nd.gate.matrix).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    node: str | None
    subject: tuple = ()

    def __str__(self):
        inner = ", ".join(str(s) for s in self.subject)
        where = f" at node {self.node!r}" if self.node is not None else ""
        return f"{self.rule}({inner}){where}"


def validate(g: InteractionGraph) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    if g.horizon < 0:
        out.append(Diagnostic("NegativeHorizon", None, (g.horizon,)))
    seen_ids: set[str] = set()
    occupied: dict[tuple[str, int], str] = {}
    for nd in g.ordered:
        if nd.id in seen_ids:
            out.append(Diagnostic("DuplicateNodeId", nd.id, (nd.id,)))
        seen_ids.add(nd.id)
        if not nd.participants:
            out.append(Diagnostic("EmptyParticipants", nd.id))
        for p in nd.participants:
            if p not in g.register:
                out.append(Diagnostic("UnknownSubsystem", nd.id, (p,)))
        if len(set(nd.participants)) != len(nd.participants) or set(nd.gate.targets) != set(nd.participants):
            out.append(Diagnostic("ParticipantMismatch", nd.id, tuple(nd.gate.targets)))
        if nd.tick < 0:
            out.append(Diagnostic("NegativeTick", nd.id, (nd.tick,)))
        if nd.tick > g.horizon:
            out.append(Diagnostic("BeyondHorizon", nd.id, (nd.tick, g.horizon)))
        for p in set(nd.participants):
            key = (p, nd.tick)
            if key in occupied:
                out.append(Diagnostic("WorldlineBranch", nd.id, key))
            else:
                occupied[key] = nd.id
    for nd in g.nodes:
        if nd.non_reversed and not _non_reversed_legal(g, nd):
            out.append(Diagnostic("IllegalNonReversed", nd.id))
    return out


def _non_reversed_legal(g: InteractionGraph, nd: InteractionNode) -> bool:
    if nd.gate_name == "avalanche":
        return True
    return all(not [m for m in g.nodes if p in m.participants and m.tick > nd.tick] for p in nd.participants)


def _as_node(g: InteractionGraph, node) -> InteractionNode:
    return g.node(node) if isinstance(node, str) else node


def future_cone(g: InteractionGraph, start, side: Iterable[str]) -> frozenset:
    """Nodes reachable forward from ``start`` along the worldlines of ``side``.

    Every subsystem met at a reached node joins the traversal.  A ``non_reversed``
    node is reached but its participants are not followed past it.
    """
    return frozenset(_cone(g, _as_node(g, start), side)[0])


def cone_subsystems(g: InteractionGraph, start, side: Iterable[str]) -> frozenset:
    """``side`` together with every subsystem taking part in its future cone."""
    return frozenset(_cone(g, _as_node(g, start), side)[1])


def _cone(g: InteractionGraph, start: InteractionNode, side: Iterable[str]):
    active = set(side)
    touched = set(active)
    reached = []
    for nd in g.ordered:
        if nd.tick <= start.tick or nd.tick > g.horizon:
            continue
        parts = set(nd.participants)
        if parts & active:
            reached.append(nd)
            touched |= parts
            if nd.non_reversed:
                active -= parts
            else:
                active |= parts
    return reached, touched


def meeting_nodes(g: InteractionGraph, cut: Cut) -> frozenset:
    start = g.node(cut.node)
    return future_cone(g, start, cut.side_s) & future_cone(g, start, cut.side_w)


def topological_loop_exists(g: InteractionGraph, cut: Cut) -> bool:
    return bool(meeting_nodes(g, cut))


def _ancestors(g: InteractionGraph, target: InteractionNode, after: int) -> set:
    active = set(target.participants)
    found = set()
    for nd in reversed(g.ordered):
        if nd.tick >= target.tick or nd.tick <= after:
            continue
        if set(nd.participants) & active:
            found.add(nd)
            active |= set(nd.participants)
    return found


def loop_area(g: InteractionGraph, cut: Cut, strict: bool = True) -> float:
    """Smallest (elapsed ticks) x (lattice extent) over nodes where the two sides meet.

    Extent is the spread of node positions on the paths from the cut node to the
    meeting node, clamped to at least 1.  Returns ``INFINITE`` without a loop.
    With ``strict`` a missing position on a candidate loop raises MissingPositions;
    otherwise nodes without positions are ignored when measuring extent.
    """
    start = g.node(cut.node)
    cone_s = future_cone(g, start, cut.side_s)
    cone_w = future_cone(g, start, cut.side_w)
    meets = cone_s & cone_w
    if not meets:
        return INFINITE
    best = INFINITE
    for u in sorted(meets, key=lambda nd: (nd.tick, nd.id)):
        path = ((cone_s | cone_w) & _ancestors(g, u, start.tick)) | {start, u}
        missing = sorted(nd.id for nd in path if nd.position is None)
        if missing and strict:
            raise MissingPositions(f"nodes without positions on the loop closing at {u.id!r}: {missing}")
        pos = [nd.position for nd in path if nd.position is not None]
        extent = max(1, max(pos) - min(pos)) if pos else 1
        best = min(best, (u.tick - start.tick) * extent)
    return int(best)
