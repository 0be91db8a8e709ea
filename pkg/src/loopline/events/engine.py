"""Event engine: unitary evolution along the graph interrupted by sampled quantum events."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ..errors import DegenerateCut, InconsistentRecord, InvalidGraph, InvalidState, InvariantBreach
from ..graph import InteractionGraph, validate
from ..hilbert import Decomposition, Ket, Register, apply_gate, partial_trace, to_density
from .basis import PreferredBasis, preferred_basis
from .branches import candidate_cuts
from .decision import EVENT, STRONG, EventDecision, Postulate, _cached, decide_event, evolve

RNG_ALGORITHM = "numpy.random.PCG64/inverse-cdf-v1"


def make_rng(seed: int) -> np.random.Generator:
    """The one generator used for sampling: PCG64 seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def rng_snapshot(rng: np.random.Generator) -> dict:
    st = rng.bit_generator.state
    return {"algorithm": RNG_ALGORITHM, "state": int(st["state"]["state"]), "inc": int(st["state"]["inc"])}


@dataclass(frozen=True, eq=False)
class EventRecord:
    tick: int
    decision: EventDecision
    basis: PreferredBasis
    sampled_index: int
    probability: float
    post_ket: Ket
    rng_state_before: dict

    @property
    def node(self) -> str:
        return self.decision.cut.node

    @property
    def term(self) -> Ket:
        return self.basis.decomposition.terms[self.sampled_index][1]


@dataclass(frozen=True, eq=False)
class StateSet:
    time: int
    pairs: tuple[tuple[Ket, float], ...]

    def __post_init__(self):
        total = sum(p for _, p in self.pairs)
        if abs(total - 1) > 1e-9:
            raise InvalidState(f"state set probabilities sum to {total!r}")
        kets = [k for k, _ in self.pairs]
        for i in range(len(kets)):
            for j in range(i + 1, len(kets)):
                if abs(kets[i].inner(kets[j])) > 1e-9:
                    raise InvalidState("state set kets are not mutually orthogonal")


def born_sample(basis: PreferredBasis | Decomposition, rng: np.random.Generator) -> tuple[int, float]:
    """Draw a term index with probability equal to its weight (inverse CDF on one uniform draw)."""
    dec = basis.decomposition if isinstance(basis, PreferredBasis) else basis
    w = dec.weights
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(w), u, side="right"))
    idx = min(idx, len(w) - 1)
    while w[idx] <= 0 and idx > 0:
        idx -= 1
    return idx, float(w[idx])


def conditioned_kets(psi: Ket, decomposition: Decomposition) -> list[Ket]:
    """Full-register kets for each term: the term on its subsystems, the matching record elsewhere.

    Writing psi = sum_i sqrt(p_i) |term_i> (x) |g_i>, the g_i are orthonormal for any
    decomposition of the reduced state into rank-many terms; they are recovered
    with a pseudo-inverse of the term matrix.
    """
    sub = decomposition.register
    for nme in sub:
        if nme not in psi.register:
            raise InconsistentRecord(f"decomposition subsystem {nme!r} is not in the ket's register")
    idx = psi.register.indices(sub.names)
    rest = [i for i in range(psi.n) if i not in idx]
    m = np.transpose(psi.tensor_view(), idx + rest).reshape(2 ** len(idx), -1)
    terms = np.column_stack([np.sqrt(w) * k.amps for w, k in decomposition.terms])
    g = np.linalg.pinv(terms) @ m
    if np.abs(terms @ g - m).max() > 1e-8:
        raise InconsistentRecord("decomposition does not reconstruct the ket's reduced state")
    rest_reg = Register(tuple(psi.register.names[i] for i in rest))
    out = []
    for i, (_, term) in enumerate(decomposition.terms):
        gi = g[i]
        nrm = np.linalg.norm(gi)
        if abs(nrm - 1) > 1e-8:
            raise InvariantBreach(f"record branch {i} has norm {nrm!r}")
        joined = Ket(sub + rest_reg, np.kron(term.amps, gi / nrm)) if rest else term
        out.append(joined.reorder(psi.register))
    return out


def _event_menu(psi: Ket, side_s) -> tuple[PreferredBasis, list[Ket]]:
    key = ("menu", psi.register, np.ascontiguousarray(psi.amps).tobytes(), frozenset(side_s))

    def build():
        rho = partial_trace(to_density(psi), side_s)
        basis = _cached(("basis", rho.register, np.ascontiguousarray(rho.mat).tobytes()),
                        lambda: preferred_basis(rho))
        return basis, conditioned_kets(psi, basis.decomposition)

    return _cached(key, build)


def collapse(psi: Ket, record: EventRecord) -> Ket:
    """Replace ``psi`` by the sampled term of ``record`` and the record-side ket it implies."""
    if record.post_ket.register != psi.register:
        raise InconsistentRecord("record and ket registers differ")
    kets = conditioned_kets(psi, record.basis.decomposition)
    if not 0 <= record.sampled_index < len(kets):
        raise InconsistentRecord(f"sampled index {record.sampled_index} out of range")
    return kets[record.sampled_index]


# -- stepping -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Cursor:
    psi: Ket
    pos: int
    applied: bool
    decided: frozenset


@dataclass(frozen=True, eq=False)
class _Pending:
    cursor: _Cursor
    tick: int
    decision: EventDecision
    basis: PreferredBasis
    outcomes: list


def _ticks(g: InteractionGraph) -> list[int]:
    return [t for t in g.ticks() if 0 <= t <= g.horizon]


def _advance(g: InteractionGraph, version: Postulate, cur: _Cursor, trace: list | None) -> _Pending | _Cursor:
    """Run until the next EVENT verdict (returned as _Pending) or the horizon (final cursor)."""
    ticks = _ticks(g)
    psi, pos, applied, decided = cur.psi, cur.pos, cur.applied, cur.decided
    while pos < len(ticks):
        nodes = g.at_tick(ticks[pos])
        if not applied:
            psi = evolve(psi, nodes)
            applied, decided = True, frozenset()
        for nd in nodes:
            for cut in candidate_cuts(psi, nd):
                if cut in decided:
                    continue
                decided = decided | {cut}
                try:
                    dec = decide_event(g, cut, psi, version)
                except DegenerateCut:
                    continue
                if trace is not None:
                    trace.append((ticks[pos], dec))
                if dec.verdict == EVENT:
                    basis, outcomes = _event_menu(psi, cut.side_s)
                    return _Pending(_Cursor(psi, pos, True, decided), ticks[pos], dec, basis, outcomes)
        pos, applied = pos + 1, False
    return _Cursor(psi, pos, False, frozenset())


def _start(g: InteractionGraph, psi0: Ket) -> _Cursor:
    diags = validate(g)
    if diags:
        raise InvalidGraph(diags)
    if psi0.register != g.register:
        raise InvalidState(f"initial ket register {psi0.register.names} != graph register {g.register.names}")
    return _Cursor(psi0, 0, False, frozenset())


def run(
    g: InteractionGraph,
    psi0: Ket,
    version: Postulate = STRONG,
    seed: int = 0,
    trace: list | None = None,
) -> tuple[Ket, list[EventRecord]]:
    """Evolve ``psi0`` through ``g``, realizing every quantum event the postulate calls for.

    ``trace``, when given, collects ``(tick, EventDecision)`` for every cut examined.
    """
    rng = make_rng(seed)
    step: _Pending | _Cursor = _start(g, psi0)
    records: list[EventRecord] = []
    while True:
        step = _advance(g, version, step, trace)
        if isinstance(step, _Cursor):
            return step.psi, records
        snap = rng_snapshot(rng)
        idx, prob = born_sample(step.basis, rng)
        post = step.outcomes[idx]
        rec = EventRecord(step.tick, step.decision, step.basis, idx, prob, post, snap)
        if abs(rec.probability - step.basis.decomposition.weights[idx]) > 1e-12:
            raise InvariantBreach("record probability differs from the sampled weight")
        records.append(rec)
        c = step.cursor
        step = _Cursor(post, c.pos, c.applied, c.decided)


def enumerate_outcomes(
    g: InteractionGraph, psi0: Ket, version: Postulate = STRONG
) -> Iterator[tuple[float, tuple[EventRecord, ...], Ket]]:
    """Every event history with its exact probability: ``(prob, records, final ket)``.

    Records carry no RNG snapshot since nothing is sampled.
    """
    def walk(cur, prob, recs):
        step = _advance(g, version, cur, None)
        if isinstance(step, _Cursor):
            yield prob, recs, step.psi
            return
        c = step.cursor
        for i, (w, _) in enumerate(step.basis.decomposition.terms):
            if w > 0:
                post = step.outcomes[i]
                rec = EventRecord(step.tick, step.decision, step.basis, i, float(w), post, {})
                yield from walk(_Cursor(post, c.pos, c.applied, c.decided), prob * w, recs + (rec,))

    yield from walk(_start(g, psi0), 1.0, ())


# -- atemporal state set ---------------------------------------------------------


def extend_basis(basis: PreferredBasis | Decomposition, psi: Ket) -> Decomposition:
    """Lift a preferred basis on the event subsystems to full-register kets given ``psi``."""
    dec = basis.decomposition if isinstance(basis, PreferredBasis) else basis
    if dec.register == psi.register:
        return dec
    kets = conditioned_kets(psi, dec)
    return Decomposition(tuple((w, k) for (w, _), k in zip(dec.terms, kets)))


def state_set(
    g: InteractionGraph,
    psi_i: Ket,
    t: int,
    t_i: int,
    t_f: int,
    basis_f: PreferredBasis | Decomposition,
) -> StateSet:
    """Final preferred-basis kets carried back to tick ``t``, each with its Born probability from ``t_i``."""
    if not t_i <= t <= t_f:
        raise ValueError(f"need t_i <= t <= t_f, got {t_i}, {t}, {t_f}")
    dec = basis_f.decomposition if isinstance(basis_f, PreferredBasis) else basis_f
    if dec.register != g.register:
        raise InvalidState("basis_f must be extended to the full register (see extend_basis)")
    forward = evolve(psi_i, g.between(t_i, t_f))
    back = list(reversed(g.between(t, t_f)))
    pairs = []
    for _, phi_f in dec.terms:
        prob = abs(phi_f.inner(forward)) ** 2
        phi_t = phi_f
        for nd in back:
            phi_t = apply_gate(phi_t, nd.gate.dagger())
        pairs.append((phi_t, prob))
    return StateSet(t, tuple(pairs))

