"""Tensor-factor structure of a ket and canonical Schmidt branches across a cut."""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from ..errors import DegenerateCut
from ..graph import Cut, InteractionNode
from ..hilbert import Ket, Register

PURE_TOL = 1e-9
DEGENERACY_TOL = 1e-9


def canonical_span_basis(vectors: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Orthonormal basis of span(columns) built by Gram-Schmidt on projected unit vectors.

    Makes degenerate eigenspaces deterministic and aligned with the
    computational basis whenever the span allows it.
    """
    m = vectors.shape[1]
    proj = vectors @ vectors.conj().T
    out: list[np.ndarray] = []
    for k in range(vectors.shape[0]):
        v = proj[:, k].copy()
        for b in out:
            v -= np.vdot(b, v) * b
        nrm = np.linalg.norm(v)
        if nrm > tol:
            v = v / nrm
            nz = np.flatnonzero(np.abs(v) > 1e-12)
            v = v * (abs(v[nz[0]]) / v[nz[0]])
            out.append(v)
            if len(out) == m:
                break
    return np.column_stack(out)


def _matrix(psi: Ket, side) -> tuple[np.ndarray, list[int], list[int]]:
    idx = [i for i, nme in enumerate(psi.register.names) if nme in side]
    rest = [i for i in range(psi.n) if i not in idx]
    m = np.transpose(psi.tensor_view(), idx + rest).reshape(2 ** len(idx), -1)
    return m, idx, rest


def _from_matrix(m: np.ndarray, idx: list[int], rest: list[int], register: Register) -> np.ndarray:
    n = len(idx) + len(rest)
    t = m.reshape((2,) * n)
    return np.transpose(t, np.argsort(idx + rest)).reshape(-1)


def is_pure_part(psi: Ket, names) -> bool:
    m, _, _ = _matrix(psi, set(names))
    s = np.linalg.svd(m, compute_uv=False)
    return bool(s[0] ** 2 > 1 - PURE_TOL)


@lru_cache(maxsize=4096)
def _factors_cached(register: Register, amps_bytes: bytes) -> tuple[frozenset, ...]:
    psi = Ket(register, np.frombuffer(amps_bytes, dtype=complex))
    remaining = list(register.names)
    factors = []
    while remaining:
        seed, others = remaining[0], remaining[1:]
        found = None
        for size in range(0, len(others) + 1):
            for extra in combinations(others, size):
                group = (seed,) + extra
                if len(group) == len(remaining) or is_pure_part(psi, group):
                    found = group
                    break
            if found:
                break
        factors.append(frozenset(found))
        remaining = [r for r in remaining if r not in found]
    return tuple(factors)


def tensor_factors(psi: Ket) -> tuple[frozenset, ...]:
    """Finest partition of the register into factors with ``psi`` their tensor product."""
    return _factors_cached(psi.register, np.ascontiguousarray(psi.amps).tobytes())


def participants_closure(psi: Ket, node: InteractionNode) -> frozenset:
    """Union of the tensor factors of ``psi`` touched by the node's participants."""
    parts = set(node.participants)
    return frozenset().union(*[f for f in tensor_factors(psi) if f & parts])


def candidate_cuts(psi: Ket, node: InteractionNode) -> list[Cut]:
    """Cuts worth asking the event question about, in processing order.

    Each entangled factor touched by the node is split into a system side of at
    least two subsystems and a record side of at least one.  Larger system
    sides come first, then register order.
    """
    order = {nme: i for i, nme in enumerate(psi.register.names)}
    parts = set(node.participants)
    cuts = []
    for factor in tensor_factors(psi):
        if len(factor) < 3 or not factor & parts:
            continue
        members = sorted(factor, key=order.get)
        for size in range(len(members) - 1, 1, -1):
            for s in combinations(members, size):
                cuts.append(Cut(node.id, frozenset(s), factor - set(s)))
    cuts.sort(key=lambda c: (-len(c.side_s), sorted(order[x] for x in c.side_s), sorted(order[x] for x in c.side_w)))
    return cuts


class Branches:
    """Canonical Schmidt branches of ``psi`` across system side | everything else."""

    def __init__(self, psi: Ket, side_s):
        self.psi = psi
        self.side_s = frozenset(side_s)
        m, self.idx, self.rest = _matrix(psi, self.side_s)
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        keep = s > 1e-12
        s, right = s[keep], vh[keep].T
        if len(s) < 2:
            raise DegenerateCut(f"no entanglement across {sorted(self.side_s)} | rest")
        # canonicalize degenerate groups on the record side
        cols = []
        start = 0
        while start < len(s):
            stop = start + 1
            while stop < len(s) and abs(s[stop] - s[start]) < DEGENERACY_TOL:
                stop += 1
            grp = right[:, start:stop]
            cols.append(canonical_span_basis(grp) if stop - start > 1 else grp)
            start = stop
        self.coeffs = s
        self.right = np.column_stack(cols)
        self.left = (m @ self.right.conj()) / s

    @property
    def rank(self) -> int:
        return len(self.coeffs)

    def with_phase(self, delta: float) -> Ket:
        """``psi`` with branch j multiplied by ``exp(i * j * delta)``."""
        ph = np.exp(1j * delta * np.arange(self.rank))
        m = (self.left * (self.coeffs * ph)) @ self.right.T
        return Ket(self.psi.register, _from_matrix(m, self.idx, self.rest, self.psi.register))


def schmidt_rank(psi: Ket, side_s) -> int:
    m, _, _ = _matrix(psi, set(side_s))
    return int(np.sum(np.linalg.svd(m, compute_uv=False) > 1e-12))
