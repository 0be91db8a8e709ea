"""Preferred-basis search: the decomposition of a density matrix with the most separable terms.

Every decomposition of a rank-k density matrix into k pure terms is a unitary
mixing of its scaled eigenvectors.  The search scores candidate mixings by the
weighted maximum bipartite entanglement entropy of their terms, sweeps a coarse
grid, then refines the best grid points locally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from ..errors import NotComposite
from ..hilbert import DensityMatrix, Decomposition, Ket
from .branches import DEGENERACY_TOL, canonical_span_basis

GRID_STEP = math.pi / 24
RANK_TOL = 1e-10
TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PreferredBasis:
    decomposition: Decomposition
    separability_score: float
    search_log: dict = field(default_factory=dict)


def bipartitions(n: int) -> list[tuple[int, ...]]:
    """One side of every bipartition of n qubits (the side holding qubit 0)."""
    rest = range(1, n)
    return [(0,) + extra for size in range(0, n - 1) for extra in combinations(rest, size)]


def _term_scores(terms: np.ndarray, n: int) -> np.ndarray:
    """Max bipartite entropy (bits) of each normalized term; ``terms`` has shape (..., 2**n)."""
    lead = terms.shape[:-1]
    flat = terms.reshape(-1, *(2,) * n)
    best = np.zeros(flat.shape[0])
    for side in bipartitions(n):
        other = tuple(i for i in range(n) if i not in side)
        perm = (0,) + tuple(i + 1 for i in side + other)
        m = np.transpose(flat, perm).reshape(flat.shape[0], 2 ** len(side), -1)
        s2 = np.linalg.svd(m, compute_uv=False) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = -np.sum(np.where(s2 > 1e-15, s2 * np.log2(np.where(s2 > 1e-15, s2, 1)), 0), axis=-1)
        best = np.maximum(best, ent)
    return np.clip(best, 0, None).reshape(lead)


def separability_score(decomposition: Decomposition) -> float:
    """Probability-weighted max bipartite entanglement entropy of the terms, in bits."""
    n = len(decomposition.register)
    if n < 2:
        raise NotComposite("separability needs at least two subsystems")
    amps = np.array([k.amps for _, k in decomposition.terms])
    return float(np.dot(decomposition.weights, _term_scores(amps, n)))


def _eigen(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(rho.mat)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    keep = w > RANK_TOL
    w, v = w[keep], v[:, keep]
    cols, start = [], 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and abs(w[stop] - w[start]) < DEGENERACY_TOL:
            stop += 1
        grp = v[:, start:stop]
        cols.append(canonical_span_basis(grp) if stop - start > 1 else grp)
        start = stop
    return w, np.column_stack(cols)


def _givens_pairs(k: int) -> list[tuple[int, int]]:
    return list(combinations(range(k), 2))


def mixing_unitary(params: Sequence[float], k: int) -> np.ndarray:
    """Product of Givens rotations, one (angle, phase) pair per index pair."""
    u = np.eye(k, dtype=complex)
    for (p, q), (theta, alpha) in zip(_givens_pairs(k), np.reshape(params, (-1, 2))):
        g = np.eye(k, dtype=complex)
        c, s = math.cos(theta), math.sin(theta)
        g[p, p], g[p, q] = c, np.exp(1j * alpha) * s
        g[q, p], g[q, q] = -np.exp(-1j * alpha) * s, c
        u = g @ u
    return u


def _terms(mixings: np.ndarray, scaled: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weights (N, k) and normalized terms (N, k, d) from mixings (N, k, k) and scaled eigvecs (d, k)."""
    raw = np.einsum("nij,dj->nid", mixings, scaled)
    weights = np.sum(np.abs(raw) ** 2, axis=-1)
    return weights, raw / np.sqrt(weights)[..., None]


def _ket_key(amps: np.ndarray) -> tuple:
    nz = np.flatnonzero(np.abs(amps) > 1e-12)
    a = amps * (abs(amps[nz[0]]) / amps[nz[0]])
    return tuple(-round(abs(x), 9) for x in a) + tuple(round(float(np.angle(x)) if abs(x) > 1e-9 else 0.0, 9) for x in a)


def _build(rho: DensityMatrix, weights: np.ndarray, terms: np.ndarray) -> Decomposition:
    kets = [Ket(rho.register, t).canonical_phase() for t in terms]
    pairs = sorted(zip(weights.tolist(), kets), key=lambda wk: _ket_key(wk[1].amps))
    total = sum(w for w, _ in pairs)
    return Decomposition(tuple((w / total, k) for w, k in pairs))


def _candidate_key(weights: np.ndarray, terms: np.ndarray) -> tuple:
    return min(_ket_key(t) for t in terms)


def preferred_basis(rho: DensityMatrix, grid_step: float = GRID_STEP, refine: bool = True) -> PreferredBasis:
    """Most separable decomposition of ``rho`` over rank-many-term unitary mixings."""
    if rho.n < 2:
        raise NotComposite("the preferred basis needs a register of at least two subsystems")
    w, v = _eigen(rho)
    k = len(w)
    scaled = v * np.sqrt(w)
    n = rho.n
    log = {"rank": k, "grid_step": grid_step, "grid_points": 0, "refined": False}

    if k == 1:
        mixings = np.eye(1, dtype=complex)[None]
        params_list = [np.zeros(0)]
    else:
        thetas = np.arange(0, math.pi / 2 + 1e-12, grid_step)
        alphas = np.arange(0, 2 * math.pi - 1e-12, grid_step)
        n_pairs = len(_givens_pairs(k))
        params_list = [np.zeros(2 * n_pairs)]
        for pi in range(n_pairs):
            for th in thetas[1:]:
                for al in alphas:
                    p = np.zeros(2 * n_pairs)
                    p[2 * pi], p[2 * pi + 1] = th, al
                    params_list.append(p)
        mixings = np.array([mixing_unitary(p, k) for p in params_list])
    log["grid_points"] = len(params_list)

    weights, terms = _terms(mixings, scaled)
    scores = np.sum(weights * _term_scores(terms, n), axis=-1)
    log["best_grid_score"] = float(scores.min())

    candidates = [(float(scores[i]), weights[i], terms[i]) for i in range(len(params_list))]

    if refine and k > 1 and scores.min() > TIE_TOL:
        def objective(p):
            wt, tm = _terms(mixing_unitary(p, k)[None], scaled)
            return float(np.sum(wt * _term_scores(tm, n)))

        starts = np.argsort(scores, kind="stable")[:3]
        for i in starts:
            res = minimize(objective, params_list[i], method="Nelder-Mead",
                           options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
            wt, tm = _terms(mixing_unitary(res.x, k)[None], scaled)
            candidates.append((float(res.fun), wt[0], tm[0]))
        log["refined"] = True

    best_score = min(c[0] for c in candidates)
    tied = [c for c in candidates if c[0] <= best_score + TIE_TOL]
    chosen = min(tied, key=lambda c: _candidate_key(c[1], c[2]))
    decomposition = _build(rho, chosen[1], chosen[2])
    decomposition.check_reconstructs(rho)
    log["score"] = chosen[0]
    return PreferredBasis(decomposition, max(0.0, chosen[0]), log)
