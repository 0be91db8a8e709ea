"""Exact small-dimension linear algebra over registers of two-level subsystems.

Conventions: ``|down>`` is bit 0, ``|up>`` is bit 1, and the leftmost
subsystem of a register is the most significant bit of a basis index.
``|left> = (|down> + |up>)/sqrt(2)`` and ``|right> = (|down> - |up>)/sqrt(2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateSubsystem,
    EmptyCutSide,
    EmptyKeepSet,
    InvalidState,
    NotUnitary,
    UnknownSubsystem,
)

ATOL = 1e-10
SQRT1_2 = 1 / np.sqrt(2)

DOWN = np.array([1, 0], dtype=complex)
UP = np.array([0, 1], dtype=complex)
LEFT = (DOWN + UP) * SQRT1_2
RIGHT = (DOWN - UP) * SQRT1_2

# columns are the basis vectors |right>, |left>
X_BASIS = np.column_stack([RIGHT, LEFT])

_SYMBOLS = {
    "d": DOWN, "0": DOWN, "↓": DOWN,
    "u": UP, "1": UP, "↑": UP,
    "l": LEFT, "←": LEFT,
    "r": RIGHT, "→": RIGHT,
}


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Register:
    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        for n in names:
            if not isinstance(n, str) or not n:
                raise ValueError(f"subsystem names must be nonempty strings, got {n!r}")
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise DuplicateSubsystem(f"duplicate subsystem names: {dup}")

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __contains__(self, name):
        return name in self.names

    def __add__(self, other: "Register") -> "Register":
        return Register(self.names + other.names)

    @property
    def dim(self) -> int:
        return 2 ** len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownSubsystem(f"{name!r} is not in register {list(self.names)}") from None

    def indices(self, names: Iterable[str]) -> list[int]:
        return [self.index(n) for n in names]

    def sub(self, names: Iterable[str]) -> "Register":
        """Sub-register holding ``names`` in canonical (register) order."""
        wanted = set(names)
        for n in wanted:
            self.index(n)
        return Register(tuple(n for n in self.names if n in wanted))


@dataclass(frozen=True, eq=False)
class Ket:
    register: Register
    amps: np.ndarray

    def __post_init__(self):
        amps = _readonly(np.asarray(self.amps).reshape(-1))
        object.__setattr__(self, "amps", amps)
        if amps.shape != (self.register.dim,):
            raise InvalidState(
                f"ket over {len(self.register)} subsystems needs {self.register.dim} amplitudes, got {amps.size}"
            )
        if not np.all(np.isfinite(amps)):
            raise InvalidState("ket amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > ATOL:
            raise InvalidState(f"ket norm is {norm!r}, expected 1")

    @classmethod
    def normalized(cls, register: Register | Sequence[str], amps) -> "Ket":
        register = register if isinstance(register, Register) else Register(tuple(register))
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise InvalidState("cannot normalize the zero vector")
        return cls(register, amps / norm)

    @classmethod
    def product(cls, register: Register | Sequence[str], symbols: str | Sequence[str]) -> "Ket":
        """Product ket from one symbol per subsystem: d/u/l/r, 0/1 or arrows."""
        register = register if isinstance(register, Register) else Register(tuple(register))
        symbols = list(symbols)
        if len(symbols) != len(register):
            raise InvalidState(f"need {len(register)} symbols, got {len(symbols)}")
        vec = np.array([1], dtype=complex)
        for s in symbols:
            if s not in _SYMBOLS:
                raise InvalidState(f"unknown ket symbol {s!r}")
            vec = np.kron(vec, _SYMBOLS[s])
        return cls(register, vec)

    @property
    def n(self) -> int:
        return len(self.register)

    def tensor_view(self) -> np.ndarray:
        return self.amps.reshape((2,) * self.n)

    def inner(self, other: "Ket") -> complex:
        """<self|other>; registers must hold the same names in the same order."""
        if self.register != other.register:
            raise InvalidState("inner product needs identical registers")
        return complex(np.vdot(self.amps, other.amps))

    def fidelity(self, other: "Ket") -> float:
        return abs(self.inner(other))

    def equals(self, other: "Ket", atol: float = 1e-9, up_to_phase: bool = False) -> bool:
        other = other.reorder(self.register)
        if up_to_phase:
            return abs(abs(self.inner(other)) - 1) <= atol
        return bool(np.allclose(self.amps, other.amps, atol=atol, rtol=0))

    def reorder(self, register: Register) -> "Ket":
        """Same ket with tensor factors permuted into ``register``'s order."""
        if register == self.register:
            return self
        if set(register.names) != set(self.register.names):
            raise InvalidState("reorder needs a permutation of the same subsystems")
        perm = [self.register.index(n) for n in register.names]
        return Ket(register, np.transpose(self.tensor_view(), perm).reshape(-1))

    def canonical_phase(self) -> "Ket":
        """Multiply by a global phase so the first non-negligible amplitude is real positive."""
        nz = np.flatnonzero(np.abs(self.amps) > 1e-12)
        a = self.amps[nz[0]]
        return Ket(self.register, self.amps * (abs(a) / a))


@dataclass(frozen=True, eq=False)
class Gate:
    targets: tuple[str, ...]
    matrix: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        targets = tuple(self.targets)
        object.__setattr__(self, "targets", targets)
        if not targets:
            raise ValueError("a gate needs at least one target")
        Register(targets)  # uniqueness
        m = _readonly(self.matrix)
        object.__setattr__(self, "matrix", m)
        d = 2 ** len(targets)
        if m.shape != (d, d):
            raise NotUnitary(f"gate on {len(targets)} subsystems needs a {d}x{d} matrix, got {m.shape}")
        if not np.allclose(m.conj().T @ m, np.eye(d), atol=ATOL, rtol=0):
            raise NotUnitary(f"gate {self.name or targets} is not unitary")

    def dagger(self) -> "Gate":
        return Gate(self.targets, self.matrix.conj().T, name=f"{self.name}^dag" if self.name else "")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    register: Register
    mat: np.ndarray

    def __post_init__(self):
        m = _readonly(self.mat)
        object.__setattr__(self, "mat", m)
        d = self.register.dim
        if m.shape != (d, d):
            raise InvalidState(f"density matrix must be {d}x{d}, got {m.shape}")
        if not np.allclose(m, m.conj().T, atol=ATOL, rtol=0):
            raise InvalidState("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1) > ATOL:
            raise InvalidState(f"density matrix trace is {tr!r}")
        if np.linalg.eigvalsh(m).min() < -ATOL:
            raise InvalidState("density matrix has a negative eigenvalue")

    @property
    def n(self) -> int:
        return len(self.register)

    def purity(self) -> float:
        return float(np.trace(self.mat @ self.mat).real)

    def rank(self, tol: float = 1e-10) -> int:
        return int(np.sum(np.linalg.eigvalsh(self.mat) > tol))


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Weighted pure kets whose mixture reproduces a density matrix."""

    terms: tuple[tuple[float, Ket], ...]

    def __post_init__(self):
        terms = tuple((float(w), k) for w, k in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise InvalidState("a decomposition needs at least one term")
        reg = terms[0][1].register
        for w, k in terms:
            if k.register != reg:
                raise InvalidState("decomposition terms must share one register")
            if not -ATOL <= w <= 1 + ATOL:
                raise InvalidState(f"weight {w} outside [0, 1]")
        total = sum(w for w, _ in terms)
        if abs(total - 1) > ATOL:
            raise InvalidState(f"weights sum to {total!r}")

    @property
    def register(self) -> Register:
        return self.terms[0][1].register

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms])

    def __len__(self):
        return len(self.terms)

    def density(self) -> np.ndarray:
        return sum(w * np.outer(k.amps, k.amps.conj()) for w, k in self.terms)

    def check_reconstructs(self, rho: DensityMatrix, atol: float = 1e-9) -> None:
        if rho.register != self.register:
            raise InvalidState("decomposition and density matrix registers differ")
        err = np.abs(self.density() - rho.mat).max()
        if err > atol:
            raise InvalidState(f"decomposition misses its density matrix by {err:.3g}")


# -- operations ---------------------------------------------------------------


def tensor(a: Ket, b: Ket) -> Ket:
    return Ket(a.register + b.register, np.kron(a.amps, b.amps))


def apply_gate(psi: Ket, g: Gate) -> Ket:
    idx = psi.register.indices(g.targets)
    k = len(idx)
    u = g.matrix.reshape((2,) * (2 * k))
    out = np.tensordot(u, psi.tensor_view(), axes=(list(range(k, 2 * k)), idx))
    out = np.moveaxis(out, list(range(k)), idx)
    return Ket(psi.register, out.reshape(-1))


def to_density(psi: Ket) -> DensityMatrix:
    return DensityMatrix(psi.register, np.outer(psi.amps, psi.amps.conj()))


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    keep = set(keep)
    if not keep:
        raise EmptyKeepSet("keep set must be nonempty")
    kept = rho.register.sub(keep)
    n = rho.n
    row = [chr(97 + i) for i in range(n)]
    col = [chr(97 + n + i) if rho.register.names[i] in keep else row[i] for i in range(n)]
    out_row = [row[i] for i in range(n) if rho.register.names[i] in keep]
    out_col = [col[i] for i in range(n) if rho.register.names[i] in keep]
    spec = "".join(row + col) + "->" + "".join(out_row + out_col)
    red = np.einsum(spec, rho.mat.reshape((2,) * (2 * n)))
    d = kept.dim
    return DensityMatrix(kept, red.reshape(d, d))


def reduced(psi: Ket, keep: Iterable[str]) -> np.ndarray:
    """Reduced density matrix of a pure ket as a bare array, in register order of ``keep``."""
    keep = set(keep)
    idx = [i for i, nme in enumerate(psi.register.names) if nme in keep]
    rest = [i for i in range(psi.n) if i not in idx]
    m = np.transpose(psi.tensor_view(), idx + rest).reshape(2 ** len(idx), -1)
    return m @ m.conj().T


def _check_cut(register: Register, side_a: Iterable[str], side_b: Iterable[str]) -> tuple[set, set]:
    a, b = set(side_a), set(side_b)
    if not a or not b:
        raise EmptyCutSide("both sides of a cut must be nonempty")
    for name in a | b:
        register.index(name)
    if a & b or (a | b) != set(register.names):
        raise ValueError("cut sides must partition the register")
    return a, b


def schmidt(psi: Ket, side: Iterable[str]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Schmidt decomposition across ``side`` | rest.

    Returns ``(coeffs, left, right)`` where ``left[:, j]`` lives on ``side`` (register
    order) and ``right[:, j]`` on the complement, so that
    ``psi = sum_j coeffs[j] * left[:, j] (x) right[:, j]``. Zero coefficients are dropped.
    """
    side = set(side)
    idx = [i for i, nme in enumerate(psi.register.names) if nme in side]
    rest = [i for i in range(psi.n) if i not in idx]
    m = np.transpose(psi.tensor_view(), idx + rest).reshape(2 ** len(idx), -1)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    keep = s > 1e-12
    return s[keep], u[:, keep], vh[keep].T


def entropy_bits(probs: np.ndarray) -> float:
    p = np.asarray(probs, dtype=float)
    p = p[p > 1e-15]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def entanglement_entropy(psi: Ket, cut: tuple[Iterable[str], Iterable[str]]) -> float:
    """Von Neumann entropy (bits) of either side of a bipartition of ``psi``."""
    side_a, _ = _check_cut(psi.register, *cut)
    s, _, _ = schmidt(psi, side_a)
    return entropy_bits(s ** 2)


def basis_change_expand(
    rho: DensityMatrix, local_basis: Mapping[str, np.ndarray] | Sequence[np.ndarray]
) -> DensityMatrix:
    """Re-express ``rho`` in a local product basis.

    ``local_basis`` gives one 2x2 unitary per subsystem whose columns are the new
    basis vectors; entry ``(i, j)`` of the result is ``<b_i| rho |b_j>``.
    """
    if isinstance(local_basis, Mapping):
        mats = [local_basis[nme] for nme in rho.register.names]
    else:
        mats = list(local_basis)
    if len(mats) != rho.n:
        raise ValueError(f"need one local basis per subsystem ({rho.n}), got {len(mats)}")
    full = np.array([[1]], dtype=complex)
    for m in mats:
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2) or not np.allclose(m.conj().T @ m, np.eye(2), atol=ATOL, rtol=0):
            raise NotUnitary("local basis change must be a 2x2 unitary")
        full = np.kron(full, m)
    return DensityMatrix(rho.register, full.conj().T @ rho.mat @ full)


# -- named kets -----------------------------------------------------------------


def singlet(a: str = "A", b: str = "B") -> Ket:
    """(|up down> - |down up>)/sqrt(2), written with the first particle leftmost."""
    return Ket(Register((a, b)), np.array([0, -1, 1, 0], dtype=complex) * SQRT1_2)


def ghz3(phi: float = 0.0, names: Sequence[str] = ("A", "B", "C")) -> Ket:
    """(|ddd> + e^{i phi}|uuu>)/sqrt(2)."""
    amps = np.zeros(8, dtype=complex)
    amps[0], amps[7] = SQRT1_2, np.exp(1j * phi) * SQRT1_2
    return Ket(Register(tuple(names)), amps)


def phi_pair(phi: float = 0.0, sign: int = +1, names: Sequence[str] = ("A", "B")) -> Ket:
    """(|dd> +/- e^{i phi}|uu>)/sqrt(2)."""
    amps = np.zeros(4, dtype=complex)
    amps[0], amps[3] = SQRT1_2, sign * np.exp(1j * phi) * SQRT1_2
    return Ket(Register(tuple(names)), amps)


def basis_label(psi: Ket, atol: float = 1e-9) -> str | None:
    """Arrow label such as ``↓↑`` when ``psi`` is a computational basis ket up to phase."""
    i = int(np.argmax(np.abs(psi.amps)))
    if abs(abs(psi.amps[i]) - 1) > atol:
        return None
    return "".join("↑" if c == "1" else "↓" for c in format(i, f"0{psi.n}b"))
