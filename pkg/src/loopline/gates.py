"""Gate matrices and the registry of named gates used by scenario files."""
from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from .hilbert import SQRT1_2, Gate

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
# maps |down> -> |left>, |up> -> |right>
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT1_2
FLIP_IF_UP = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
FLIP_IF_DOWN = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=complex)


def phase_matrix(phi: float) -> np.ndarray:
    return np.diag([1, np.exp(1j * phi)]).astype(complex)


def rotation_matrix(theta: float, azimuth: float = 0.0) -> np.ndarray:
    """exp(-i theta/2 n.sigma) about the equatorial axis at ``azimuth`` from x."""
    n_sigma = np.cos(azimuth) * X + np.sin(azimuth) * Y
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * n_sigma


def circuit(k: int, steps: Sequence[tuple[np.ndarray, Sequence[int]]]) -> np.ndarray:
    """Unitary on ``k`` qubits from local ``(matrix, positions)`` steps applied in order."""
    d = 2 ** k
    m = np.eye(d, dtype=complex).reshape((2,) * k + (d,))
    for op, pos in steps:
        j = len(pos)
        u = np.asarray(op, dtype=complex).reshape((2,) * (2 * j))
        m = np.tensordot(u, m, axes=(list(range(j, 2 * j)), list(pos)))
        m = np.moveaxis(m, list(range(j)), list(pos))
    return m.reshape(d, d)


def entangler_matrix(phi: float = 0.0) -> np.ndarray:
    """A controls flips of B then C, then phase(phi) on A: |left,d,d> -> (|ddd> + e^{i phi}|uuu>)/sqrt(2)."""
    return circuit(3, [(FLIP_IF_UP, (0, 1)), (FLIP_IF_UP, (0, 2)), (phase_matrix(phi), (0,))])


def disentangler_matrix() -> np.ndarray:
    """A controls a flip of C, then C is flipped; B is untouched."""
    return circuit(3, [(FLIP_IF_UP, (0, 2)), (X, (2,))])


def avalanche_matrix(n: int) -> np.ndarray:
    """Copy dynamics |u>_C|u..u>_D -> same, |d>_C|u..u>_D -> |d>_C|d..d>_D on C + n D spins."""
    return circuit(n + 1, [(FLIP_IF_DOWN, (0, i)) for i in range(1, n + 1)])


def measure_x_matrix(n: int) -> np.ndarray:
    """Record C in the {|left>, |right>} basis onto n D spins (left -> d..d, right -> u..u)."""
    steps = [(H, (0,))] + [(FLIP_IF_UP, (0, i)) for i in range(1, n + 1)] + [(H, (0,))]
    return circuit(n + 1, steps)


def bell_compare_matrix() -> np.ndarray:
    """Rotate (A, B) out of the Bell basis and XOR the record R into A."""
    return circuit(3, [(FLIP_IF_UP, (0, 1)), (H, (0,)), (FLIP_IF_UP, (2, 0))])


def _matrix_param(raw) -> np.ndarray:
    """A complex square array, or the JSON form: nested lists of [re, im] pairs."""
    if isinstance(raw, np.ndarray) and np.iscomplexobj(raw):
        return raw
    a = np.asarray(raw, dtype=float)
    if a.ndim != 3 or a.shape[-1] != 2:
        raise ValueError("matrix must be a nested list of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


class GateSpec:
    """Registry entry: arity bounds, accepted parameters and a matrix builder."""

    def __init__(self, name: str, build: Callable[[int, Mapping], np.ndarray],
                 min_targets: int, max_targets: int | None = None, params: Mapping[str, object] = ()):
        self.name = name
        self.build = build
        self.min_targets = min_targets
        self.max_targets = min_targets if max_targets is None else max_targets
        self.params = dict(params)

    def arity_ok(self, k: int) -> bool:
        return k >= self.min_targets and (self.max_targets < 0 or k <= self.max_targets)


GATES: dict[str, GateSpec] = {
    spec.name: spec
    for spec in [
        GateSpec("identity", lambda k, p: np.eye(2 ** k, dtype=complex), 1, -1),
        GateSpec("pauli-x", lambda k, p: X, 1),
        GateSpec("pauli-z", lambda k, p: Z, 1),
        GateSpec("prepare-left", lambda k, p: H, 1),
        GateSpec("phase", lambda k, p: phase_matrix(p["phi"]), 1, params={"phi": 0.0}),
        GateSpec("rotation", lambda k, p: rotation_matrix(p["theta"], p["azimuth"]), 1,
                 params={"theta": 0.0, "azimuth": 0.0}),
        GateSpec("controlled-flip", lambda k, p: FLIP_IF_UP, 2),
        GateSpec("entangler", lambda k, p: entangler_matrix(p["phi"]), 3, params={"phi": 0.0}),
        GateSpec("disentangler", lambda k, p: disentangler_matrix(), 3),
        GateSpec("avalanche", lambda k, p: avalanche_matrix(k - 1), 2, -1),
        GateSpec("measure-x", lambda k, p: measure_x_matrix(k - 1), 2, -1),
        GateSpec("bell-compare", lambda k, p: bell_compare_matrix(), 3),
        GateSpec("unitary", lambda k, p: _matrix_param(p["matrix"]), 1, -1, params={"matrix": None}),
    ]
}


def make_gate(name: str, targets: Sequence[str], params: Mapping | None = None) -> Gate:
    """Build a registry gate; raises KeyError for unknown names, ValueError for bad arity/params."""
    spec = GATES[name]
    targets = tuple(targets)
    if not spec.arity_ok(len(targets)):
        raise ValueError(f"gate {name!r} cannot act on {len(targets)} subsystems")
    given = dict(params or {})
    unknown = set(given) - set(spec.params)
    if unknown:
        raise ValueError(f"gate {name!r} does not take parameters {sorted(unknown)}")
    full = {**spec.params, **given}
    if any(v is None for v in full.values()):
        raise ValueError(f"gate {name!r} is missing a required parameter")
    return Gate(targets, spec.build(len(targets), full), name=name)
