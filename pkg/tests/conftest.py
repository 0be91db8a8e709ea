import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from loopline.gates import make_gate
from loopline.graph import InteractionGraph, InteractionNode
from loopline.hilbert import Ket, Register


def node(node_id, tick, participants, gate, position=None, non_reversed=False, **params):
    participants = tuple(participants)
    return InteractionNode(node_id, tick, participants, make_gate(gate, participants, params),
                           position, non_reversed, params)


def fig1a_graph(phi=0.0):
    return InteractionGraph(Register(("A", "B", "C")), (node("E", 1, "ABC", "entangler", 0, phi=phi),), 10)


def fig1b_graph(phi=0.0):
    return InteractionGraph(
        Register(("A", "B", "C")),
        (node("E", 1, "ABC", "entangler", 0, phi=phi), node("D", 5, "ABC", "disentangler", 3)),
        10,
    )


def random_graph(seed: int, max_qubits: int = 4, max_nodes: int = 8):
    """Random validated graph on 3..max_qubits subsystems with mixed structured and Haar gates."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, max_qubits + 1))
    names = tuple("ABCD"[:n])
    count = int(rng.integers(1, max_nodes + 1))
    nodes = []
    for i in range(count):
        kind = rng.choice(["cnot", "entangler", "phase", "left", "haar1", "haar2", "haar3"])
        if kind == "cnot":
            parts = tuple(rng.choice(names, 2, replace=False))
            gate, params = "controlled-flip", {}
        elif kind == "entangler":
            parts = tuple(rng.choice(names, 3, replace=False))
            gate, params = "entangler", {"phi": float(rng.uniform(0, 2 * math.pi))}
        elif kind == "phase":
            parts = (str(rng.choice(names)),)
            gate, params = "phase", {"phi": float(rng.uniform(0, 2 * math.pi))}
        elif kind == "left":
            parts = (str(rng.choice(names)),)
            gate, params = "prepare-left", {}
        else:
            k = int(kind[-1])
            parts = tuple(rng.choice(names, k, replace=False))
            mat = unitary_group.rvs(2 ** k, random_state=int(rng.integers(2 ** 31)))
            gate, params = "unitary", {"matrix": mat}
        parts = tuple(str(p) for p in parts)
        nodes.append(node(f"n{i}", i + 1, parts, gate, int(rng.integers(0, 4)), **params))
    g = InteractionGraph(Register(names), tuple(nodes), count + 1)
    symbols = "".join(rng.choice(list("udlr"), n))
    return g, Ket.product(g.register, symbols)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def oracle_cases(g, ket):
    """Every (cut, ket just after its node) met while evolving ``ket`` unitarily through ``g``."""
    from loopline.events import candidate_cuts, evolve
    psi = ket
    for t in g.ticks():
        nodes = g.at_tick(t)
        psi = evolve(psi, nodes)
        for nd in nodes:
            for cut in candidate_cuts(psi, nd):
                yield cut, psi


# acceptance results as (number, title, passed, seconds), printed after the run
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, secs in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {num:>2}. {title}  ({secs:.2f} s)")
