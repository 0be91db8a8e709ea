"""Scenario execution and JSON-ready reports shared by the CLI and the fixtures."""
from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

import numpy as np
from scipy.stats import chisquare

from .errors import InvariantBreach
from .events import RNG_ALGORITHM, EventRecord, Postulate, enumerate_outcomes, make_rng, rng_snapshot, run
from .hilbert import Ket, basis_label
from .scenarios import ScenarioDoc
from .transact import Transaction, candidate_probabilities, cascade, resolve, trace_lines

ROUND = 12
NO_EVENTS = "(no events)"


def _r(x: float) -> float:
    return round(float(x), ROUND) + 0.0


def ket_label(psi: Ket) -> str:
    lab = basis_label(psi)
    if lab is not None:
        return lab
    return " + ".join(f"({_r(a.real)}{_r(a.imag):+}j)|{i:0{psi.n}b}>" for i, a in enumerate(psi.amps) if abs(a) > 1e-9)


def ket_table(psi: Ket) -> list[dict]:
    rows = []
    for i, a in enumerate(psi.amps):
        if abs(a) > 1e-12:
            bits = format(i, f"0{psi.n}b")
            rows.append({"basis": "".join("↑" if b == "1" else "↓" for b in bits), "re": _r(a.real), "im": _r(a.imag)})
    return rows


def history_label(records: Sequence[EventRecord]) -> str:
    """Histogram key for one event history: each event's node, subsystems and realized term."""
    if not records:
        return NO_EVENTS
    parts = []
    for rec in records:
        names = ",".join(rec.term.register.names)
        parts.append(f"{rec.node}[{names}]={ket_label(rec.term)}")
    return "; ".join(parts)


def area_json(a: float):
    return None if math.isinf(a) else _r(a)


def decision_json(dec, register) -> dict:
    return {
        "node": dec.cut.node,
        "cut": dec.cut.label(register),
        "topological_loop": dec.topological_loop,
        "phase_observable": dec.phase_observable,
        "min_loop_area": area_json(dec.min_loop_area),
        "verdict": dec.verdict,
        "version": str(dec.version),
    }


def record_json(rec: EventRecord, register) -> dict:
    return {
        "tick": rec.tick,
        **decision_json(rec.decision, register),
        "basis": [{"weight": _r(w), "term": ket_label(k), "subsystems": list(k.register.names),
                   "amplitudes": [[_r(a.real), _r(a.imag)] for a in k.amps]}
                  for w, k in rec.basis.decomposition.terms],
        "separability_score": _r(rec.basis.separability_score),
        "sampled_index": rec.sampled_index,
        "probability": _r(rec.probability),
        "rng_state_before": rec.rng_state_before,
    }


# -- graph scenarios ------------------------------------------------------------


def graph_distribution(doc: ScenarioDoc, version: Postulate) -> dict[str, float]:
    dist: dict[str, float] = {}
    for prob, recs, _ in enumerate_outcomes(doc.graph(), doc.initial_ket(), version):
        lab = history_label(recs)
        dist[lab] = dist.get(lab, 0.0) + prob
    return dist


def _graph_runs(doc, seed, version, repeat):
    g, psi0 = doc.graph(), doc.initial_ket()
    counts: Counter = Counter()
    first = None
    for k in range(repeat):
        trace = [] if k == 0 else None
        final, recs = run(g, psi0, version, seed + k, trace)
        counts[history_label(recs)] += 1
        if k == 0:
            first = (final, recs, trace)
    return counts, first


# -- transact scenarios -----------------------------------------------------------


def transact_candidates(doc: ScenarioDoc) -> tuple[list[Transaction], list]:
    return cascade(doc.layout(), doc.light_speed, doc.order2_fraction, doc.phi)


def transact_distribution(doc: ScenarioDoc) -> dict[str, float]:
    cands, _ = transact_candidates(doc)
    p = candidate_probabilities(cands, doc.amplitudes)
    return {c.label: float(q) for c, q in zip(cands, p)}


def transaction_json(t: Transaction) -> dict:
    out = {
        "label": t.label,
        "order": t.order,
        "participants": sorted(p for p in t.participants),
        "probability": _r(t.probability),
    }
    if isinstance(t.outcome, Ket):
        out["outcome_ket"] = {"register": list(t.outcome.register.names), "amplitudes": ket_table(t.outcome)}
    elif t.outcome is not None:
        out["outcome_site"] = t.outcome.name
    return out


# -- reports ------------------------------------------------------------------------


def chi_square(counts: Counter, dist: dict[str, float], total: int) -> dict:
    unknown = set(counts) - set(dist)
    if unknown:
        raise InvariantBreach(f"sampled outcomes {sorted(unknown)} have zero predicted probability")
    labels = sorted(k for k, v in dist.items() if v > 0)
    if len(labels) < 2:
        return {"statistic": 0.0, "dof": 0, "p_value": 1.0}
    obs = np.array([counts.get(k, 0) for k in labels], dtype=float)
    exp = np.array([dist[k] for k in labels]) * total
    exp *= obs.sum() / exp.sum()
    res = chisquare(obs, exp)
    return {"statistic": _r(res.statistic), "dof": len(labels) - 1, "p_value": _r(res.pvalue)}


def run_report(doc: ScenarioDoc, seed: int, version: Postulate | None = None, repeat: int = 1) -> dict:
    """Execute ``repeat`` seeded runs (seeds seed .. seed+repeat-1) and summarize them."""
    if repeat < 1:
        raise ValueError("repeat must be at least 1")
    report: dict = {"algorithm": RNG_ALGORITHM, "scenario": doc.name, "kind": doc.kind, "seed": seed, "repeat": repeat}
    if doc.is_graph:
        version = version or doc.postulate
        report["version"] = str(version)
        counts, (final, recs, trace) = _graph_runs(doc, seed, version, repeat)
        dist = graph_distribution(doc, version)
        reg = doc.graph().register
        report["decisions"] = [{"tick": t, **decision_json(d, reg)} for t, d in trace]
        report["events"] = [record_json(r, reg) for r in recs]
        report["final_ket"] = ket_table(final)
    else:
        cands, trace = transact_candidates(doc)
        dist = transact_distribution(doc)
        counts = Counter()
        chosen = None
        for k in range(repeat):
            rng = make_rng(seed + k)
            snap = rng_snapshot(rng) if k == 0 else None
            t = resolve(cands, doc.amplitudes, rng, doc.phi)
            counts[t.label] += 1
            if k == 0:
                chosen = (t, snap)
        report["candidates"] = [transaction_json(c) for c in cands]
        report["trace"] = [m.to_json() for m in trace]
        report["resolved"] = {**transaction_json(chosen[0]), "rng_state_before": chosen[1]}
    if sum(counts.values()) != repeat:
        raise InvariantBreach("histogram counts do not sum to the run count")
    report["histogram"] = {k: counts[k] for k in sorted(counts)}
    report["expected"] = {k: _r(v) for k, v in sorted(dist.items())}
    report["chi_square"] = chi_square(counts, dist, repeat)
    return report


def expected_output(doc: ScenarioDoc) -> dict:
    """Seed-independent reference output stored beside each built-in fixture."""
    if not doc.is_graph:
        cands, trace = transact_candidates(doc)
        return {
            "scenario": doc.name,
            "candidates": [transaction_json(c) for c in cands],
            "distribution": {k: _r(v) for k, v in sorted(transact_distribution(doc).items())},
            "trace": trace_lines(trace),
        }
    g, psi0 = doc.graph(), doc.initial_ket()
    trace: list = []
    run(g, psi0, doc.postulate, doc.seed, trace)
    outcomes = [
        {"history": history_label(recs), "probability": _r(p), "events": len(recs), "final_ket": ket_table(final)}
        for p, recs, final in enumerate_outcomes(g, psi0, doc.postulate)
    ]
    return {
        "scenario": doc.name,
        "version": str(doc.postulate),
        "outcomes": outcomes,
        "decisions_seeded_run": [{"tick": t, **decision_json(d, g.register)} for t, d in trace],
    }


def table(report: dict) -> str:
    """Plain-text rendering of a run report."""
    lines = [f"scenario {report['scenario']}  seed {report['seed']}  repeat {report['repeat']}  rng {report['algorithm']}"]
    if "version" in report:
        lines.append(f"version {report['version']}")
        lines.append(f"events in first run: {len(report['events'])}")
        for ev in report["events"]:
            lines.append(f"  t={ev['tick']} node {ev['node']} cut {ev['cut']} -> {ev['basis'][ev['sampled_index']]['term']}"
                         f" (p={ev['probability']:.6g})")
        lines.append("final ket:")
        for row in report["final_ket"]:
            lines.append(f"  |{row['basis']}>  {row['re']:+.6f} {row['im']:+.6f}i")
    else:
        lines.append(f"candidates: {', '.join(c['label'] for c in report['candidates'])}")
        lines.append(f"first resolved: {report['resolved']['label']}")
    lines.append("histogram:")
    width = max(len(k) for k in report["histogram"])
    for k, n in report["histogram"].items():
        lines.append(f"  {k:<{width}}  {n:>8}  expected {report['expected'][k]:.6f}")
    cs = report["chi_square"]
    lines.append(f"chi-square {cs['statistic']:.6g}  dof {cs['dof']}  p {cs['p_value']:.6g}")
    return "\n".join(lines) + "\n"
