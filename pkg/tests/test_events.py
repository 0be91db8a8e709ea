import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from conftest import fig1a_graph, fig1b_graph, node, oracle_cases, random_graph
from oracles import brute_force_oracle
from loopline import scenarios
from loopline.errors import DegenerateCut, InconsistentRecord, InvalidState, NotComposite
from loopline.events import (
    EVENT,
    NO_EVENT,
    STRONG,
    EventRecord,
    Postulate,
    born_sample,
    collapse,
    decide_event,
    enumerate_outcomes,
    evolve,
    extend_basis,
    make_rng,
    phase_observability_oracle,
    preferred_basis,
    run,
    separability_score,
    state_set,
)
from loopline.graph import Cut, InteractionGraph, loop_area, topological_loop_exists
from loopline.hilbert import (
    Decomposition,
    Ket,
    Register,
    partial_trace,
    phi_pair,
    to_density,
)

PHIS = (0.0, math.pi / 4, math.pi / 2, math.pi, 3 * math.pi / 2)
AB_C = Cut("E", {"A", "B"}, {"C"})


def psi3(phi):
    return evolve(Ket.product(("A", "B", "C"), "ldd"), fig1a_graph(phi).nodes)


def rho_ab(phi=0.0):
    return partial_trace(to_density(psi3(phi)), "AB")


def graph_cases():
    for name in scenarios.BUILTINS:
        doc = scenarios.builtin(name)
        if doc.is_graph:
            yield name, doc.graph(), doc.initial_ket()


class TestPostulate:
    def test_strings(self):
        assert str(STRONG) == "STRONG"
        assert str(Postulate.weak(4)) == "WEAK(4)"

    @pytest.mark.parametrize("kind,a_max", [("strong", 1.0), ("weak", None), ("weak", -1), ("medium", None)])
    def test_rejects_bad_combinations(self, kind, a_max):
        with pytest.raises(ValueError):
            Postulate(kind, a_max)


class TestOracle:
    @pytest.mark.parametrize("phi", PHIS)
    def test_fig1a_unobservable(self, phi):
        assert not phase_observability_oracle(fig1a_graph(phi), AB_C, psi3(phi))

    @pytest.mark.parametrize("phi", PHIS)
    def test_fig1b_observable(self, phi):
        assert phase_observability_oracle(fig1b_graph(phi), AB_C, psi3(phi))

    def test_eq5_measurement_observable(self):
        doc = scenarios.builtin("eq5-measurement")
        g = doc.graph()
        psi = evolve(doc.initial_ket(), g.at_tick(1))
        cut = Cut("E", {"A", "B"}, {"C"})
        assert phase_observability_oracle(g, cut, psi)

    def test_degenerate_cut(self):
        psi = Ket.product(("A", "B", "C"), "ddd")
        with pytest.raises(DegenerateCut):
            decide_event(fig1a_graph(), AB_C, psi)

    @pytest.mark.parametrize("name,g,ket", list(graph_cases()))
    def test_matches_brute_force_on_builtins(self, name, g, ket):
        for cut, psi in oracle_cases(g, ket):
            assert phase_observability_oracle(g, cut, psi) == brute_force_oracle(g, cut, psi.amps), cut

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 100_000))
    def test_matches_brute_force_on_random_graphs(self, seed):
        g, ket = random_graph(seed)
        for cut, psi in oracle_cases(g, ket):
            observable = phase_observability_oracle(g, cut, psi)
            assert observable == brute_force_oracle(g, cut, psi.amps)
            if observable:
                assert topological_loop_exists(g, cut)


class TestDecideEvent:
    def test_fig1a_strong(self):
        dec = decide_event(fig1a_graph(), AB_C, psi3(0))
        assert (dec.topological_loop, dec.phase_observable, dec.verdict) == (False, False, EVENT)
        assert dec.min_loop_area == math.inf

    def test_fig1b_strong(self):
        dec = decide_event(fig1b_graph(), AB_C, psi3(0))
        assert (dec.topological_loop, dec.phase_observable, dec.verdict) == (True, True, NO_EVENT)
        assert dec.min_loop_area == 12

    @pytest.mark.parametrize("a_max,verdict", [(0, EVENT), (11, EVENT), (12, NO_EVENT), (64, NO_EVENT)])
    def test_fig1b_weak(self, a_max, verdict):
        g = fig1b_graph()
        assert loop_area(g, AB_C) == 12
        assert decide_event(g, AB_C, psi3(0), Postulate.weak(a_max)).verdict == verdict

    def test_eq5_ab_c_no_event(self):
        doc = scenarios.builtin("eq5-measurement")
        g = doc.graph()
        dec = decide_event(g, Cut("E", {"A", "B"}, {"C"}), evolve(doc.initial_ket(), g.at_tick(1)))
        assert (dec.topological_loop, dec.verdict) == (True, NO_EVENT)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 100_000), st.sampled_from([0.0, 2.0, 8.0, 1e9]))
    def test_verdict_invariant(self, seed, a_max):
        g, ket = random_graph(seed)
        for version in (STRONG, Postulate.weak(a_max)):
            for cut, psi in oracle_cases(g, ket):
                d = decide_event(g, cut, psi, version)
                hidden = not d.phase_observable
                if version.kind == "weak":
                    hidden = hidden or d.min_loop_area > a_max
                assert (d.verdict == EVENT) == hidden


class TestPreferredBasis:
    @pytest.mark.parametrize("phi", PHIS)
    def test_picks_product_terms(self, phi):
        pb = preferred_basis(rho_ab(phi))
        assert pb.separability_score < 1e-6
        kets = sorted(tuple(np.abs(k.amps).round(9)) for _, k in pb.decomposition.terms)
        assert kets == [(0, 0, 0, 1), (1, 0, 0, 0)]
        np.testing.assert_allclose(pb.decomposition.weights, [0.5, 0.5], atol=1e-12)

    def test_bell_decomposition_scores_one_bit(self):
        plus, minus = phi_pair(0.0, +1), phi_pair(0.0, -1)
        bell = Decomposition(((0.5, plus), (0.5, minus)))
        bell.check_reconstructs(rho_ab())
        assert separability_score(bell) == pytest.approx(1.0, abs=1e-6)

    def test_pure_product_single_term(self):
        rho = to_density(Ket.product(("A", "B"), "dd"))
        pb = preferred_basis(rho)
        assert len(pb.decomposition) == 1 and pb.separability_score == pytest.approx(0.0, abs=1e-12)

    def test_single_subsystem_rejected(self):
        with pytest.raises(NotComposite):
            preferred_basis(to_density(Ket.product(("A",), "d")))

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 100_000))
    def test_reconstructs_random_rho(self, seed):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi = Ket.normalized(("A", "B", "C"), v)
        rho = partial_trace(to_density(psi), "AB")
        pb = preferred_basis(rho, refine=False)
        pb.decomposition.check_reconstructs(rho)
        assert pb.separability_score >= 0


class TestBornSample:
    def test_certain_outcome(self, rng):
        dec = Decomposition(((1.0, Ket.product(("A", "B"), "dd")), (0.0, Ket.product(("A", "B"), "uu"))))
        assert {born_sample(dec, rng)[0] for _ in range(200)} == {0}

    def test_half_half_within_three_sigma(self):
        dec = preferred_basis(rho_ab()).decomposition
        rng = make_rng(2024)
        n = 100_000
        hits = sum(born_sample(dec, rng)[0] == 0 for _ in range(n))
        assert abs(hits / n - 0.5) < 3 * math.sqrt(0.25 / n)

    def test_quarter_three_quarters_chi_square(self):
        dd, uu = Ket.product(("A", "B"), "dd"), Ket.product(("A", "B"), "uu")
        dec = Decomposition(((0.25, dd), (0.75, uu)))
        rng = make_rng(99)
        n = 100_000
        draws = np.array([born_sample(dec, rng)[0] for _ in range(n)])
        counts = np.bincount(draws, minlength=2)
        assert chisquare(counts, [0.25 * n, 0.75 * n]).pvalue > 0.001

    def test_deterministic_given_seed(self):
        dec = preferred_basis(rho_ab()).decomposition
        a, b = make_rng(5), make_rng(5)
        assert [born_sample(dec, a) for _ in range(50)] == [born_sample(dec, b) for _ in range(50)]


class TestCollapse:
    @pytest.mark.parametrize("phi", [0.0, 1.3])
    def test_conditions_record_side(self, phi):
        psi = psi3(phi)
        basis = preferred_basis(rho_ab(phi))
        for i, (_, term) in enumerate(basis.decomposition.terms):
            rec = EventRecord(1, decide_event(fig1a_graph(phi), AB_C, psi), basis, i, 0.5, psi, {})
            out = collapse(psi, rec)
            assert np.linalg.norm(out.amps) == pytest.approx(1.0, abs=1e-10)
            sym = "ddd" if abs(term.amps[0]) > 0.5 else "uuu"
            assert out.equals(Ket.product(psi.register, sym), up_to_phase=True)

    def test_single_term_is_identity(self):
        psi = Ket.product(("A", "B", "C"), "dud")
        basis = preferred_basis(partial_trace(to_density(psi), "AB"))
        rec = EventRecord(0, None, basis, 0, 1.0, psi, {})
        assert collapse(psi, rec).equals(psi, up_to_phase=True)

    def test_register_mismatch(self):
        psi = psi3(0)
        basis = preferred_basis(rho_ab())
        other = Ket.product(("A", "B"), "dd")
        rec = EventRecord(1, None, basis, 0, 0.5, other, {})
        with pytest.raises(InconsistentRecord):
            collapse(psi, rec)


class TestRun:
    def test_fig1a_one_event(self):
        psi0 = Ket.product(("A", "B", "C"), "ldd")
        finals = set()
        for seed in range(20):
            final, recs = run(fig1a_graph(), psi0, seed=seed)
            assert len(recs) == 1
            rec = recs[0]
            assert rec.probability == pytest.approx(rec.basis.decomposition.weights[rec.sampled_index], abs=1e-12)
            ab = "dd" if final.amps[0] != 0 else "uu"
            assert final.equals(Ket.product(final.register, ab + ab[0]), up_to_phase=True)
            finals.add(ab)
        assert finals == {"dd", "uu"}

    def test_fig1b_no_events(self):
        psi0 = Ket.product(("A", "B", "C"), "ldd")
        final, recs = run(fig1b_graph(), psi0, seed=3)
        assert recs == []
        expected = evolve(psi0, fig1b_graph().nodes)
        assert final.equals(expected, up_to_phase=True)

    def test_empty_graph(self):
        psi0 = Ket.product(("A", "B"), "lr")
        final, recs = run(InteractionGraph(Register(("A", "B")), (), 3), psi0)
        assert recs == [] and final.equals(psi0)

    def test_deterministic(self):
        psi0 = Ket.product(("A", "B", "C"), "ldd")
        a = [r.sampled_index for r in run(fig1a_graph(), psi0, seed=11)[1]]
        b = [r.sampled_index for r in run(fig1a_graph(), psi0, seed=11)[1]]
        assert a == b

    def test_register_mismatch(self):
        with pytest.raises(InvalidState):
            run(fig1a_graph(), Ket.product(("A", "B", "D"), "ldd"))

    @pytest.mark.parametrize("phi", np.linspace(0, 2 * math.pi, 7))
    def test_phase_irrelevant_to_event_probabilities(self, phi):
        psi0 = Ket.product(("A", "B", "C"), "ldd")
        probs = sorted(round(p, 10) for p, _, _ in enumerate_outcomes(fig1a_graph(phi), psi0))
        assert probs == [0.5, 0.5]

    def test_record_on_c_makes_fig1b_eventful(self):
        # an irreversible copy of C before the disentangler hides the phase for good
        g = InteractionGraph(Register(("A", "B", "C", "D1")), (
            node("E", 1, "ABC", "entangler", 0),
            node("V", 3, ("C", "D1"), "avalanche", 2, non_reversed=True),
            node("D", 5, "ABC", "disentangler", 3),
        ), 10)
        _, recs = run(g, Ket.product(g.register, "lddu"), seed=1)
        assert [(r.node, r.decision.verdict, r.decision.topological_loop) for r in recs] == [("E", EVENT, False)]

    def test_enumerate_matches_run(self):
        psi0 = Ket.product(("A", "B", "C"), "ldd")
        outcomes = list(enumerate_outcomes(fig1a_graph(), psi0))
        assert sum(p for p, _, _ in outcomes) == pytest.approx(1.0, abs=1e-12)
        assert all(len(recs) == 1 for _, recs, _ in outcomes)


class TestStateSet:
    def setup_method(self):
        self.g = fig1a_graph()
        self.psi_i = Ket.product(("A", "B", "C"), "ldd")
        psi_f = evolve(self.psi_i, self.g.nodes)
        self.basis_f = extend_basis(preferred_basis(partial_trace(to_density(psi_f), "AB")), psi_f)

    def test_at_final_tick(self):
        s = state_set(self.g, self.psi_i, 10, 0, 10, self.basis_f)
        for (k, p), (w, b) in zip(s.pairs, self.basis_f.terms):
            assert k.equals(b) and p == pytest.approx(w, abs=1e-12)

    def test_preimages_at_initial_tick(self):
        s = state_set(self.g, self.psi_i, 0, 0, 10, self.basis_f)
        got = {tuple(np.abs(k.amps).round(9)) for k, _ in s.pairs}
        want = {tuple(np.abs(Ket.product(("A", "B", "C"), sym).amps)) for sym in ("ddd", "udd")}
        assert got == want
        assert [p for _, p in s.pairs] == pytest.approx([0.5, 0.5], abs=1e-12)

    @pytest.mark.parametrize("t", [0, 2, 5, 9])
    def test_probabilities_invariant_in_t(self, t):
        s = state_set(self.g, self.psi_i, t, 0, 10, self.basis_f)
        assert sum(p for _, p in s.pairs) == pytest.approx(1.0, abs=1e-9)
        assert [p for _, p in s.pairs] == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_bad_tick_order(self):
        with pytest.raises(ValueError):
            state_set(self.g, self.psi_i, 11, 0, 10, self.basis_f)

    def test_needs_full_register(self):
        psi_f = evolve(self.psi_i, self.g.nodes)
        small = preferred_basis(partial_trace(to_density(psi_f), "AB"))
        with pytest.raises(InvalidState):
            state_set(self.g, self.psi_i, 0, 0, 10, small)

