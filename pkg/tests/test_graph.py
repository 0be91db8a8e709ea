import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fig1a_graph, fig1b_graph, node, random_graph
from loopline.errors import MissingPositions
from loopline.graph import (
    INFINITE,
    Cut,
    InteractionGraph,
    cone_subsystems,
    future_cone,
    loop_area,
    meeting_nodes,
    topological_loop_exists,
    validate,
)
from loopline.hilbert import Register

ABC = Register(("A", "B", "C"))


def ids(nodes):
    return sorted(nd.id for nd in nodes)


class TestValidate:
    def test_clean_graphs(self):
        assert validate(fig1a_graph()) == []
        assert validate(fig1b_graph()) == []

    def test_worldline_branch(self):
        g = InteractionGraph(ABC, (node("X", 3, "AB", "controlled-flip"), node("Y", 3, "AC", "controlled-flip")), 5)
        rules = [(d.rule, d.subject) for d in validate(g)]
        assert ("WorldlineBranch", ("A", 3)) in rules

    def test_participant_mismatch(self):
        gate = node("X", 1, "AB", "controlled-flip").gate
        from loopline.graph import InteractionNode
        g = InteractionGraph(ABC, (InteractionNode("X", 1, ("A", "C"), gate),), 5)
        assert [d.rule for d in validate(g)] == ["ParticipantMismatch"]

    def test_unknown_subsystem_and_horizon(self):
        g = InteractionGraph(ABC, (node("X", 9, "AZ", "controlled-flip"),), 5)
        rules = {d.rule for d in validate(g)}
        assert {"UnknownSubsystem", "BeyondHorizon"} <= rules

    def test_non_reversed_needs_avalanche_or_no_future(self):
        g = InteractionGraph(ABC, (node("X", 1, "AB", "controlled-flip", non_reversed=True),
                                   node("Y", 2, "AC", "controlled-flip")), 5)
        assert [d.rule for d in validate(g)] == ["IllegalNonReversed"]

    def test_diagnostic_str(self):
        g = InteractionGraph(ABC, (node("X", 3, "AB", "controlled-flip"), node("Y", 3, "AC", "controlled-flip")), 5)
        assert "WorldlineBranch(A, 3)" in [str(d).split(" at")[0] for d in validate(g)]


class TestFutureCone:
    def test_fig1a_cones_are_empty(self):
        g = fig1a_graph()
        assert future_cone(g, "E", {"A", "B"}) == frozenset()
        assert not topological_loop_exists(g, Cut("E", {"A", "B"}, {"C"}))

    def test_fig1b_cones_meet_at_d(self):
        g = fig1b_graph()
        cut = Cut("E", {"A", "B"}, {"C"})
        assert ids(future_cone(g, "E", {"C"})) == ["D"]
        assert ids(meeting_nodes(g, cut)) == ["D"]
        assert cone_subsystems(g, "E", {"C"}) == {"A", "B", "C"}

    def test_non_reversed_stops_traversal(self):
        g = InteractionGraph(Register(("A", "B", "C", "D")), (
            node("E", 1, "ABC", "entangler", 0),
            node("V", 2, "CD", "avalanche", 1, non_reversed=True),
            node("F", 3, "CA", "controlled-flip", 1),
        ), 5)
        assert ids(future_cone(g, "E", {"C"})) == ["V"]
        assert not topological_loop_exists(g, Cut("E", {"A", "B"}, {"C"}))

    def test_beyond_horizon_ignored(self):
        g = InteractionGraph(ABC, (node("E", 1, "ABC", "entangler", 0), node("D", 5, "ABC", "disentangler", 3)), 4)
        assert future_cone(g, "E", {"C"}) == frozenset()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_monotone_in_side(self, seed):
        g, _ = random_graph(seed)
        start = g.ordered[0]
        names = g.register.names
        small = future_cone(g, start, names[:1])
        big = future_cone(g, start, names[:2])
        assert small <= big

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_loop_symmetric_under_swap(self, seed):
        g, _ = random_graph(seed)
        names = g.register.names
        for nd in g.ordered:
            cut = Cut(nd.id, names[:1], names[1:])
            assert topological_loop_exists(g, cut) == topological_loop_exists(g, cut.swapped())
            assert loop_area(g, cut) == loop_area(g, cut.swapped())

    def test_removing_w_cone_removes_loop(self):
        g = fig1b_graph()
        cut = Cut("E", {"A", "B"}, {"C"})
        cone = future_cone(g, "E", cut.side_w)
        pruned = InteractionGraph(g.register, tuple(nd for nd in g.nodes if nd not in cone), g.horizon)
        assert topological_loop_exists(g, cut)
        assert not topological_loop_exists(pruned, cut)


class TestLoopArea:
    def test_fig1b(self):
        assert loop_area(fig1b_graph(), Cut("E", {"A", "B"}, {"C"})) == 12

    def test_no_loop_is_infinite(self):
        assert loop_area(fig1a_graph(), Cut("E", {"A", "B"}, {"C"})) == INFINITE

    def test_one_site_one_tick(self):
        g = InteractionGraph(ABC, (node("E", 1, "ABC", "entangler", 0), node("D", 2, "ABC", "disentangler", 0)), 3)
        assert loop_area(g, Cut("E", {"A", "B"}, {"C"})) == 1

    def test_min_over_meeting_nodes(self):
        g = InteractionGraph(ABC, (
            node("E", 1, "ABC", "entangler", 0),
            node("P", 2, "AC", "controlled-flip", 1),
            node("Q", 6, "BC", "controlled-flip", 5),
        ), 8)
        assert loop_area(g, Cut("E", {"A"}, {"B", "C"})) == 1

    def test_missing_positions(self):
        g = InteractionGraph(ABC, (node("E", 1, "ABC", "entangler", 0), node("D", 5, "ABC", "disentangler")), 10)
        cut = Cut("E", {"A", "B"}, {"C"})
        with pytest.raises(MissingPositions):
            loop_area(g, cut)
        assert loop_area(g, cut, strict=False) == 4


class TestCut:
    def test_rejects_empty_or_overlapping(self):
        with pytest.raises(ValueError):
            Cut("E", set(), {"A"})
        with pytest.raises(ValueError):
            Cut("E", {"A"}, {"A", "B"})

    def test_label_follows_register(self):
        assert Cut("E", {"B", "A"}, {"C"}).label(ABC) == "A,B|C"
