"""Graph queries: relations, paths, d-separation, reduced graph."""

from __future__ import annotations

import random

import pytest

from incent.graph import (
    Cid,
    GraphError,
    NodeKind,
    PathWitness,
    d_separated,
    find_active_path,
    find_directed_path,
    intercepts,
    reduced_graph,
    relatives,
    validate,
)

from generators import fig_graphs, random_cid
from helpers import C, D, U
from oracles import moral_d_separated


@pytest.fixture(scope="module")
def figs():
    return fig_graphs()


# --- validation ----------------------------------------------------------------


def test_lecture_graph_is_valid(figs):
    assert validate(figs["lecture"]) == []


def test_utility_child_is_reported():
    g = Cid([("D", D), ("U", U), ("X", C)], [("D", "U"), ("U", "X")])
    assert any("utility node has child" in p for p in validate(g))


def test_cycle_is_reported():
    g = Cid([("A", C), ("B", C), ("D", D), ("U", U)], [("A", "B"), ("B", "A")])
    assert any("cycle detected" in p for p in validate(g))


def test_dangling_edge_and_decision_count():
    g = Cid([("A", C), ("U", U)], [("A", "Z")])
    problems = validate(g)
    assert any("undeclared node" in p for p in problems)
    assert any("exactly one decision" in p for p in problems)


def test_two_decisions_rejected():
    g = Cid([("D1", D), ("D2", D), ("U", U)], [("D1", "U")])
    assert any("exactly one decision" in p for p in validate(g))


# --- relations -------------------------------------------------------------------


def test_decision_parents(figs):
    assert relatives(figs["lecture"], "LectureOnline", "parents") == {
        "GraduateClass",
        "PaperReviews",
    }


def test_utility_has_no_children(figs):
    assert relatives(figs["lecture"], "TestPerformance", "children") == frozenset()


def test_descendants_are_reflexive_transitive(figs):
    assert relatives(figs["accident"], "Race", "descendants") == {
        "Race",
        "Address",
        "RecordedAccident",
        "AccidentPrediction",
        "Accuracy",
    }


def test_family_is_node_plus_parents(figs):
    assert relatives(figs["accident"], "AccidentPrediction", "family") == {
        "AccidentPrediction",
        "Address",
        "MaritalStatus",
    }


def test_unknown_node_raises(figs):
    with pytest.raises(GraphError):
        relatives(figs["lecture"], "Nope", "parents")
    with pytest.raises(GraphError):
        relatives(figs["lecture"], "Attendance", "cousins")


# --- directed paths ---------------------------------------------------------------


def test_path_through_mediator(figs):
    path = find_directed_path(
        figs["lecture"], "LectureOnline", "TestPerformance", via="Attendance"
    )
    assert path.nodes == ("LectureOnline", "Attendance", "TestPerformance")
    assert path.is_directed


def test_no_path_between_upstream_nodes(figs):
    g = figs["lecture"]
    assert find_directed_path(g, "StudentIllness", "LectureOnline") is None
    assert find_directed_path(g, "LectureOnline", "StudentIllness") is None


def test_length_zero_path():
    g = Cid([("X", C), ("D", D), ("U", U)], [])
    assert find_directed_path(g, "X", "X").nodes == ("X",)


def test_via_path_exists_iff_both_halves_exist():
    rng = random.Random(7)
    for _ in range(60):
        g = random_cid(rng, max_nodes=7)
        names = g.node_names
        s, t, via = (rng.choice(names) for _ in range(3))
        composed = find_directed_path(g, s, t, via=via)
        halves = (
            find_directed_path(g, s, via) is not None
            and find_directed_path(g, via, t) is not None
        )
        assert (composed is not None) == halves
        if composed is not None:
            assert via in composed.nodes
            assert len(set(composed.nodes)) == len(composed.nodes)


# --- interception ------------------------------------------------------------------


def test_direct_edge_bypasses_cut(figs):
    assert not intercepts(
        figs["lecture"], {"LectureOnline"}, {"TestPerformance"}, {"Attendance"}
    )


def test_single_path_is_cut():
    g = Cid([("A", C), ("B", C), ("CC", C), ("D", D), ("U", U)], [("A", "B"), ("B", "CC")])
    assert intercepts(g, {"A"}, {"CC"}, {"B"})


def test_all_paths_through_address(figs):
    assert intercepts(figs["accident"], {"Race"}, {"Accuracy"}, {"Address"})


def test_reflexive_interception():
    g = Cid([("A", C), ("D", D), ("U", U)], [])
    assert not intercepts(g, {"A"}, {"A"}, set())
    assert intercepts(g, {"A"}, {"A"}, {"A"})


# --- d-separation -------------------------------------------------------------------


def test_marital_status_separated_from_accuracy(figs):
    sep, path = d_separated(
        figs["accident"],
        {"MaritalStatus"},
        {"Accuracy"},
        {"AccidentPrediction", "Address"},
    )
    assert sep and path is None


def test_blocked_chain():
    g = Cid([("X", C), ("W", C), ("Y", C), ("D", D), ("U", U)], [("X", "W"), ("W", "Y")])
    sep, _ = d_separated(g, {"X"}, {"Y"}, {"W"})
    assert sep


def test_conditioned_collider_opens_path():
    g = Cid([("X", C), ("Y", C), ("W", C), ("D", D), ("U", U)], [("X", "W"), ("Y", "W")])
    sep, path = d_separated(g, {"X"}, {"Y"}, {"W"})
    assert not sep
    assert path.nodes == ("X", "W", "Y")


def test_non_disjoint_sets_rejected(figs):
    with pytest.raises(GraphError):
        d_separated(figs["lecture"], {"Attendance"}, {"Attendance"}, set())


def test_d_separation_is_symmetric():
    rng = random.Random(13)
    for _ in range(80):
        g = random_cid(rng, max_nodes=7)
        names = list(g.node_names)
        rng.shuffle(names)
        x, y = names[0], names[1]
        zs = {n for n in names[2:] if rng.random() < 0.4}
        assert d_separated(g, {x}, {y}, zs)[0] == d_separated(g, {y}, {x}, zs)[0]


def test_agreement_with_moral_graph_oracle():
    rng = random.Random(99)
    for _ in range(150):
        g = random_cid(rng, max_nodes=7)
        names = list(g.node_names)
        rng.shuffle(names)
        x, y = names[0], names[1]
        zs = {n for n in names[2:] if rng.random() < 0.4}
        ours = d_separated(g, {x}, {y}, zs)[0]
        assert ours == moral_d_separated(g, {x}, {y}, zs)


# --- active paths ------------------------------------------------------------------


def test_active_path_through_recorded_accident(figs):
    path = find_active_path(
        figs["accident"], "Address", "Accuracy", {"AccidentPrediction", "MaritalStatus"}
    )
    assert path.nodes == ("Address", "RecordedAccident", "Accuracy")
    assert path.directions == ("->", "->")


def test_active_path_none_when_blocked():
    g = Cid([("X", C), ("W", C), ("Y", C), ("D", D), ("U", U)], [("X", "W"), ("W", "Y")])
    assert find_active_path(g, "X", "Y", {"W"}) is None


def test_collider_with_conditioned_descendant_is_active():
    g = Cid(
        [("X", C), ("Y", C), ("W", C), ("D", D), ("U", U)],
        [("X", "W"), ("Y", "W"), ("W", "D")],
    )
    path = find_active_path(g, "X", "Y", {"D"})
    assert path.nodes == ("X", "W", "Y")
    assert path.directions == ("->", "<-")


def test_shortest_active_path_is_chosen():
    # two active routes; the two-step one must win
    g = Cid(
        [("X", C), ("A", C), ("B", C), ("Y", C), ("D", D), ("U", U)],
        [("X", "A"), ("A", "Y"), ("X", "B"), ("B", "A")],
    )
    path = find_active_path(g, "X", "Y", set())
    assert path.nodes == ("X", "A", "Y")


# --- reduced graph ------------------------------------------------------------------


def test_lecture_reduction_drops_unhelpful_observation(figs):
    g = figs["lecture"]
    rg = reduced_graph(g)
    removed = [e for e in g.edges if e not in set(rg.edges)]
    assert removed == [("PaperReviews", "LectureOnline")]
    assert rg.nodes == g.nodes


def test_reduction_identity_without_observations():
    g = Cid([("D", D), ("X", C), ("U", U)], [("D", "X"), ("X", "U")])
    assert reduced_graph(g).edges == g.edges


def test_accident_reduction_keeps_address(figs):
    g = figs["accident"]
    rg = reduced_graph(g)
    removed = [e for e in g.edges if e not in set(rg.edges)]
    assert removed == [("MaritalStatus", "AccidentPrediction")]


def test_reduction_only_removes_information_edges():
    rng = random.Random(2024)
    for _ in range(40):
        g = random_cid(rng)
        rg = reduced_graph(g)
        gone = set(g.edges) - set(rg.edges)
        assert set(rg.edges) <= set(g.edges)
        assert all(b == g.decision for _, b in gone)


# --- path witness invariants ---------------------------------------------------------


def test_path_witness_shape_checks():
    with pytest.raises(GraphError):
        PathWitness((), ())
    with pytest.raises(GraphError):
        PathWitness(("A", "B"), ())
    assert str(PathWitness(("A", "B"), ("->",))) == "A -> B"
