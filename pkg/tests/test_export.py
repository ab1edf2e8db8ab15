"""JSON report assembly and DOT rendering."""

from __future__ import annotations

import json

import pytest

from incent.dsl import parse_model
from incent.export import assemble_report, export_dot, export_report_json

from generators import fig_graphs
from helpers import read_corpus


@pytest.fixture(scope="module")
def figs():
    return fig_graphs()


def test_response_mark_unique_in_lecture_report(figs):
    report = assemble_report(figs["lecture"])
    marked = [
        n["name"]
        for n in report["nodes"]
        if n["incentives"].get("response", {}).get("graphical")
    ]
    assert marked == ["GraduateClass"]


def test_report_shape_and_schema(figs):
    report = assemble_report(figs["lecture"])
    assert report["schema"] == "incent/1"
    assert report["decision"] == "LectureOnline"
    assert [n["name"] for n in report["nodes"]] == list(figs["lecture"].node_names)
    decision_row = next(n for n in report["nodes"] if n["name"] == "LectureOnline")
    assert decision_row["incentives"] == {}


def test_rationals_appear_as_strings():
    model = parse_model(read_corpus("accident.scim"), "accident.scim")
    report = assemble_report(model.graph, model)
    text = export_report_json(report)
    data = json.loads(text)
    address = next(n for n in data["nodes"] if n["name"] == "Address")
    ev = address["incentives"]["observation"]["semantic_evidence"]
    assert isinstance(ev["value_with_observation"], str)
    assert "/" in ev["value_with_observation"] or ev["value_with_observation"].isdigit()


def test_cap_exceeded_reported_as_undecided():
    model = parse_model(read_corpus("lecture.scim"), "lecture.scim")
    report = assemble_report(model.graph, model, soft_cap=1)
    cell = report["nodes"][0]["incentives"]["intervention"]
    assert cell["semantic"] == "undecided"
    assert cell["reason"] == "cap_exceeded"


def test_semantic_observation_only_for_parents():
    model = parse_model(read_corpus("accident.scim"), "accident.scim")
    report = assemble_report(model.graph, model)
    by_name = {n["name"]: n["incentives"] for n in report["nodes"]}
    age = by_name["Age"]["observation"]
    assert age["graphical"] is True
    assert age["semantic"] is False
    assert age["semantic_note"] == "not an observed parent of the decision"
    address = by_name["Address"]["observation"]
    assert isinstance(address["semantic"], bool)


def test_json_deterministic(figs):
    model = parse_model(read_corpus("lecture.scim"), "lecture.scim")
    a = export_report_json(assemble_report(model.graph, model))
    b = export_report_json(assemble_report(model.graph, model))
    assert a == b


# --- DOT ----------------------------------------------------------------------


def _assert_dot_well_formed(text: str, graph):
    assert text.count("{") == text.count("}")
    assert text.startswith("digraph ")
    for n in graph.node_names:
        assert f'"{n}"' in text


def test_plain_structure_without_report(figs):
    g = figs["lecture"]
    text = export_dot(g)
    _assert_dot_well_formed(text, g)
    assert "fillcolor" not in text
    assert text.count("style=dashed") == 2  # two observation edges


def test_control_fills_mirror_marks(figs):
    g = figs["lecture"]
    text = export_dot(g, assemble_report(g))
    _assert_dot_well_formed(text, g)
    filled = [
        line for line in text.splitlines() if "fillcolor" in line
    ]
    assert any('"Attendance"' in line for line in filled)
    assert any('"TestPerformance"' in line for line in filled)
    assert not any('"PaperReviews"' in line for line in filled)


def test_accident_annotations(figs):
    g = figs["accident"]
    text = export_dot(g, assemble_report(g))
    _assert_dot_well_formed(text, g)
    lines = {
        line.strip().split(" ")[0]: line
        for line in text.splitlines()
        if "[" in line and "->" not in line
    }
    assert "peripheries=2" in lines['"Age"']
    assert "peripheries=2" in lines['"RecordedAccident"']
    assert "fillcolor" in lines['"Race"']
    assert "fillcolor" in lines['"Address"'] and "peripheries=2" in lines['"Address"']
    assert "shape=box" in lines['"AccidentPrediction"']
    assert "shape=diamond" in lines['"Accuracy"']


def test_dot_deterministic(figs):
    g = figs["accident"]
    report = assemble_report(g)
    assert export_dot(g, report) == export_dot(g, report)
