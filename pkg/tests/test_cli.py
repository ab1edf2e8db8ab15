"""The command-line surface: exit codes, formats, and pipelines."""

from __future__ import annotations

import contextlib
import io
import json

import pytest

from incent.cli import main

from helpers import CORPUS


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


# --- check -------------------------------------------------------------------------


def test_check_present_exits_10():
    code, out, _ = run(
        ["check", CORPUS / "lecture.cid", "--node", "Attendance",
         "--incentive", "control", "--mode", "graphical"]
    )
    assert code == 10
    assert "compatible" in out


def test_check_absent_exits_0():
    code, out, _ = run(
        ["check", CORPUS / "lecture.cid", "--node", "PaperReviews",
         "--incentive", "response", "--mode", "graphical"]
    )
    assert code == 0
    assert "not compatible" in out


def test_semantic_mode_needs_model():
    code, _, err = run(
        ["check", CORPUS / "lecture.cid", "--node", "Attendance",
         "--incentive", "control", "--mode", "semantic"]
    )
    assert code == 2
    assert "requires a scim" in err


def test_check_semantic_on_model():
    code, out, _ = run(
        ["check", CORPUS / "lecture.scim", "--node", "Attendance",
         "--incentive", "control", "--mode", "both", "--format", "json"]
    )
    assert code == 10
    payload = json.loads(out)
    assert payload["graphical"] is True
    assert payload["semantic"] is True


def test_check_undecided_exits_11():
    code, out, _ = run(
        ["check", CORPUS / "lecture.scim", "--node", "Attendance",
         "--incentive", "intervention", "--mode", "semantic", "--soft-cap", "1"]
    )
    assert code == 11
    assert "undecided" in out


def test_unknown_node_is_usage_error():
    code, _, err = run(
        ["check", CORPUS / "lecture.cid", "--node", "Nope",
         "--incentive", "control"]
    )
    assert code == 2
    assert "unknown node" in err


def test_parse_errors_reported_with_spans(tmp_path):
    bad = tmp_path / "bad.cid"
    bad.write_text("cid g { decision D; utility U; edge D -> D; }")
    code, _, err = run(["check", bad, "--node", "D", "--incentive", "control"])
    assert code == 2
    assert "bad.cid:1:" in err
    assert "self-loop" in err


# --- analyze -----------------------------------------------------------------------


def test_analyze_text_lists_nodes():
    code, out, _ = run(["analyze", CORPUS / "lecture.cid"])
    assert code == 0
    assert "GraduateClass" in out
    assert "graphical=yes" in out


def test_analyze_json_matches_schema():
    code, out, _ = run(["analyze", CORPUS / "recsys_b.cid", "--format", "json"])
    assert code == 0
    payload = json.loads(out)
    assert payload["schema"] == "incent/1"
    marks = {
        n["name"]
        for n in payload["nodes"]
        if n["incentives"].get("control", {}).get("graphical")
    }
    assert marks == {"PredictedClicks"}


def test_analyze_dot_output():
    code, out, _ = run(["analyze", CORPUS / "accident.cid", "--format", "dot"])
    assert code == 0
    assert out.startswith("digraph")


def test_analyze_writes_output_file(tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run(
        ["analyze", CORPUS / "lecture.cid", "--format", "json", "-o", target]
    )
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["model"] == "lecture"


def test_analyze_deterministic_bytes():
    a = run(["analyze", CORPUS / "accident.scim", "--format", "json"])
    b = run(["analyze", CORPUS / "accident.scim", "--format", "json"])
    assert a == b


# --- witness pipeline -----------------------------------------------------------------


def test_witness_then_semantic_check(tmp_path):
    out_file = tmp_path / "w.scim"
    code, _, _ = run(
        ["witness", CORPUS / "lecture.cid", "--node", "Attendance",
         "--incentive", "control", "-o", out_file]
    )
    assert code == 0
    code, _, _ = run(
        ["check", out_file, "--node", "Attendance", "--incentive", "control",
         "--mode", "semantic"]
    )
    assert code == 10


def test_response_witness_pipeline(tmp_path):
    out_file = tmp_path / "race.scim"
    code, _, _ = run(
        ["witness", CORPUS / "accident.cid", "--node", "Race",
         "--incentive", "response", "-o", out_file]
    )
    assert code == 0
    code, _, _ = run(
        ["check", out_file, "--node", "Race", "--incentive", "response",
         "--mode", "semantic"]
    )
    assert code == 10


def test_witness_refused_when_criterion_fails(tmp_path):
    code, _, err = run(
        ["witness", CORPUS / "lecture.cid", "--node", "StudentIllness",
         "--incentive", "control", "-o", tmp_path / "no.scim"]
    )
    assert code == 12
    assert "criterion not satisfied" in err


# --- fairness ---------------------------------------------------------------------------


def test_fairness_of_witness_model(tmp_path):
    out_file = tmp_path / "race.scim"
    run(["witness", CORPUS / "accident.cid", "--node", "Race",
         "--incentive", "response", "-o", out_file])
    code, out, _ = run(["fair", out_file, "--attribute", "Race"])
    assert code == 10
    assert "no fair optimal policy" in out


def test_fairness_exists_for_age():
    code, out, _ = run(["fair", CORPUS / "accident.scim", "--attribute", "Age",
                        "--format", "json"])
    assert code == 0
    payload = json.loads(out)
    assert payload["exists_fair_optimal"] is True
    assert payload["fair_policy"]


def test_fairness_requires_known_attribute():
    code, _, err = run(["fair", CORPUS / "accident.scim", "--attribute", "Nope"])
    assert code == 2
    assert "unknown node" in err


# --- optimal-policy -----------------------------------------------------------------------


def test_optimal_policy_summary(tmp_path):
    out_file = tmp_path / "w.scim"
    run(["witness", CORPUS / "lecture.cid", "--node", "Attendance",
         "--incentive", "control", "-o", out_file])
    code, out, _ = run(["optimal-policy", out_file, "--format", "json"])
    assert code == 0
    payload = json.loads(out)
    assert payload["optimal_value"] == "1"
    q_values = set(payload["contexts"][0]["q"].values())
    assert q_values == {"0", "1"}


def test_optimal_policy_counts_flat_models():
    code, out, _ = run(["optimal-policy", CORPUS / "lecture.scim"])
    assert code == 0
    assert "optimal policies: 256" in out
