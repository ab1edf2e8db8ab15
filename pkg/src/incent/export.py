"""Report assembly and export to JSON and Graphviz DOT.

The JSON schema (``incent/1``) is stable-keyed and uses ``"p/q"`` strings
for every rational so downstream tools never see lossy floats.  DOT output
renders the diagram with the figure conventions: decisions as boxes,
utilities as diamonds, chance nodes as ellipses, observation edges into
the decision dashed, and incentive verdicts as node fills (control,
response) or a doubled gray outline (observation).
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Optional, Union

from .criteria import KIND_ORDER, CriterionVerdict, IncentiveKind, full_report
from .graph import Cid, PathWitness
from .incentives import SemanticVerdict, semantic_check
from .model import Scim
from .policy import Policy

SCHEMA = "incent/1"


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, PathWitness):
        return {"nodes": list(obj.nodes), "directions": list(obj.directions)}
    if isinstance(obj, Policy):
        rows = [
            [list(pa), e, v] for (pa, e), v in sorted(obj.table.items(), key=repr)
        ]
        out = {"decision": obj.decision, "parents": list(obj.parent_order)}
        if obj.default is not None:
            out["default"] = obj.default
        if len(rows) <= 64:
            out["rows"] = rows
        else:
            out["row_count"] = len(rows)
        return out
    if isinstance(obj, dict):
        if all(isinstance(k, str) for k in obj):
            return {k: _jsonable(v) for k, v in obj.items()}
        return [[_jsonable(k), _jsonable(v)] for k, v in obj.items()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, IncentiveKind):
        return obj.value
    return obj


def _criterion_entry(verdict: CriterionVerdict) -> dict:
    entry: dict = {"graphical": verdict.compatible}
    if verdict.evidence:
        entry["evidence"] = _jsonable(verdict.evidence)
    if verdict.reason:
        entry["note"] = verdict.reason
    return entry


def _semantic_entry(verdict: SemanticVerdict) -> dict:
    if verdict.present is None:
        entry: dict = {"semantic": "undecided", "reason": "cap_exceeded"}
        if verdict.reason:
            entry["detail"] = verdict.reason
        return entry
    entry = {"semantic": verdict.present}
    if verdict.evidence:
        entry["semantic_evidence"] = _jsonable(verdict.evidence)
    if verdict.reason:
        entry["semantic_note"] = verdict.reason
    if verdict.details:
        entry.update(_jsonable(verdict.details))
    return entry


def assemble_report(
    graph: Cid,
    model: Optional[Scim] = None,
    cap: int = 4096,
    soft_cap: int = 4096,
) -> dict:
    """The full per-node report: graphical verdicts, semantic when a model
    is given.

    The semantic observation check only applies to observed parents of the
    decision; for other nodes the value of information is zero by
    construction (no policy can read them), which is reported as a
    negative verdict with a note.
    """
    name = model.name if model is not None else graph.name
    verdicts = {(v.node, v.kind): v for v in full_report(graph)}
    decision = graph.decision
    observed = set(graph.parents(decision))
    nodes = []
    for n, kind in graph.nodes:
        entry: dict = {"name": n, "kind": kind.value}
        incentives: dict = {}
        if n != decision:
            for k in KIND_ORDER:
                cell = _criterion_entry(verdicts[(n, k)])
                if model is not None:
                    if k is IncentiveKind.OBSERVATION and n not in observed:
                        cell["semantic"] = False
                        cell["semantic_note"] = "not an observed parent of the decision"
                    else:
                        cell.update(
                            _semantic_entry(
                                semantic_check(model, n, k, cap=cap, soft_cap=soft_cap)
                            )
                        )
                incentives[k.value] = cell
        entry["incentives"] = incentives
        nodes.append(entry)
    return {"schema": SCHEMA, "model": name, "decision": decision, "nodes": nodes}


def export_report_json(report: dict) -> str:
    """Serialize an assembled report with deterministic key order."""
    return json.dumps(report, indent=2) + "\n"


# --- DOT ---------------------------------------------------------------------

_SHAPES = {"chance": "ellipse", "decision": "box", "utility": "diamond"}
_CONTROL_FILL = "#bdd7ee"
_RESPONSE_FILL = "#f8cecc"
_BOTH_FILL = "#d9c7e8"


def _dot_quote(name: str) -> str:
    return '"' + name.replace('"', '\\"') + '"'


def export_dot(graph: Cid, report: Optional[dict] = None) -> str:
    """Graphviz source for the diagram, optionally annotated with verdicts.

    ``report`` is an assembled report dict (see :func:`assemble_report`);
    graphical verdicts drive the annotations.  Exogenous variables are
    never drawn.
    """
    marks: dict[str, dict] = {}
    if report is not None:
        for entry in report["nodes"]:
            marks[entry["name"]] = entry.get("incentives", {})
    decision = graph.decision
    lines = [f"digraph {_dot_quote(graph.name)} {{"]
    lines.append('  node [fontname="Helvetica"];')
    for n, kind in graph.nodes:
        attrs = [f"shape={_SHAPES[kind.value]}"]
        inc = marks.get(n, {})
        control = inc.get("control", {}).get("graphical", False)
        response = inc.get("response", {}).get("graphical", False)
        observation = inc.get("observation", {}).get("graphical", False)
        if control and response:
            attrs.append(f'style=filled fillcolor="{_BOTH_FILL}"')
        elif control:
            attrs.append(f'style=filled fillcolor="{_CONTROL_FILL}"')
        elif response:
            attrs.append(f'style=filled fillcolor="{_RESPONSE_FILL}"')
        if observation:
            attrs.append('peripheries=2 color="gray50"')
        lines.append(f"  {_dot_quote(n)} [{' '.join(attrs)}];")
    for a, b in graph.edges:
        style = " [style=dashed]" if b == decision else ""
        lines.append(f"  {_dot_quote(a)} -> {_dot_quote(b)}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"
