"""Graphical incentive criteria on a bare diagram.

Each criterion answers whether the diagram is *compatible* with the
corresponding incentive: whether some model over this graph exhibits it.
The verdicts depend only on the graph; they never read a model.

Criteria implemented, for a single decision D with utility nodes U:

* control:      a directed path D ~> X ~> U exists;
* response:     some observation W in Pa(D) has X ~> W, D ~> U, and W
                d-connected to U given the rest of D's family;
* observation:  X d-connected to some utility descendant of D given the
                rest of D's family (positive value of information);
* intervention: a directed path X ~> U exists in the reduced graph
                (positive value of control).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from . import graph as g
from .graph import Cid, GraphError, PathWitness


class IncentiveKind(Enum):
    CONTROL = "control"
    RESPONSE = "response"
    OBSERVATION = "observation"
    INTERVENTION = "intervention"


KIND_ORDER = (
    IncentiveKind.CONTROL,
    IncentiveKind.RESPONSE,
    IncentiveKind.OBSERVATION,
    IncentiveKind.INTERVENTION,
)


@dataclass
class CriterionVerdict:
    """Outcome of one graphical criterion on one node.

    ``evidence`` is present exactly when the node is compatible; it holds
    the witnessing paths/d-connection.  ``reason`` explains a negative (or
    annotates a positive) verdict in one machine-readable phrase.
    """

    node: str
    kind: IncentiveKind
    compatible: bool
    evidence: Optional[dict] = None
    reason: Optional[str] = None


def _require_non_decision(graph: Cid, x: str) -> None:
    if graph.kind(x).value == "decision":
        raise GraphError(f"criterion does not apply to the decision node: {x}")


def control_criterion(graph: Cid, x: str) -> CriterionVerdict:
    """Compatible iff a directed decision-to-utility path passes through x."""
    _require_non_decision(graph, x)
    d = graph.decision
    for u in graph.utilities:
        path = g.find_directed_path(graph, d, u, via=x)
        if path is not None:
            return CriterionVerdict(
                x, IncentiveKind.CONTROL, True, evidence={"path": path}
            )
    return CriterionVerdict(
        x,
        IncentiveKind.CONTROL,
        False,
        reason="no directed path from the decision through the node to a utility",
    )


def response_criterion(graph: Cid, x: str) -> CriterionVerdict:
    """Compatible iff x reaches an observation the decision must rely on.

    Three conditions, all witnessed in the evidence: a directed path from x
    to an observed parent W, a directed path from the decision to a utility
    U, and an active path from W to U given the rest of the decision's
    family.
    """
    _require_non_decision(graph, x)
    d = graph.decision
    for w in graph.parents(d):
        to_w = g.find_directed_path(graph, x, w)
        if to_w is None:
            continue
        cond = frozenset(graph.family(d)) - {w}
        for u in graph.utilities:
            to_u = g.find_directed_path(graph, d, u)
            if to_u is None:
                continue
            active = g.find_active_path(graph, w, u, cond)
            if active is not None:
                return CriterionVerdict(
                    x,
                    IncentiveKind.RESPONSE,
                    True,
                    evidence={
                        "observation": w,
                        "utility": u,
                        "path_to_observation": to_w,
                        "path_to_utility": to_u,
                        "active_path": active,
                    },
                )
    return CriterionVerdict(
        x,
        IncentiveKind.RESPONSE,
        False,
        reason="no observed parent both reachable from the node and relevant to a utility",
    )


def observation_criterion(graph: Cid, x: str) -> CriterionVerdict:
    """Compatible iff x is d-connected to a utility downstream of the decision.

    The conditioning set is the decision's family minus x itself.  The
    criterion is evaluated for any non-decision node; for nodes outside
    Pa(D) a positive verdict means observing them *would* be valuable, and
    the verdict carries the note that they are not currently observed.
    """
    _require_non_decision(graph, x)
    d = graph.decision
    observed = x in graph.parents(d)
    note = None if observed else "not an observed parent of the decision"
    cond = frozenset(graph.family(d)) - {x}
    targets = [u for u in graph.utilities if u in graph.descendants(d) and u != x]
    for u in targets:
        active = g.find_active_path(graph, x, u, cond)
        if active is not None:
            return CriterionVerdict(
                x,
                IncentiveKind.OBSERVATION,
                True,
                evidence={"utility": u, "active_path": active},
                reason=note,
            )
    return CriterionVerdict(
        x,
        IncentiveKind.OBSERVATION,
        False,
        reason=note or "d-separated from every utility descendant of the decision",
    )


def intervention_criterion(graph: Cid, x: str) -> CriterionVerdict:
    """Compatible iff x reaches a utility in the reduced graph."""
    _require_non_decision(graph, x)
    reduced = g.reduced_graph(graph)
    removed = [e for e in graph.edges if e not in set(reduced.edges)]
    for u in reduced.utilities:
        path = g.find_directed_path(reduced, x, u)
        if path is not None:
            return CriterionVerdict(
                x,
                IncentiveKind.INTERVENTION,
                True,
                evidence={
                    "path": path,
                    "removed_edges": removed,
                },
            )
    return CriterionVerdict(
        x,
        IncentiveKind.INTERVENTION,
        False,
        reason="no directed path to a utility in the reduced graph",
    )


_CRITERIA = {
    IncentiveKind.CONTROL: control_criterion,
    IncentiveKind.RESPONSE: response_criterion,
    IncentiveKind.OBSERVATION: observation_criterion,
    IncentiveKind.INTERVENTION: intervention_criterion,
}


def criterion(graph: Cid, x: str, kind: IncentiveKind) -> CriterionVerdict:
    return _CRITERIA[kind](graph, x)


def full_report(graph: Cid) -> list[CriterionVerdict]:
    """All four criteria for every non-decision node, in declaration order."""
    d = graph.decision
    out: list[CriterionVerdict] = []
    for n in graph.node_names:
        if n == d:
            continue
        for kind in KIND_ORDER:
            out.append(_CRITERIA[kind](graph, n))
    return out
