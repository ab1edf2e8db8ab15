"""Shared helpers for the test suites."""

from __future__ import annotations

import pathlib
from fractions import Fraction

from incent.graph import Cid, NodeKind
from incent.model import Domain, Intervention, Scim, StructFn
from incent.policy import Policy, optimal_policy_set, q_table
from incent.semantics import Evaluator, exo_support

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"
GOLDENS = CORPUS / "goldens"

C, D, U = NodeKind.CHANCE, NodeKind.DECISION, NodeKind.UTILITY


def read_corpus(name: str) -> str:
    return (CORPUS / name).read_text()


def greedy_policy(model: Scim) -> Policy:
    """One optimal policy: the first optimal decision in every context."""
    ops = optimal_policy_set(model)
    table = {
        (pa, e): sets[0]
        for pa, sets in ops.per_context.items()
        for e in ops.exo_values
    }
    return Policy(ops.decision, ops.parent_order, table, default=ops.decision_domain[0])


def chain_graph() -> Cid:
    """The canonical three-node chain: decision, mediator, utility."""
    return Cid([("D", D), ("X", C), ("U", U)], [("D", "X"), ("X", "U")], name="chain")


def assert_response_witness_guarantees(witness: Scim, x: str) -> None:
    """The two exact guarantees of a response witness.

    The optimal expected total utility is 1, and under the intervention
    zeroing the node, every policy's expected total utility is exactly 0.
    The for-all-policies claim is decided without enumerating policies:
    within each reachable decision context the interventional utility mass
    is zero for every decision value, so no choice rule can accumulate
    anything else.
    """
    from incent.witness import zero_value

    assert q_table(witness).max_value == 1
    ev = Evaluator(witness)
    iv = Intervention.do({x: zero_value(witness, x)})
    d = witness.decision
    parents = witness.graph.parents(d)
    per_context: dict = {}
    for exo, weight in exo_support(witness):
        for v in witness.domains[d].values:
            world = ev.run(exo, iv=iv, decision_value=v)
            ctx = (tuple(world[p] for p in parents), exo[d])
            bucket = per_context.setdefault(ctx, {})
            bucket[v] = bucket.get(v, Fraction(0)) + weight * witness.total_utility(world)
    for bucket in per_context.values():
        assert all(total == 0 for total in bucket.values())


def constant_utility_scim(graph: Cid) -> Scim:
    """Binary model whose utilities are identically zero."""
    import itertools

    domains, exo_domains, exo_dists, fns = {}, {}, {}, {}
    half = Fraction(1, 2)
    for n in graph.node_names:
        numeric = None
        if graph.kind(n) is U:
            numeric = {"v0": Fraction(0), "v1": Fraction(0)}
        domains[n] = Domain(("v0", "v1"), numeric)
        exo_domains[n] = Domain(("e0", "e1"))
        exo_dists[n] = {"e0": half, "e1": half}
    for n in graph.node_names:
        if n == graph.decision:
            continue
        parents = graph.parents(n)
        rows = {}
        for pv in itertools.product(("v0", "v1"), repeat=len(parents)):
            for e in ("e0", "e1"):
                rows[(pv, e)] = "v0"
        fns[n] = StructFn(n, parents, rows=rows)
    return Scim(graph, domains, exo_domains, exo_dists, fns, name=graph.name)
