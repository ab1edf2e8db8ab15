"""Exact executable semantics for structural decision models.

Everything here is enumeration over the finite exogenous space with
rational weights: deterministic evaluation, hard/soft interventions,
potential responses, nested potential responses, and exact joint and
conditional quantities.  No sampling, no floating point, no tolerance.

Enumeration order over exogenous assignments is lexicographic by node
declaration order and then by domain order, which makes every reported
quantity reproducible.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Optional

from .model import Intervention, ModelError, Scim, Value

# A policy-like callable: (parent-values tuple ordered by declaration,
# decision exogenous value) -> decision value.  The policy_engine module
# provides the table-backed implementation.
PolicyFn = Callable[[tuple[Value, ...], Value], Value]


class Evaluator:
    """Caches topological structure for repeated evaluations of one model.

    The model is treated as immutable; building an evaluator is cheap and
    all of its methods are pure, so instances can be shared freely.
    """

    def __init__(self, model: Scim):
        self.model = model
        g = model.graph
        self.order = g.topological_order()
        self.names = g.node_names
        self.decision = g.decision
        self.parents = {n: g.parents(n) for n in self.names}
        self.utilities = g.utilities

    def run(
        self,
        exo: Mapping[str, Value],
        policy: Optional[PolicyFn] = None,
        iv: Optional[Intervention] = None,
        decision_value: Optional[Value] = None,
    ) -> dict[str, Value]:
        """Evaluate every node under ``exo``.

        Hard-intervened nodes take their fixed value ignoring parents and
        noise; soft-intervened nodes use their replacement table on the
        current parent values (ignoring noise).  The decision resolves, in
        order of precedence: hard intervention, ``decision_value``,
        ``policy``.
        """
        hard = iv.hard if iv is not None else {}
        soft = iv.soft if iv is not None else {}
        model = self.model
        out: dict[str, Value] = {}
        for n in self.order:
            if n in hard:
                out[n] = hard[n]
                continue
            pvals = tuple(out[p] for p in self.parents[n])
            if n in soft:
                try:
                    out[n] = soft[n][pvals]
                except KeyError:
                    raise ModelError(
                        f"soft intervention table on {n} missing row {pvals}"
                    ) from None
            elif n == self.decision:
                if decision_value is not None:
                    out[n] = decision_value
                elif policy is not None:
                    out[n] = policy(pvals, exo[n])
                else:
                    raise ModelError("no policy or intervention supplies the decision")
            else:
                out[n] = model.fns[n].value(pvals, exo[n])
        return out


def exo_assignments(model: Scim) -> Iterator[tuple[dict[str, Value], Fraction]]:
    """All total exogenous assignments with their exact probabilities.

    Zero-probability assignments are included (their weight is 0) so that
    callers can choose between support-only and all-settings readings.
    """
    names = model.graph.node_names
    value_lists = [model.exo_domains[n].values for n in names]
    dists = [model.exo_dists[n] for n in names]
    for combo in itertools.product(*value_lists):
        weight = Fraction(1)
        for dist, v in zip(dists, combo):
            weight *= dist[v]
        yield dict(zip(names, combo)), weight


def exo_support(model: Scim) -> list[tuple[dict[str, Value], Fraction]]:
    return [(e, w) for e, w in exo_assignments(model) if w > 0]


def evaluate(
    model: Scim,
    policy: Optional[PolicyFn],
    exo: Mapping[str, Value],
    iv: Optional[Intervention] = None,
) -> dict[str, Value]:
    """Total endogenous assignment reached from ``exo`` under ``iv``."""
    return Evaluator(model).run(exo, policy=policy, iv=iv)


def potential_response(
    model: Scim,
    policy: Optional[PolicyFn],
    exo: Mapping[str, Value],
    iv: Mapping[str, Value],
    query: Optional[set[str]] = None,
) -> dict[str, Value]:
    """Values the query nodes would take under the hard intervention ``iv``.

    With an empty intervention this coincides with plain evaluation.
    """
    full = Evaluator(model).run(exo, policy=policy, iv=Intervention.do(iv))
    if query is None:
        return full
    return {n: full[n] for n in query}


def nested_potential_response(
    model: Scim,
    policy: Optional[PolicyFn],
    exo: Mapping[str, Value],
    inner: tuple[str, Value],
    query: Optional[set[str]] = None,
) -> dict[str, Value]:
    """Query values when ``inner`` node is forced to its decision response.

    ``inner`` is a pair ``(node, d)``: first compute the value the node
    would take were the decision set to ``d``, then evaluate the model with
    the node pinned to that value while everything else (including the
    decision, via the policy) follows its natural mechanism.
    """
    node, d = inner
    ev = Evaluator(model)
    under_d = ev.run(exo, policy=policy, iv=Intervention.do({ev.decision: d}))
    forced = ev.run(exo, policy=policy, iv=Intervention.do({node: under_d[node]}))
    if query is None:
        return forced
    return {n: forced[n] for n in query}


def _extends(assignment: Mapping[str, Value], event: Mapping[str, Value]) -> bool:
    return all(assignment.get(n) == v for n, v in event.items())


def joint_probability(
    model: Scim,
    policy: Optional[PolicyFn],
    event: Mapping[str, Value],
    iv: Optional[Intervention] = None,
) -> Fraction:
    """Exact probability that evaluation extends ``event`` under ``iv``."""
    ev = Evaluator(model)
    total = Fraction(0)
    for exo, weight in exo_assignments(model):
        if weight == 0:
            continue
        if _extends(ev.run(exo, policy=policy, iv=iv), event):
            total += weight
    return total


def expected_total_utility(
    model: Scim,
    policy: Optional[PolicyFn],
    given: Optional[Mapping[str, Value]] = None,
    iv: Optional[Intervention] = None,
) -> Optional[Fraction]:
    """E[sum of utilities | given] under ``iv``, or None when undefined.

    Conditioning applies within the intervened model: the expectation runs
    over exogenous settings whose post-intervention evaluation extends
    ``given``.  When that event has probability zero the conditional is
    undefined and None is returned; callers that sweep decision contexts
    skip such contexts rather than fail.
    """
    ev = Evaluator(model)
    event = dict(given) if given else {}
    mass = Fraction(0)
    acc = Fraction(0)
    for exo, weight in exo_assignments(model):
        if weight == 0:
            continue
        world = ev.run(exo, policy=policy, iv=iv)
        if _extends(world, event):
            mass += weight
            acc += weight * model.total_utility(world)
    if mass == 0:
        return None
    return acc / mass
