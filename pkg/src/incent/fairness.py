"""Counterfactual fairness of policies and its link to response incentives.

A policy is counterfactually fair with respect to a protected attribute
when, in every positive-probability observed situation, intervening on the
attribute leaves the counterfactual distribution of the decision
unchanged.  Counterfactuals follow the abduct-then-act recipe: condition
the exogenous variables on the observation, then apply the intervention.

The model-level question "does any optimal policy treat the attribute
fairly?" coincides exactly with the absence of a response incentive on the
attribute.  Both directions are constructive here: absence of the
incentive yields a non-reacting optimal policy, which is fair; and any
fair optimal policy can be flattened into a non-reacting one by always
playing the minimal decision in its conditional support.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .incentives import SemanticVerdict, has_response_incentive
from .model import Intervention, ModelError, Scim, Value
from .policy import ENUMERABLE_CONTEXTS, CapExceeded, Policy, is_optimal
from .semantics import Evaluator, exo_support


@dataclass
class FairnessVerdict:
    """Either a policy-level or a model-level fairness outcome.

    Policy level: ``fair`` plus, when unfair, the violating tuple of
    (decision, context, observed attribute, intervened attribute) with the
    two exact probabilities.  Model level: ``exists_fair_optimal`` (None
    when undecided) plus either a fair optimal policy or the
    response-incentive evidence that rules one out.
    """

    attribute: str
    fair: Optional[bool] = None
    violation: Optional[dict] = None
    exists_fair_optimal: Optional[bool] = None
    fair_policy: Optional[Policy] = None
    response_verdict: Optional[SemanticVerdict] = None
    reason: Optional[str] = None


def _observed_groups(model: Scim, policy: Policy, attribute: str):
    """Group positive-probability settings by (decision context, attribute).

    Returns a list of ``(pa, a, mass, members)`` entries in deterministic
    order, where members are ``(exo, weight, natural world)`` triples.  The
    natural evaluation uses the policy: the attribute may descend from the
    decision.
    """
    ev = Evaluator(model)
    d = model.decision
    parent_order = model.graph.parents(d)
    groups: dict[tuple, list] = {}
    for exo, weight in exo_support(model):
        world = ev.run(exo, policy=policy)
        pa = tuple(world[p] for p in parent_order)
        groups.setdefault((pa, world[attribute]), []).append((exo, weight, world))

    pdoms = [model.domains[p] for p in parent_order]
    adom = model.domains[attribute]

    def key(item):
        (pa, a), _ = item
        return tuple(dom.index(v) for dom, v in zip(pdoms, pa)) + (adom.index(a),)

    out = []
    for (pa, a), members in sorted(groups.items(), key=key):
        mass = sum((w for _, w, _ in members), Fraction(0))
        out.append((pa, a, mass, members))
    return out


def counterfactual_decision_distribution(
    model: Scim,
    policy: Policy,
    context: dict[str, Value],
    attribute: str,
    observed: Value,
    intervened: Value,
) -> dict[Value, Fraction]:
    """Distribution of the decision had the attribute been ``intervened``.

    Abduct: condition the exogenous variables on seeing decision context
    ``context`` and attribute value ``observed``.  Act: force the
    attribute to ``intervened`` and read off the decision in each
    posterior setting, mixed by posterior weight.  Conditioning on a
    zero-probability observation is an error.
    """
    ev = Evaluator(model)
    d = model.decision
    parent_order = model.graph.parents(d)
    pa = tuple(context[p] for p in parent_order)
    posterior = []
    mass = Fraction(0)
    for exo, weight in exo_support(model):
        world = ev.run(exo, policy=policy)
        if tuple(world[p] for p in parent_order) == pa and world[attribute] == observed:
            posterior.append((exo, weight))
            mass += weight
    if mass == 0:
        raise ModelError("conditioning on a zero-probability observation")
    dist: dict[Value, Fraction] = {v: Fraction(0) for v in model.domains[d].values}
    iv = Intervention.do({attribute: intervened})
    for exo, weight in posterior:
        world = ev.run(exo, policy=policy, iv=iv)
        dist[world[d]] += weight
    return {v: p / mass for v, p in dist.items()}


def is_counterfactually_fair(
    model: Scim, policy: Policy, attribute: str
) -> FairnessVerdict:
    """Exhaustive fairness check of one policy.

    Sweeps every positive-probability (context, attribute) observation,
    every intervened attribute value, and every decision, comparing the
    counterfactual and observational probabilities exactly.  When the
    attribute is itself observed by the decision the pair (context,
    attribute) is a single joint observation, so nothing is double
    counted.
    """
    if attribute == model.decision:
        raise ModelError("the protected attribute cannot be the decision")
    ev = Evaluator(model)
    d = model.decision
    ddom = model.domains[d].values
    for pa, a, mass, members in _observed_groups(model, policy, attribute):
        observational: dict[Value, Fraction] = {v: Fraction(0) for v in ddom}
        for _, weight, world in members:
            observational[world[d]] += weight
        for a_prime in model.domains[attribute].values:
            iv = Intervention.do({attribute: a_prime})
            counterfactual: dict[Value, Fraction] = {v: Fraction(0) for v in ddom}
            for exo, weight, _ in members:
                counterfactual[ev.run(exo, policy=policy, iv=iv)[d]] += weight
            for dv in ddom:
                if counterfactual[dv] != observational[dv]:
                    parent_order = model.graph.parents(d)
                    return FairnessVerdict(
                        attribute=attribute,
                        fair=False,
                        violation={
                            "decision": dv,
                            "context": dict(zip(parent_order, pa)),
                            "observed": a,
                            "intervened": a_prime,
                            "counterfactual_probability": counterfactual[dv] / mass,
                            "observational_probability": observational[dv] / mass,
                        },
                    )
    return FairnessVerdict(attribute=attribute, fair=True)


def exists_fair_optimal_policy(
    model: Scim, attribute: str, cap: int = 4096
) -> FairnessVerdict:
    """Whether some optimal policy is counterfactually fair to the attribute.

    Decided as the negation of the response incentive on the attribute.
    When a fair optimal policy exists the non-reacting policy from the
    response check is returned, after verifying both its optimality and
    its fairness (the constructive cross-check); when none exists the
    response-incentive evidence explains why.
    """
    rv = has_response_incentive(model, attribute, cap=cap)
    if rv.present is None:
        return FairnessVerdict(
            attribute=attribute, exists_fair_optimal=None, reason=rv.reason
        )
    if rv.present:
        return FairnessVerdict(
            attribute=attribute,
            exists_fair_optimal=False,
            response_verdict=rv,
            reason="every optimal policy responds to the attribute",
        )
    fair_policy = rv.refuting_policy
    check = is_counterfactually_fair(model, fair_policy, attribute)
    if not check.fair or not is_optimal(model, fair_policy):
        raise AssertionError(
            "non-reacting optimal policy failed the fairness cross-check"
        )
    return FairnessVerdict(
        attribute=attribute,
        exists_fair_optimal=True,
        fair_policy=fair_policy,
        response_verdict=rv,
    )


def minimal_support_policy(model: Scim, policy: Policy) -> Policy:
    """Flatten ``policy`` to the minimal decision in its conditional support.

    For every decision context the new policy constantly plays the least
    decision (in domain order) that ``policy`` plays there with positive
    noise probability.  Applied to a fair optimal policy this yields a
    policy that is optimal, fair, and never reacts to interventions.
    """
    d = model.decision
    parent_order = model.graph.parents(d)
    ddom = model.domains[d].values
    rank = {v: i for i, v in enumerate(ddom)}
    positive_exo = tuple(
        e for e in model.exo_domains[d].values if model.exo_dists[d][e] > 0
    )
    parent_domains = [model.domains[p].values for p in parent_order]
    total = len(model.exo_domains[d].values)
    for vals in parent_domains:
        total *= len(vals)
    if total > ENUMERABLE_CONTEXTS:
        raise CapExceeded(total, ENUMERABLE_CONTEXTS)
    table = {}
    for pa in itertools.product(*parent_domains):
        support = {policy(pa, e) for e in positive_exo}
        choice = min(support, key=rank.__getitem__)
        for e in model.exo_domains[d].values:
            table[(pa, e)] = choice
    return Policy(d, parent_order, table)
