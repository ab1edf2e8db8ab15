"""Counterfactual fairness and its equivalence with response incentives."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from incent.dsl import parse_model
from incent.fairness import (
    counterfactual_decision_distribution,
    exists_fair_optimal_policy,
    is_counterfactually_fair,
    minimal_support_policy,
)
from incent.incentives import has_response_incentive
from incent.model import ModelError
from incent.policy import constant_policy, enumerate_optimal_policies, is_optimal
from incent.semantics import Evaluator, exo_support
from incent.witness import build_response_witness

from generators import fig_graphs, random_cid, random_policy, random_scim
from helpers import chain_graph, constant_utility_scim, greedy_policy, read_corpus
from oracles import policy_space_size


@pytest.fixture(scope="module")
def accident_scim():
    return parse_model(read_corpus("accident.scim"), "accident.scim")


@pytest.fixture(scope="module")
def race_witness():
    return build_response_witness(fig_graphs()["accident"], "Race")


# --- counterfactual distributions ---------------------------------------------------


def test_unchanged_intervention_matches_observation(accident_scim):
    rng = random.Random(7)
    model = accident_scim
    ev = Evaluator(model)
    parents = model.graph.parents(model.decision)
    for _ in range(3):
        policy = random_policy(rng, model)
        seen = {}
        for exo, weight in exo_support(model):
            world = ev.run(exo, policy=policy)
            key = (tuple(world[p] for p in parents), world["Race"])
            seen.setdefault(key, {})
            seen[key][world[model.decision]] = (
                seen[key].get(world[model.decision], Fraction(0)) + weight
            )
        for (pa, a), dist in seen.items():
            mass = sum(dist.values())
            got = counterfactual_decision_distribution(
                model, policy, dict(zip(parents, pa)), "Race", a, a
            )
            for dv in model.domains[model.decision].values:
                assert got[dv] == dist.get(dv, Fraction(0)) / mass


def test_constant_policy_gives_point_mass(accident_scim):
    policy = constant_policy(accident_scim, "v1")
    parents = accident_scim.graph.parents(accident_scim.decision)
    context = dict(zip(parents, ("v0", "v0")))
    got = counterfactual_decision_distribution(
        accident_scim, policy, context, "Race", "v0", "v1"
    )
    assert got == {"v0": Fraction(0), "v1": Fraction(1)}


def test_zero_probability_conditioning_rejected(race_witness):
    policy = greedy_policy(race_witness)
    parents = race_witness.graph.parents(race_witness.decision)
    impossible = dict.fromkeys(parents, race_witness.domains[parents[0]].values[0])
    with pytest.raises(ModelError):
        counterfactual_decision_distribution(
            race_witness, policy, impossible, "Race",
            race_witness.domains["Race"].values[0],
            race_witness.domains["Race"].values[1],
        )


# --- policy-level fairness -------------------------------------------------------------


def test_constant_policies_are_fair(accident_scim):
    for v in ("v0", "v1"):
        verdict = is_counterfactually_fair(
            accident_scim, constant_policy(accident_scim, v), "Race"
        )
        assert verdict.fair is True


def test_witness_optimal_policy_is_unfair(race_witness):
    policy = greedy_policy(race_witness)
    verdict = is_counterfactually_fair(race_witness, policy, "Race")
    assert verdict.fair is False
    violation = verdict.violation
    assert violation["counterfactual_probability"] != violation["observational_probability"]


def test_upstream_independent_attribute_is_always_fair():
    rng = random.Random(17)
    checked = 0
    while checked < 8:
        g = random_cid(rng, max_nodes=5)
        model = random_scim(rng, g, max_dom=2, max_exo=2)
        d = g.decision
        for a in g.node_names:
            if a == d or d in g.descendants(a):
                continue
            checked += 1
            for _ in range(2):
                policy = random_policy(rng, model)
                assert is_counterfactually_fair(model, policy, a).fair is True


# --- model-level verdicts ----------------------------------------------------------------


def test_no_fair_optimal_policy_on_witness(race_witness):
    verdict = exists_fair_optimal_policy(race_witness, "Race")
    assert verdict.exists_fair_optimal is False
    assert verdict.response_verdict.present is True


def test_fair_optimal_policy_for_age(accident_scim):
    verdict = exists_fair_optimal_policy(accident_scim, "Age")
    assert verdict.exists_fair_optimal is True
    assert is_optimal(accident_scim, verdict.fair_policy)
    assert is_counterfactually_fair(accident_scim, verdict.fair_policy, "Age").fair


def test_constant_utilities_admit_fair_optimum():
    model = constant_utility_scim(chain_graph())
    verdict = exists_fair_optimal_policy(model, "X")
    assert verdict.exists_fair_optimal is True


# --- the equivalence, exhaustively ------------------------------------------------------


def test_equivalence_with_exhaustive_search_small():
    rng = random.Random(4242)
    done = 0
    while done < 15:
        g = random_cid(rng, max_nodes=4)
        model = random_scim(rng, g, max_dom=2, max_exo=2)
        if policy_space_size(model) > 256:
            continue
        attribute = rng.choice([n for n in g.node_names if n != g.decision])
        done += 1
        exists = any(
            is_counterfactually_fair(model, pi, attribute).fair
            for pi in enumerate_optimal_policies(model, cap=4096)
        )
        assert exists == (not has_response_incentive(model, attribute).present)


def test_minimal_support_construction_preserves_fairness_and_optimality():
    rng = random.Random(2121)
    done = 0
    while done < 10:
        g = random_cid(rng, max_nodes=4)
        model = random_scim(rng, g, max_dom=2, max_exo=2)
        if policy_space_size(model) > 128:
            continue
        attribute = rng.choice([n for n in g.node_names if n != g.decision])
        fair_opt = [
            pi
            for pi in enumerate_optimal_policies(model, cap=4096)
            if is_counterfactually_fair(model, pi, attribute).fair
        ]
        if not fair_opt:
            continue
        done += 1
        for pi in fair_opt[:4]:
            flat = minimal_support_policy(model, pi)
            assert is_optimal(model, flat)
            assert is_counterfactually_fair(model, flat, attribute).fair
