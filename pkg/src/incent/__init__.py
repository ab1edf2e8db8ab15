"""Exact incentive analysis for single-decision causal influence diagrams.

The package decides, both graphically and by exact expected-utility
semantics, which variables an optimal decision-maker has an incentive to
control or respond to, constructs witness models for the graphical
criteria, and audits counterfactual fairness.
"""

from .graph import Cid, NodeKind, PathWitness, d_separated, find_active_path, \
    find_directed_path, intercepts, reduced_graph, relatives, validate
from .model import Domain, Intervention, Scim, StructFn, validate_scim
from .semantics import evaluate, expected_total_utility, joint_probability, \
    nested_potential_response, potential_response
from .policy import Policy, enumerate_optimal_policies, is_optimal, \
    optimal_policy_set, q_table
from .criteria import IncentiveKind, control_criterion, full_report, \
    intervention_criterion, observation_criterion, response_criterion
from .incentives import has_control_incentive, has_intervention_incentive, \
    has_observation_incentive, has_response_incentive
from .witness import build_control_witness, build_response_witness
from .fairness import counterfactual_decision_distribution, \
    exists_fair_optimal_policy, is_counterfactually_fair
from .dsl import ParseError, ParseFailure, parse_model, serialize_model
from .export import assemble_report, export_dot, export_report_json

__version__ = "0.1.0"
