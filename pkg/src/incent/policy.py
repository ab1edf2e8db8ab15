"""Policies, action values, and the complete set of optimal policies.

The expected value of any policy factorizes over decision contexts: the
probability of reaching a context does not depend on the policy (parents of
the decision are never its descendants), and the decision's private noise
is read only by the policy itself.  Optimality is therefore a per-context
property, which lets the full family of optimal policies be represented as
a product of per-context optimal decision sets instead of an explicit
enumeration.  The explicit enumeration is still available (capped) because
several incentive definitions quantify over it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .model import Intervention, ModelError, Scim, Value
from .semantics import Evaluator, exo_assignments, expected_total_utility


def format_count(n: int) -> str:
    """Exact decimal for reasonable counts, order of magnitude beyond that.

    Counts of optimal policies grow doubly fast (product domains times
    contexts), easily past the interpreter's int-to-string limit; reports
    only ever need the magnitude then.
    """
    if n.bit_length() <= 256:
        return str(n)
    import math

    digits = int(n.bit_length() * math.log10(2))
    return f"~10^{digits}"


class CapExceeded(Exception):
    """The requested enumeration is larger than the configured cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"cap exceeded: {format_count(count)} > {cap}")
        self.count = count
        self.cap = cap


@dataclass
class Policy:
    """A total table from (decision context, decision noise) to a decision.

    ``table`` holds explicit rows keyed by ``(parent-values tuple,
    exogenous value)``; ``default`` fills every unlisted context, which
    keeps policies small when almost all contexts are unreachable.
    """

    decision: str
    parent_order: tuple[str, ...]
    table: dict[tuple[tuple[Value, ...], Value], Value] = field(default_factory=dict)
    default: Optional[Value] = None

    def __call__(self, parent_values: tuple[Value, ...], exo_value: Value) -> Value:
        key = (parent_values, exo_value)
        if key in self.table:
            return self.table[key]
        if self.default is None:
            raise ModelError(f"policy has no entry for context {key}")
        return self.default

    def decide(self, assignment: dict[str, Value], exo_value: Value) -> Value:
        pvals = tuple(assignment[p] for p in self.parent_order)
        return self(pvals, exo_value)


def constant_policy(model: Scim, value: Value) -> Policy:
    d = model.decision
    return Policy(d, model.graph.parents(d), {}, default=value)


@dataclass
class QTable:
    """Exact action values per positive-probability decision context.

    ``contexts`` maps each attained parent assignment to its probability
    and to ``q[d]``, the conditional expected total utility of taking
    decision ``d`` in that context.  Context probabilities are independent
    of the policy, so the table characterizes every policy's value:
    E[U] = sum over contexts of Pr(context) * q[chosen decision].
    """

    decision: str
    parent_order: tuple[str, ...]
    decision_domain: tuple[Value, ...]
    exo_values: tuple[Value, ...]
    exo_dist: dict[Value, Fraction]
    contexts: dict[tuple[Value, ...], dict] = field(default_factory=dict)

    @property
    def max_value(self) -> Fraction:
        """The optimal expected total utility."""
        total = Fraction(0)
        for info in self.contexts.values():
            total += info["prob"] * max(info["q"].values())
        return total

    def policy_value(self, policy: Policy) -> Fraction:
        """E[U] under ``policy``, via the context decomposition."""
        total = Fraction(0)
        for pa, info in self.contexts.items():
            for e in self.exo_values:
                pe = self.exo_dist[e]
                if pe == 0:
                    continue
                total += info["prob"] * pe * info["q"][policy(pa, e)]
        return total


def q_table(model: Scim, iv: Optional[Intervention] = None) -> QTable:
    """Enumerate context probabilities and per-decision action values.

    Only contexts with positive probability appear; all other contexts are
    unreachable and every decision is vacuously optimal there.  ``iv``
    permits computing the table inside an intervened model (used by the
    value-of-control check); the decision itself must not be intervened.
    """
    d = model.decision
    if iv is not None and (d in iv.hard or d in iv.soft):
        raise ModelError("q_table: the decision node must stay free")
    ev = Evaluator(model)
    parent_order = model.graph.parents(d)
    ddom = model.domains[d].values
    sums: dict[tuple[Value, ...], dict[Value, Fraction]] = {}
    mass: dict[tuple[Value, ...], Fraction] = {}
    for exo, weight in exo_assignments(model):
        if weight == 0:
            continue
        worlds = {v: ev.run(exo, iv=iv, decision_value=v) for v in ddom}
        pa = tuple(worlds[ddom[0]][p] for p in parent_order)
        mass[pa] = mass.get(pa, Fraction(0)) + weight
        acc = sums.setdefault(pa, {v: Fraction(0) for v in ddom})
        for v in ddom:
            acc[v] += weight * model.total_utility(worlds[v])
    contexts = {}
    for pa in sums:
        contexts[pa] = {
            "prob": mass[pa],
            "q": {v: sums[pa][v] / mass[pa] for v in ddom},
        }
    return QTable(
        decision=d,
        parent_order=parent_order,
        decision_domain=ddom,
        exo_values=model.exo_domains[d].values,
        exo_dist=dict(model.exo_dists[d]),
        contexts=contexts,
    )


@dataclass
class OptimalPolicySet:
    """Per-context optimal decision sets, compactly covering all optima.

    A policy is optimal iff it picks from ``per_context`` at every
    positive-probability context.  Contexts with probability zero (either
    an unattained parent assignment or a zero-probability noise value) are
    free: any decision is allowed there.  The decision noise never affects
    payoffs, so contexts sharing a parent assignment share optimal sets.
    """

    decision: str
    parent_order: tuple[Value, ...]
    parent_domains: tuple[tuple[Value, ...], ...]
    decision_domain: tuple[Value, ...]
    exo_values: tuple[Value, ...]
    positive_exo: tuple[Value, ...]
    per_context: dict[tuple[Value, ...], tuple[Value, ...]]
    max_value: Fraction

    def optimal_set(self, pa: tuple[Value, ...], exo_value: Value) -> tuple[Value, ...]:
        if exo_value not in self.positive_exo or pa not in self.per_context:
            return self.decision_domain
        return self.per_context[pa]

    def is_free(self, pa: tuple[Value, ...], exo_value: Value) -> bool:
        return exo_value not in self.positive_exo or pa not in self.per_context

    def total_context_count(self) -> int:
        total = len(self.exo_values)
        for dom in self.parent_domains:
            total *= len(dom)
        return total

    def policy_count(self) -> int:
        """Exact number of optimal policies (may be astronomically large)."""
        constrained = 1
        for sets in self.per_context.values():
            constrained *= len(sets) ** len(self.positive_exo)
        free = self.total_context_count() - len(self.per_context) * len(self.positive_exo)
        return constrained * len(self.decision_domain) ** free

    def admits(self, policy: Policy) -> bool:
        """Membership test: does ``policy`` pick optimally everywhere it matters?"""
        for pa, sets in self.per_context.items():
            for e in self.positive_exo:
                if policy(pa, e) not in sets:
                    return False
        return True


def optimal_policy_set(model: Scim) -> OptimalPolicySet:
    """Per-context argmax of the action-value table."""
    qt = q_table(model)
    d = model.decision
    per_context = {}
    for pa, info in qt.contexts.items():
        best = max(info["q"].values())
        per_context[pa] = tuple(v for v in qt.decision_domain if info["q"][v] == best)
    return OptimalPolicySet(
        decision=d,
        parent_order=qt.parent_order,
        parent_domains=tuple(model.domains[p].values for p in qt.parent_order),
        decision_domain=qt.decision_domain,
        exo_values=qt.exo_values,
        positive_exo=tuple(e for e in qt.exo_values if qt.exo_dist[e] > 0),
        per_context=per_context,
        max_value=qt.max_value,
    )


# Enumerating policies requires materializing one table row per context, so
# even a within-cap policy count is refused when the raw context space is
# unmanageable (e.g. product domains from witness constructions).
ENUMERABLE_CONTEXTS = 200_000


def enumerate_optimal_policies(model: Scim, cap: int = 4096) -> Iterator[Policy]:
    """Yield exactly the optimal policies, deterministically ordered.

    Contexts are ordered by parent-domain product order then noise order;
    choices within a context follow the decision domain order.  Raises
    :class:`CapExceeded` with the exact count when more than ``cap``
    optimal policies exist.
    """
    ops = optimal_policy_set(model)
    count = ops.policy_count()
    if count > cap:
        raise CapExceeded(count, cap)
    if ops.total_context_count() > ENUMERABLE_CONTEXTS:
        raise CapExceeded(ops.total_context_count(), ENUMERABLE_CONTEXTS)
    contexts = [
        (pa, e)
        for pa in itertools.product(*ops.parent_domains)
        for e in ops.exo_values
    ]
    choice_sets = [ops.optimal_set(pa, e) for pa, e in contexts]
    for combo in itertools.product(*choice_sets):
        yield Policy(
            decision=ops.decision,
            parent_order=ops.parent_order,
            table=dict(zip(contexts, combo)),
        )


def is_optimal(model: Scim, policy: Policy) -> bool:
    """Whether ``policy`` attains the maximum expected total utility.

    Decided two ways and cross-checked: by exact comparison of the
    policy's expected utility against the optimum, and by per-context
    membership in the optimal decision sets.
    """
    ops = optimal_policy_set(model)
    by_value = expected_total_utility(model, policy) == ops.max_value
    by_membership = ops.admits(policy)
    if by_value != by_membership:
        raise AssertionError(
            "optimality routes disagree: value says "
            f"{by_value}, membership says {by_membership}"
        )
    return by_value
