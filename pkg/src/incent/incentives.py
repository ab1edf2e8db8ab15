"""Expected-utility incentive checks on a concrete model.

Every check decides a definition of the form "for every optimal policy
there exists ...".  Enumerating optimal policies explicitly is exponential,
but optimality is a per-context property (see :mod:`incent.policy`), and
each existential witness below only constrains the policy on a small,
identifiable part of its table.  The deciders therefore work on that
product structure directly and stay exact:

* control:  whether a decision context can route influence through the
  node is decided per context from the policy's restriction to it;
* response: a policy ignores interventions on the node iff it is constant
  across classes of contexts linked by those interventions, so a
  union-find over linked contexts decides the universal quantifier;
* observation: value of information, from the action-value table;
* intervention: value of control, by sweeping all soft replacements.

The explicit-enumeration reading is kept as a test oracle and the two are
cross-checked on small models.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .criteria import IncentiveKind
from .model import Intervention, ModelError, Scim, Value
from .policy import Policy, QTable, q_table
from .semantics import Evaluator, exo_assignments


@dataclass
class SemanticVerdict:
    """Outcome of one expected-utility incentive check.

    ``present`` is True/False when decided and None when the check hit its
    cap; ``reason`` then says why.  A positive verdict carries evidence for
    the forcing context/intervention; a negative one carries one optimal
    policy that defeats the definition, when the check produces one.
    """

    node: str
    kind: IncentiveKind
    present: Optional[bool]
    reason: Optional[str] = None
    evidence: dict = field(default_factory=dict)
    refuting_policy: Optional[Policy] = None
    details: dict = field(default_factory=dict)


def _require_checkable(model: Scim, x: str) -> None:
    if x not in model.graph:
        raise ModelError(f"unknown node: {x}")
    if x == model.decision:
        raise ModelError("incentive checks do not apply to the decision node")


class _Enumeration:
    """Shared per-model enumeration: worlds under each forced decision."""

    def __init__(self, model: Scim):
        self.model = model
        self.ev = Evaluator(model)
        self.decision = model.decision
        self.parent_order = model.graph.parents(self.decision)
        self.ddom = model.domains[self.decision].values
        self.exo_d_values = model.exo_domains[self.decision].values
        self.exo_d_dist = model.exo_dists[self.decision]
        self.positive_exo_d = tuple(
            e for e in self.exo_d_values if self.exo_d_dist[e] > 0
        )
        self.support: list[tuple[dict, Fraction]] = []
        self.worlds: list[dict[Value, dict]] = []
        for exo, weight in exo_assignments(model):
            if weight == 0:
                continue
            self.support.append((exo, weight))
            self.worlds.append(
                {v: self.ev.run(exo, decision_value=v) for v in self.ddom}
            )

    def context_of(self, world: dict) -> tuple[Value, ...]:
        return tuple(world[p] for p in self.parent_order)

    def optimal_sets(self) -> tuple[dict, dict]:
        """Per attained context: optimal decisions and unnormalized mass."""
        qnum: dict[tuple, dict[Value, Fraction]] = {}
        mass: dict[tuple, Fraction] = {}
        for (exo, weight), worlds in zip(self.support, self.worlds):
            pa = self.context_of(worlds[self.ddom[0]])
            mass[pa] = mass.get(pa, Fraction(0)) + weight
            acc = qnum.setdefault(pa, {v: Fraction(0) for v in self.ddom})
            for v in self.ddom:
                acc[v] += weight * self.model.total_utility(worlds[v])
        opt = {}
        for pa, acc in qnum.items():
            best = max(acc.values())
            opt[pa] = tuple(v for v in self.ddom if acc[v] == best)
        return opt, mass


def has_control_incentive(model: Scim, x: str, cap: int = 4096) -> SemanticVerdict:
    """Does every optimal policy route useful influence through ``x``?

    Present iff for every optimal policy there is a positive-probability
    decision context and an alternative decision ``d`` whose influence,
    propagated only through ``x``, changes the conditional expected total
    utility.  The comparison is exact.

    The check is per context: the two conditional expectations depend on
    the policy only through its restriction to that context, so a context
    forces the incentive iff no optimal restriction equalizes all
    alternatives.  ``cap`` bounds the number of restrictions tried per
    context.
    """
    _require_checkable(model, x)
    en = _Enumeration(model)
    ddom, pos_e = en.ddom, en.positive_exo_d

    by_pa: dict[tuple, list[int]] = {}
    for i, worlds in enumerate(en.worlds):
        by_pa.setdefault(en.context_of(worlds[ddom[0]]), []).append(i)

    # base[pa][(e, v)]: unnormalized E-sum of U with the decision forced to
    # v over settings in the context with decision noise e.  nested[pa][d]
    # is the analogue for utility under do(x := value x takes under d).
    nested_cache: dict[tuple, Fraction] = {}

    def nested_utility(i: int, xd: Value, v: Value) -> Fraction:
        key = (i, xd, v)
        hit = nested_cache.get(key)
        if hit is None:
            exo, _ = en.support[i]
            world = en.ev.run(exo, iv=Intervention.do({x: xd}), decision_value=v)
            hit = model.total_utility(world)
            nested_cache[key] = hit
        return hit

    opt_sets, mass = en.optimal_sets()
    contexts = sorted(by_pa, key=_context_sort_key(model, en))
    good_slices: dict[tuple, dict[Value, Value]] = {}
    for pa in contexts:
        idxs = by_pa[pa]
        base: dict[tuple, Fraction] = {}
        nested: dict[Value, dict[tuple, Fraction]] = {d: {} for d in ddom}
        for i in idxs:
            exo, weight = en.support[i]
            e = exo[en.decision]
            for v in ddom:
                u_v = weight * model.total_utility(en.worlds[i][v])
                base[(e, v)] = base.get((e, v), Fraction(0)) + u_v
                for d in ddom:
                    xd = en.worlds[i][d][x]
                    u_n = weight * nested_utility(i, xd, v)
                    nested[d][(e, v)] = nested[d].get((e, v), Fraction(0)) + u_n

        n_slices = len(opt_sets[pa]) ** len(pos_e)
        if n_slices > cap:
            return SemanticVerdict(
                x,
                IncentiveKind.CONTROL,
                None,
                reason=f"cap exceeded: {n_slices} optimal restrictions in one context",
            )
        forcing = None
        found_good = None
        for combo in itertools.product(opt_sets[pa], repeat=len(pos_e)):
            slice_ = dict(zip(pos_e, combo))
            failing = None
            for d in ddom:
                diff = Fraction(0)
                for e in pos_e:
                    v = slice_[e]
                    diff += nested[d].get((e, v), Fraction(0)) - base.get(
                        (e, v), Fraction(0)
                    )
                if diff != 0:
                    failing = (d, diff)
                    break
            if failing is None:
                found_good = slice_
                break
            if forcing is None:
                forcing = (slice_, failing)
        if found_good is None:
            slice_, (d, diff) = forcing
            e_base = sum(
                (base.get((e, slice_[e]), Fraction(0)) for e in pos_e), Fraction(0)
            )
            e_nested = sum(
                (nested[d].get((e, slice_[e]), Fraction(0)) for e in pos_e),
                Fraction(0),
            )
            return SemanticVerdict(
                x,
                IncentiveKind.CONTROL,
                True,
                evidence={
                    "context": dict(zip(en.parent_order, pa)),
                    "alternative_decision": d,
                    "expected_utility": e_base / mass[pa],
                    "expected_utility_via_node": e_nested / mass[pa],
                    "difference": diff / mass[pa],
                },
            )
        good_slices[pa] = found_good

    table = {
        (pa, e): v for pa, slice_ in good_slices.items() for e, v in slice_.items()
    }
    refuting = Policy(en.decision, en.parent_order, table, default=ddom[0])
    return SemanticVerdict(
        x,
        IncentiveKind.CONTROL,
        False,
        reason="an optimal policy routes no influence through the node",
        refuting_policy=refuting,
    )


def _context_sort_key(model: Scim, en: _Enumeration):
    doms = [model.domains[p] for p in en.parent_order]

    def key(pa: tuple) -> tuple:
        return tuple(dom.index(v) for dom, v in zip(doms, pa))

    return key


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, a):
        parent = self.parent
        if a not in parent:
            parent[a] = a
            return a
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def classes(self) -> dict:
        out: dict = {}
        for a in self.parent:
            out.setdefault(self.find(a), []).append(a)
        return out


def has_response_incentive(model: Scim, x: str, cap: int = 4096) -> SemanticVerdict:
    """Must every optimal policy's decision react to interventions on ``x``?

    Present iff for every optimal policy there are a value of ``x`` and a
    positive-probability exogenous setting where the decision under
    do(x := value) differs from the natural decision.  Equivalently: no
    optimal policy is constant across the classes of decision contexts
    linked by those interventions.  Each class must admit a common optimal
    decision for a non-reacting optimal policy to exist, which decides the
    universal quantifier without enumerating policies.

    ``details["present_all_settings"]`` reports the variant that also
    quantifies over zero-probability exogenous settings.
    """
    _require_checkable(model, x)
    en = _Enumeration(model)
    xdom = model.domains[x].values
    opt_sets, _ = en.optimal_sets()

    links: list[tuple[tuple, tuple, dict]] = []  # (natural ctx, intervened ctx, info)
    uf = _UnionFind()
    for i, (exo, _) in enumerate(en.support):
        e = exo[en.decision]
        nat = (en.context_of(en.worlds[i][en.ddom[0]]), e)
        uf.find(nat)
        for xv in xdom:
            world = en.ev.run(
                exo, iv=Intervention.do({x: xv}), decision_value=en.ddom[0]
            )
            ctx = (en.context_of(world), e)
            uf.union(nat, ctx)
            if ctx != nat:
                links.append((nat, ctx, {"x_value": xv, "exo": dict(exo)}))

    def constrained(ctx) -> Optional[tuple]:
        pa, e = ctx
        if pa in opt_sets and en.exo_d_dist[e] > 0:
            return opt_sets[pa]
        return None

    def decide(classes: dict) -> tuple[bool, Optional[dict], Optional[dict]]:
        """(present, forcing-class evidence, per-class choices)."""
        choices: dict = {}
        for root, members in classes.items():
            sets = [s for s in (constrained(m) for m in members) if s is not None]
            if not sets:
                choices[root] = en.ddom[0]
                continue
            common = [v for v in en.ddom if all(v in s for s in sets)]
            if not common:
                return True, {"class_contexts": members, "optimal_sets": sets}, None
            choices[root] = common[0]
        return False, None, choices

    present, force_evidence, choices = decide(uf.classes())

    n_total = 1
    for n in model.graph.node_names:
        n_total *= len(model.exo_domains[n].values)
    if n_total == len(en.support):
        present_all = present
    else:
        uf_all = _UnionFind()
        ev = en.ev
        for exo, _w in exo_assignments(model):
            e = exo[en.decision]
            nat_world = ev.run(exo, decision_value=en.ddom[0])
            nat = (en.context_of(nat_world), e)
            uf_all.find(nat)
            for xv in xdom:
                world = ev.run(
                    exo, iv=Intervention.do({x: xv}), decision_value=en.ddom[0]
                )
                uf_all.union(nat, (en.context_of(world), e))
        present_all, _, _ = decide(uf_all.classes())

    details = {"present_all_settings": present_all}
    if present:
        evidence = force_evidence
        for nat, ctx, info in links:
            if uf.find(nat) in {uf.find(m) for m in force_evidence["class_contexts"]}:
                evidence = dict(force_evidence)
                evidence["example"] = {
                    "natural_context": nat,
                    "intervened_context": ctx,
                    **info,
                }
                break
        return SemanticVerdict(
            x, IncentiveKind.RESPONSE, True, evidence=evidence, details=details
        )

    table: dict = {}
    for ctx in uf.parent:
        table[ctx] = choices[uf.find(ctx)]
    refuting = Policy(en.decision, en.parent_order, table, default=en.ddom[0])
    return SemanticVerdict(
        x,
        IncentiveKind.RESPONSE,
        False,
        reason="an optimal policy ignores every intervention on the node",
        refuting_policy=refuting,
        details=details,
    )


def has_observation_incentive(model: Scim, x: str) -> SemanticVerdict:
    """Is the value of information of the observed parent ``x`` positive?

    Compares the optimal expected utility against the best achievable by
    policies that ignore the ``x`` coordinate of their context.  Exact
    rational comparison via the action-value table.
    """
    _require_checkable(model, x)
    d = model.decision
    if x not in model.graph.parents(d):
        raise ModelError(f"{x} is not an observed parent of the decision")
    qt = q_table(model)
    idx = qt.parent_order.index(x)
    with_obs = qt.max_value

    groups: dict[tuple, list[tuple]] = {}
    for pa in qt.contexts:
        groups.setdefault(pa[:idx] + pa[idx + 1 :], []).append(pa)
    without_obs = Fraction(0)
    for members in groups.values():
        best = max(
            sum(
                (qt.contexts[pa]["prob"] * qt.contexts[pa]["q"][v] for pa in members),
                Fraction(0),
            )
            for v in qt.decision_domain
        )
        without_obs += best
    present = without_obs < with_obs
    return SemanticVerdict(
        x,
        IncentiveKind.OBSERVATION,
        present,
        evidence={
            "value_with_observation": with_obs,
            "value_without_observation": without_obs,
        },
    )


def has_intervention_incentive(
    model: Scim, x: str, cap: int = 4096
) -> SemanticVerdict:
    """Is the value of control of ``x`` positive?

    Sweeps every deterministic replacement of ``x``'s mechanism (a table
    from parent assignments to values, ignoring the node's noise) and asks
    whether any raises the optimal expected utility.  The sweep size is
    |dom(x)| ** (number of parent assignments); above ``cap`` the verdict
    is undecided.
    """
    _require_checkable(model, x)
    xdom = model.domains[x].values
    parent_domains = [model.domains[p].values for p in model.graph.parents(x)]
    keys = list(itertools.product(*parent_domains))
    count = len(xdom) ** len(keys)
    if count > cap:
        return SemanticVerdict(
            x,
            IncentiveKind.INTERVENTION,
            None,
            reason=f"cap exceeded: {count} soft interventions",
        )
    baseline = q_table(model).max_value
    for combo in itertools.product(xdom, repeat=len(keys)):
        soft = dict(zip(keys, combo))
        value = q_table(model, iv=Intervention(soft={x: soft})).max_value
        if value > baseline:
            return SemanticVerdict(
                x,
                IncentiveKind.INTERVENTION,
                True,
                evidence={
                    "soft_intervention": soft,
                    "value_under_intervention": value,
                    "baseline_value": baseline,
                },
            )
    return SemanticVerdict(
        x,
        IncentiveKind.INTERVENTION,
        False,
        reason="no mechanism replacement beats the optimum",
        evidence={"baseline_value": baseline},
    )


def semantic_check(
    model: Scim, x: str, kind: IncentiveKind, cap: int = 4096, soft_cap: int = 4096
) -> SemanticVerdict:
    if kind is IncentiveKind.CONTROL:
        return has_control_incentive(model, x, cap=cap)
    if kind is IncentiveKind.RESPONSE:
        return has_response_incentive(model, x, cap=cap)
    if kind is IncentiveKind.OBSERVATION:
        return has_observation_incentive(model, x)
    return has_intervention_incentive(model, x, cap=soft_cap)
