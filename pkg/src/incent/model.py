"""Structural models over causal influence diagrams.

A model attaches to each node a finite domain, an exogenous variable with a
rational distribution, and (for every non-decision node) a deterministic
structural function of the node's parents and its own exogenous variable.
The decision node's function is deliberately missing; a policy supplies it.

All probabilities and utilities are exact rationals.  Incentive checks
compare expected utilities for exact (in)equality, so no floating point is
used anywhere in the semantics.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, Optional

from .graph import Cid, NodeKind, validate

Value = Hashable

# Explicit row tables above this many rows are not fully enumerated during
# validation or equality checks; rule-backed tables beyond it cannot be
# serialized either.
FULL_TABLE_LIMIT = 200_000


class ModelError(ValueError):
    """Raised for queries on malformed models or out-of-domain values."""


@dataclass
class Domain:
    """An ordered finite domain of distinct values.

    ``numeric`` optionally maps each value to an exact rational; utility
    nodes require a total numeric interpretation.  Value order is
    significant: it drives enumeration order and every deterministic
    tie-break.
    """

    values: tuple[Value, ...]
    numeric: Optional[dict[Value, Fraction]] = None

    def __post_init__(self):
        self.values = tuple(self.values)
        if self.numeric is not None:
            self.numeric = {v: Fraction(q) for v, q in self.numeric.items()}

    def check(self) -> list[str]:
        problems = []
        if not self.values:
            problems.append("empty domain")
        if len(set(self.values)) != len(self.values):
            problems.append("duplicate domain values")
        if self.numeric is not None:
            for v in self.numeric:
                if v not in self.values:
                    problems.append(f"numeric interpretation for unknown value: {v}")
        return problems

    def index(self, value: Value) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise ModelError(f"value not in domain: {value!r}") from None

    def __contains__(self, value: Value) -> bool:
        return value in self.values

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Domain)
            and self.values == other.values
            and self.numeric == other.numeric
        )


class StructFn:
    """A total mapping from (parent assignment, exogenous value) to a value.

    Backed either by an explicit row dictionary or by a rule callable.
    Rule-backed tables memoize looked-up rows, so hot paths behave like
    plain dictionary reads; they denote the same total extension as the
    fully materialized table would.
    """

    def __init__(
        self,
        owner: str,
        parents: tuple[str, ...],
        rows: Optional[Mapping[tuple[tuple[Value, ...], Value], Value]] = None,
        rule: Optional[Callable[[tuple[Value, ...], Value], Value]] = None,
    ):
        if (rows is None) == (rule is None):
            raise ModelError("exactly one of rows/rule must be given")
        self.owner = owner
        self.parents = tuple(parents)
        self.rows = dict(rows) if rows is not None else {}
        self.rule = rule

    @property
    def is_explicit(self) -> bool:
        return self.rule is None

    def value(self, parent_values: tuple[Value, ...], exo_value: Value) -> Value:
        key = (parent_values, exo_value)
        hit = self.rows.get(key)
        if hit is not None or key in self.rows:
            return hit
        if self.rule is None:
            raise ModelError(
                f"partial structural function for {self.owner}: missing row {key}"
            )
        out = self.rule(parent_values, exo_value)
        self.rows[key] = out
        return out

    def __repr__(self) -> str:
        kind = "explicit" if self.is_explicit else "rule"
        return f"StructFn({self.owner!r}, parents={self.parents}, {kind})"


@dataclass
class Intervention:
    """Hard value replacements and soft mechanism replacements.

    Hard entries fix a node to a constant, ignoring its parents and noise.
    Soft entries replace a node's mechanism by a deterministic function of
    its parents only (the replacement ignores the exogenous variable).  The
    decision node may be hard-intervened but never soft-intervened; its
    mechanism is the policy.
    """

    hard: dict[str, Value] = field(default_factory=dict)
    soft: dict[str, dict[tuple[Value, ...], Value]] = field(default_factory=dict)

    @classmethod
    def none(cls) -> "Intervention":
        return cls()

    @classmethod
    def do(cls, assignments: Mapping[str, Value]) -> "Intervention":
        return cls(hard=dict(assignments))

    def check(self, model: "Scim") -> list[str]:
        problems = []
        overlap = set(self.hard) & set(self.soft)
        if overlap:
            problems.append(f"node intervened both hard and soft: {sorted(overlap)}")
        for n in itertools.chain(self.hard, self.soft):
            if n not in model.graph:
                problems.append(f"intervention on unknown node: {n}")
        try:
            d = model.graph.decision
        except Exception:
            d = None
        if d is not None and d in self.soft:
            problems.append("soft intervention on the decision node")
        for n, v in self.hard.items():
            if n in model.domains and v not in model.domains[n]:
                problems.append(f"hard intervention value not in domain of {n}: {v!r}")
        return problems


@dataclass
class Scim:
    """A diagram plus domains, exogenous distributions, and mechanisms.

    ``domains`` covers every node; ``exo_domains``/``exo_dists`` give each
    node's private exogenous variable (keyed by the node's own name) with a
    rational distribution; ``fns`` holds a structural function for every
    chance and utility node, never for the decision.  ``metadata`` is
    free-form bookkeeping excluded from equality and serialization.
    """

    graph: Cid
    domains: dict[str, Domain]
    exo_domains: dict[str, Domain]
    exo_dists: dict[str, dict[Value, Fraction]]
    fns: dict[str, StructFn]
    name: str = "model"
    metadata: dict = field(default_factory=dict)

    @property
    def decision(self) -> str:
        return self.graph.decision

    def domain(self, node: str) -> Domain:
        try:
            return self.domains[node]
        except KeyError:
            raise ModelError(f"no domain for node: {node}") from None

    def utility_value(self, node: str, value: Value) -> Fraction:
        dom = self.domain(node)
        if dom.numeric is None or value not in dom.numeric:
            raise ModelError(f"no numeric interpretation for {node}={value!r}")
        return dom.numeric[value]

    def total_utility(self, assignment: Mapping[str, Value]) -> Fraction:
        return sum(
            (self.utility_value(u, assignment[u]) for u in self.graph.utilities),
            Fraction(0),
        )


def validate_scim(model: Scim) -> list[str]:
    """All invariant violations of ``model``; empty means ok.

    Covers the graph invariants plus: total domains, utility numeric
    interpretations, normalized exogenous distributions, structural
    functions exactly for non-decision nodes with parent sets matching the
    graph, and row totality/codomain membership for explicit tables.
    Rule-backed tables are checked structurally and on a bounded sample of
    rows; their rows are validated again lazily on every lookup.
    """
    problems = list(validate(model.graph))
    names = set(model.graph.node_names)

    for n in names:
        dom = model.domains.get(n)
        if dom is None:
            problems.append(f"missing domain for node: {n}")
            continue
        problems += [f"{n}: {p}" for p in dom.check()]
        if model.graph.kind(n) is NodeKind.UTILITY:
            if dom.numeric is None or any(v not in dom.numeric for v in dom.values):
                problems.append(f"utility node {n} lacks a total numeric interpretation")

    for n in names:
        edom = model.exo_domains.get(n)
        dist = model.exo_dists.get(n)
        if edom is None or dist is None:
            problems.append(f"missing exogenous variable for node: {n}")
            continue
        problems += [f"exo {n}: {p}" for p in edom.check()]
        if set(dist) != set(edom.values):
            problems.append(f"exo distribution of {n} not total over its domain")
            continue
        if any(p < 0 for p in dist.values()):
            problems.append(f"exo distribution of {n} has a negative probability")
        if sum(dist.values(), Fraction(0)) != 1:
            problems.append(f"exo distribution of {n} not normalized")

    decisions = set(model.graph.decisions)
    for n in names - decisions:
        fn = model.fns.get(n)
        if fn is None:
            problems.append(f"missing structural function for node: {n}")
            continue
        if set(fn.parents) != set(model.graph.parents(n)):
            problems.append(
                f"structural function of {n} reads {sorted(fn.parents)}, "
                f"graph parents are {sorted(model.graph.parents(n))}"
            )
            continue
        problems += _check_rows(model, fn)
    for n in decisions:
        if n in model.fns:
            problems.append(f"decision node {n} must not have a structural function")
    for n in model.fns:
        if n not in names:
            problems.append(f"structural function for unknown node: {n}")
    return problems


def _check_rows(model: Scim, fn: StructFn) -> list[str]:
    n = fn.owner
    dom = model.domains.get(n)
    edom = model.exo_domains.get(n)
    if dom is None or edom is None:
        return []
    parent_domains = []
    for p in fn.parents:
        pdom = model.domains.get(p)
        if pdom is None:
            return []
        parent_domains.append(pdom.values)
    size = len(edom.values)
    for vals in parent_domains:
        size *= len(vals)

    problems: list[str] = []
    if fn.is_explicit:
        if size <= FULL_TABLE_LIMIT:
            expected = {
                (pv, e)
                for pv in itertools.product(*parent_domains)
                for e in edom.values
            }
            missing = expected - set(fn.rows)
            if missing:
                problems.append(
                    f"partial structural function for {n}: {len(missing)} missing rows"
                )
            extra = set(fn.rows) - expected
            if extra:
                problems.append(f"structural function of {n} has {len(extra)} stray rows")
        elif len(fn.rows) != size:
            problems.append(f"partial structural function for {n}")
        for key, out in fn.rows.items():
            if out not in dom:
                problems.append(f"structural function of {n} outputs {out!r} not in domain")
                break
    else:
        sample = itertools.islice(
            ((pv, e) for pv in itertools.product(*parent_domains) for e in edom.values),
            64,
        )
        for pv, e in sample:
            out = fn.value(pv, e)
            if out not in dom:
                problems.append(f"structural function of {n} outputs {out!r} not in domain")
                break
    return problems


def table_size(model: Scim, node: str) -> int:
    """Number of rows in the full extension of ``node``'s structural function."""
    fn = model.fns[node]
    size = len(model.exo_domains[node].values)
    for p in fn.parents:
        size *= len(model.domains[p].values)
    return size


def full_rows(model: Scim, node: str):
    """Iterate the full (key, value) extension of a structural function.

    Raises :class:`ModelError` when the extension exceeds
    ``FULL_TABLE_LIMIT`` rows; callers that only evaluate never need this.
    """
    fn = model.fns[node]
    if table_size(model, node) > FULL_TABLE_LIMIT:
        raise ModelError(f"structural function of {node} too large to enumerate")
    parent_domains = [model.domains[p].values for p in fn.parents]
    for pv in itertools.product(*parent_domains):
        for e in model.exo_domains[node].values:
            yield (pv, e), fn.value(pv, e)


def models_equal(a: Scim, b: Scim) -> bool:
    """Structural equality, comparing structural functions extensionally."""
    if a.name != b.name or a.graph != b.graph:
        return False
    if a.domains != b.domains or a.exo_domains != b.exo_domains:
        return False
    if a.exo_dists != b.exo_dists:
        return False
    if set(a.fns) != set(b.fns):
        return False
    for n, fa in a.fns.items():
        fb = b.fns[n]
        if fa.parents != fb.parents:
            return False
        if dict(full_rows(a, n)) != dict(full_rows(b, n)):
            return False
    return True
