"""Witness model constructors for the graphical criteria.

Given a diagram on which a criterion fires for a node, these builders emit
a compatible model that provably exhibits the corresponding semantic
incentive, turning the criteria's completeness direction into executable
artifacts.

The control witness threads a single decision-to-utility path through the
node: binary domains, every path node copies its predecessor, everything
else is constant.  The only optimal policy plays 1 and earns 1; routing
the decision's influence through the node at decision 0 earns 0.

The response witness is a product construction.  It picks an observed
parent W reachable from the node X, a utility U reachable from the
decision, and an active path from W to U given the rest of the decision's
family.  Each directed path (X to W, D to U, and each collider's path down
to D) and the active path itself live in their own coordinate of a product
domain over {-1, 0, 1}, so the paths cannot interfere even when they share
nodes.  Along the active path, fork nodes broadcast fresh +-1 noise,
chains relay, and colliders multiply their two neighbors.  The canonical
coordinate ties the construction together: X is pinned to 1, W multiplies
the X-relay with the path value reaching it, and U multiplies the
decision relay with the path value reaching it.  Observing W and the
collider relays lets an optimal policy recover U's noise factor exactly
(expected utility 1), while forcing X to zero severs the only link between
the observations and that factor, pinning every policy's expected utility
under the intervention to 0.

One deliberate asymmetry: the path coordinate of W itself is pinned to 0,
and relays that *leave* an endpoint read the endpoint's canonical
coordinate instead.  Exposing the raw path value on W would hand the
policy a second, intervention-proof copy of the noise factor and an
optimal policy could then ignore X entirely, voiding the guarantee.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from . import graph as g
from .criteria import control_criterion, response_criterion
from .graph import BACKWARD, FORWARD, Cid, NodeKind, PathWitness
from .model import Domain, Scim, StructFn, Value


class WitnessError(ValueError):
    """The requested witness is not constructible (criterion unsatisfied)."""


# --- control -----------------------------------------------------------------

BIT0, BIT1 = "v0", "v1"


@dataclass
class ControlWitnessPlan:
    """The path threaded through the node, and where the node sits on it."""

    path: tuple[str, ...]
    node_index: int


def build_control_witness(graph: Cid, x: str) -> Scim:
    """A model on ``graph`` with a semantic control incentive on ``x``.

    Requires the control criterion to hold for ``x``.  All domains are
    binary; nodes on the chosen decision-to-utility path copy their
    predecessor and every other mechanism is constant.  Noise is a
    one-point distribution since the construction never uses it.
    """
    verdict = control_criterion(graph, x)
    if not verdict.compatible:
        raise WitnessError(f"control criterion not satisfied for {x}: {verdict.reason}")
    path = verdict.evidence["path"].nodes
    plan = ControlWitnessPlan(path, path.index(x))

    bits = (BIT0, BIT1)
    domains: dict[str, Domain] = {}
    exo_domains: dict[str, Domain] = {}
    exo_dists: dict[str, dict[Value, Fraction]] = {}
    for n in graph.node_names:
        numeric = None
        if graph.kind(n) is NodeKind.UTILITY:
            numeric = {BIT0: Fraction(0), BIT1: Fraction(1)}
        domains[n] = Domain(bits, numeric)
        exo_domains[n] = Domain(("e0",))
        exo_dists[n] = {"e0": Fraction(1)}

    on_path = {path[i]: path[i - 1] for i in range(1, len(path))}
    fns: dict[str, StructFn] = {}
    for n in graph.node_names:
        if n == graph.decision:
            continue
        parents = graph.parents(n)
        rows = {}
        if n in on_path:
            src = parents.index(on_path[n])
            for pv in itertools.product(bits, repeat=len(parents)):
                rows[(pv, "e0")] = pv[src]
        else:
            for pv in itertools.product(bits, repeat=len(parents)):
                rows[(pv, "e0")] = BIT0
        fns[n] = StructFn(n, parents, rows=rows)

    name = f"control_witness_{x}"
    return Scim(
        graph=Cid(graph.nodes, graph.edges, name=name),
        domains=domains,
        exo_domains=exo_domains,
        exo_dists=exo_dists,
        fns=fns,
        name=name,
        metadata={"plan": plan},
    )


# --- response ----------------------------------------------------------------

NEG, ZERO, POS = "m1", "z0", "p1"
SCALAR = (NEG, ZERO, POS)
_SCALAR_NUM = {NEG: -1, ZERO: 0, POS: 1}
_NUM_SCALAR = {-1: NEG, 0: ZERO, 1: POS}
_COORD_CHAR = {-1: "m", 0: "z", 1: "p"}


def _tuple_code(coords: tuple[int, ...]) -> str:
    return "t" + "".join(_COORD_CHAR[c] for c in coords)


def _tuple_domain(k: int) -> Domain:
    values = tuple(
        _tuple_code(c) for c in itertools.product((-1, 0, 1), repeat=k)
    )
    return Domain(values)


@dataclass
class ResponseWitnessPlan:
    """Paths and labels chosen for the product construction.

    ``sources`` and ``colliders`` label the active path: colliders are the
    nodes both neighbors point into (each has a directed path down to the
    decision, recorded in ``collider_paths``); sources are the fork nodes
    broadcasting fresh noise, with the observation itself playing the
    leading source when the path leaves it forwards.
    """

    node: str
    observation: str
    utility: str
    path_to_observation: tuple[str, ...]
    path_to_utility: tuple[str, ...]
    active_path: PathWitness
    sources: tuple[str, ...]
    colliders: tuple[str, ...]
    collider_paths: tuple[tuple[str, ...], ...]

    @property
    def n_dims(self) -> int:
        return len(self.colliders) + 4


def _label_active_path(path: PathWitness) -> tuple[list[str], list[str]]:
    """Identify sources and colliders; assert the alternation the build needs."""
    nodes, dirs = path.nodes, path.directions
    if dirs[-1] != FORWARD:
        raise WitnessError("active path must enter the utility forwards")
    specials: list[tuple[str, str]] = []
    if dirs[0] == FORWARD:
        specials.append(("S", nodes[0]))
    for i in range(1, len(nodes) - 1):
        before, after = dirs[i - 1], dirs[i]
        if before == FORWARD and after == BACKWARD:
            specials.append(("O", nodes[i]))
        elif before == BACKWARD and after == FORWARD:
            specials.append(("S", nodes[i]))
    labels = "".join(tag for tag, _ in specials)
    # Pattern along the path: S (O S)*; the leading source may be the
    # observation itself.
    if not labels or labels[0] != "S" or any(
        labels[i] != ("O" if i % 2 else "S") for i in range(len(labels))
    ) or labels[-1] != "S":
        raise WitnessError(f"unexpected active-path shape: {labels}")
    sources = [n for tag, n in specials if tag == "S"]
    colliders = [n for tag, n in specials if tag == "O"]
    return sources, colliders


def _choose_plan(graph: Cid, x: str) -> ResponseWitnessPlan:
    d = graph.decision
    best: Optional[tuple[tuple, ResponseWitnessPlan]] = None
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
            if active is None:
                continue
            sources, colliders = _label_active_path(active)
            collider_paths = []
            for o in colliders:
                p = g.find_directed_path(graph, o, d)
                if p is None:
                    raise WitnessError(
                        f"collider {o} on the active path has no directed path "
                        f"to the decision"
                    )
                collider_paths.append(p.nodes)
            plan = ResponseWitnessPlan(
                node=x,
                observation=w,
                utility=u,
                path_to_observation=to_w.nodes,
                path_to_utility=to_u.nodes,
                active_path=active,
                sources=tuple(sources),
                colliders=tuple(colliders),
                collider_paths=tuple(collider_paths),
            )
            size = (
                len(to_w)
                + len(to_u)
                + len(active)
                + sum(len(p) - 1 for p in plan.collider_paths)
            )
            key = (size, graph.index(w), graph.index(u))
            if best is None or key < best[0]:
                best = (key, plan)
    if best is None:
        raise WitnessError(f"response criterion not satisfied for {x}")
    return best[1]


# Component specs: how one coordinate of one node is computed.
#   ("const", c)              constant c
#   ("exo",)                  the node's own noise value
#   ("copy", parent, coord)   a coordinate of one parent (None = scalar parent)
#   ("prod", (p1, c1), (p2, c2))   product of two parent coordinates
#   ("mul", spec, spec)       product of two component specs


def _src_coord(node: str, observation: str, scalars: set[str]) -> Optional[int]:
    """Which coordinate carries ``node``'s value for a relay leaving it.

    Scalar nodes (the decision) are read directly; the observation's path
    coordinate is pinned to zero, so relays leaving it read the canonical
    coordinate; interior path nodes are read on the path coordinate.
    """
    if node in scalars:
        return None
    return 0 if node == observation else 3


def build_response_witness(graph: Cid, x: str) -> Scim:
    """A model on ``graph`` with a semantic response incentive on ``x``.

    Requires the response criterion to hold for ``x``.  Every optimal
    policy earns expected utility 1 and must change its decision under the
    intervention forcing ``x`` to all-zeros, under which every policy's
    expected utility is exactly 0.
    """
    verdict = response_criterion(graph, x)
    if not verdict.compatible:
        raise WitnessError(
            f"response criterion not satisfied for {x}: {verdict.reason}"
        )
    plan = _choose_plan(graph, x)
    d = graph.decision
    w, u = plan.observation, plan.utility
    k = plan.n_dims
    m = len(plan.colliders)

    scalars = {d} | set(graph.utilities)
    specs: dict[str, dict[int, tuple]] = {n: {} for n in graph.node_names}
    helpers: dict[str, list[tuple]] = {u: [], w: []}

    def relay(dim: int, path: tuple[str, ...], start_coord: Optional[int]):
        """Lay a directed relay along ``path`` into coordinate ``dim``.

        The first hop reads the path start on ``start_coord``; later hops
        read the previous node's ``dim`` coordinate.  The final node gets
        the same treatment; callers that must consume rather than expose
        the arriving value (scalar endpoints) pop it into a helper.
        """
        for i in range(1, len(path)):
            src = path[i - 1]
            coord = start_coord if i == 1 else dim
            specs[path[i]][dim] = ("copy", src, coord)

    # Dimension 1: node -> observation; the first hop reads the node's
    # canonical coordinate (pinned to 1).  Nothing to lay when node and
    # observation coincide.
    if x != w:
        relay(1, plan.path_to_observation, 0)

    # Dimension 2: decision -> utility; the arrival is consumed by the
    # utility's canonical value, not exposed (utilities are scalar).
    relay(2, plan.path_to_utility, None)
    helpers[u].append(specs[u].pop(2))

    # Dimension 3: the active path.
    nodes, dirs = plan.active_path.nodes, plan.active_path.directions
    n_last = len(nodes) - 1
    for i in range(1, n_last):
        before, after = dirs[i - 1], dirs[i]
        left, mid, right = nodes[i - 1], nodes[i], nodes[i + 1]
        if before == FORWARD and after == FORWARD:
            specs[mid][3] = ("copy", left, _src_coord(left, w, scalars) if i == 1 else 3)
        elif before == BACKWARD and after == BACKWARD:
            specs[mid][3] = ("copy", right, 3)
        elif before == FORWARD and after == BACKWARD:
            lcoord = _src_coord(left, w, scalars) if i == 1 else 3
            specs[mid][3] = ("prod", (left, lcoord), (right, 3))
        else:
            specs[mid][3] = ("exo",)
    # Observation endpoint: path coordinate stays 0; the value feeding the
    # canonical coordinate is its own noise (leading source) or the relay
    # arriving from the first fork.
    helpers[w].append(("exo",) if dirs[0] == FORWARD else ("copy", nodes[1], 3))
    # Utility endpoint: consume the arriving path value.
    helpers[u].append(
        ("copy", nodes[n_last - 1], _src_coord(nodes[n_last - 1], w, scalars))
    )

    # Dimensions 3+l: collider -> decision relays; the decision reads its
    # parents directly, so nothing is consumed at the end.
    for l, path in enumerate(plan.collider_paths, start=1):
        relay(3 + l, path, 3)
        specs[d].pop(3 + l, None)

    # Canonical coordinate.
    specs[u][0] = ("mul", helpers[u][0], helpers[u][1])
    if x == w:
        specs[w][0] = helpers[w][0]
    else:
        specs[x][0] = ("const", 1)
        arriving = specs[w].get(1, ("const", 0))
        specs[w][0] = ("mul", arriving, helpers[w][0])

    # Assemble the model.
    domains: dict[str, Domain] = {}
    exo_domains: dict[str, Domain] = {}
    exo_dists: dict[str, dict[Value, Fraction]] = {}
    half = Fraction(1, 2)
    for n in graph.node_names:
        if n in scalars:
            numeric = None
            if graph.kind(n) is NodeKind.UTILITY:
                numeric = {NEG: Fraction(-1), ZERO: Fraction(0), POS: Fraction(1)}
            domains[n] = Domain(SCALAR, numeric)
        else:
            domains[n] = _tuple_domain(k)
        exo_domains[n] = Domain((NEG, POS))
        exo_dists[n] = {NEG: half, POS: half}

    fns = {
        n: _make_fn(graph, domains, n, specs[n], k, n in scalars)
        for n in graph.node_names
        if n != d
    }
    name = f"response_witness_{x}"
    return Scim(
        graph=Cid(graph.nodes, graph.edges, name=name),
        domains=domains,
        exo_domains=exo_domains,
        exo_dists=exo_dists,
        fns=fns,
        name=name,
        metadata={"plan": plan},
    )


def _make_fn(
    graph: Cid,
    domains: dict[str, Domain],
    node: str,
    node_specs: dict[int, tuple],
    k: int,
    scalar: bool,
) -> StructFn:
    parents = graph.parents(node)
    index = {p: i for i, p in enumerate(parents)}
    decoders: list[Callable[[Value], object]] = []
    for p in parents:
        if domains[p].values == SCALAR:
            decoders.append(_SCALAR_NUM.__getitem__)
        else:
            table = {
                v: c
                for v, c in zip(
                    domains[p].values, itertools.product((-1, 0, 1), repeat=k)
                )
            }
            decoders.append(table.__getitem__)

    def check_parent(p: str) -> None:
        if p not in index:
            raise WitnessError(
                f"construction reads {p} which is not a parent of {node}"
            )

    for spec in node_specs.values():
        for part in _spec_parents(spec):
            check_parent(part)

    def read(decoded: list, spec: tuple, exo_num: int) -> int:
        op = spec[0]
        if op == "const":
            return spec[1]
        if op == "exo":
            return exo_num
        if op == "copy":
            _, p, coord = spec
            v = decoded[index[p]]
            return v if coord is None else v[coord]
        if op == "prod":
            _, (p1, c1), (p2, c2) = spec
            v1 = decoded[index[p1]]
            v2 = decoded[index[p2]]
            v1 = v1 if c1 is None else v1[c1]
            v2 = v2 if c2 is None else v2[c2]
            return v1 * v2
        if op == "mul":
            return read(decoded, spec[1], exo_num) * read(decoded, spec[2], exo_num)
        raise WitnessError(f"unknown component spec: {spec}")

    items = sorted(node_specs.items())

    def rule(parent_values: tuple[Value, ...], exo_value: Value) -> Value:
        decoded = [dec(v) for dec, v in zip(decoders, parent_values)]
        exo_num = _SCALAR_NUM[exo_value]
        if scalar:
            out = 0
            for dim, spec in items:
                if dim == 0:
                    out = read(decoded, spec, exo_num)
            return _NUM_SCALAR[out]
        coords = [0] * k
        for dim, spec in items:
            coords[dim] = read(decoded, spec, exo_num)
        return _tuple_code(tuple(coords))

    return StructFn(node, parents, rule=rule)


def _spec_parents(spec: tuple):
    op = spec[0]
    if op == "copy":
        yield spec[1]
    elif op == "prod":
        yield spec[1][0]
        yield spec[2][0]
    elif op == "mul":
        yield from _spec_parents(spec[1])
        yield from _spec_parents(spec[2])


def zero_value(model: Scim, node: str) -> Value:
    """The all-zeros value of ``node``'s domain in a response witness."""
    dom = model.domains[node]
    if dom.values == SCALAR:
        return ZERO
    k = len(dom.values[0]) - 1
    return _tuple_code((0,) * k)
