"""Causal influence diagrams and purely graphical queries.

A causal influence diagram (CID) is a DAG whose nodes are partitioned into
chance, decision, and utility roles; utility nodes are leaves.  This module
owns everything that can be answered from the bare graph: DAG relations,
directed-path and active-path witnesses, d-separation, path interception,
and the reduced graph used by the value-of-control criterion.

Graphs are immutable after construction and all queries are pure functions,
so concurrent readers need no synchronization.  Path selection is
deterministic everywhere: shortest first, ties broken lexicographically by
node declaration order, so that downstream witness constructions and
reports are reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence


class NodeKind(Enum):
    CHANCE = "chance"
    DECISION = "decision"
    UTILITY = "utility"


FORWARD = "->"
BACKWARD = "<-"

RELATIONS = ("parents", "children", "ancestors", "descendants", "family")


class GraphError(ValueError):
    """Raised for malformed graph construction or queries on unknown nodes."""


@dataclass(frozen=True)
class PathWitness:
    """A concrete path through a diagram.

    ``nodes`` lists the visited nodes in order; ``directions`` holds one
    ``"->"`` or ``"<-"`` flag per step recording how the step traverses the
    underlying edge.  Directed paths use ``"->"`` throughout.  A length-zero
    path is a single node with no steps.
    """

    nodes: tuple[str, ...]
    directions: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.nodes) == 0:
            raise GraphError("a path witness needs at least one node")
        if len(self.directions) != len(self.nodes) - 1:
            raise GraphError("directions must have one entry per step")

    @property
    def is_directed(self) -> bool:
        return all(d == FORWARD for d in self.directions)

    def __len__(self) -> int:
        return len(self.nodes) - 1

    def __str__(self) -> str:
        if len(self.nodes) == 1:
            return self.nodes[0]
        parts = [self.nodes[0]]
        for step, node in zip(self.directions, self.nodes[1:]):
            parts.append(f" {step} {node}")
        return "".join(parts)


def directed_witness(nodes: Sequence[str]) -> PathWitness:
    return PathWitness(tuple(nodes), (FORWARD,) * (len(nodes) - 1))


class Cid:
    """A causal influence diagram.

    ``nodes`` is an ordered sequence of ``(name, kind)`` pairs; declaration
    order is significant because it fixes the deterministic tie-breaking
    used by every path query.  ``edges`` are ``(tail, head)`` pairs.

    Construction only rejects duplicate node names and duplicate edges;
    structural problems (cycles, utility nodes with children, decision
    count, edges naming undeclared nodes) are reported by :meth:`validate`
    as data so that callers can surface all of them at once.
    """

    def __init__(
        self,
        nodes: Iterable[tuple[str, NodeKind]],
        edges: Iterable[tuple[str, str]] = (),
        name: str = "cid",
    ):
        self.name = name
        self.nodes = tuple((str(n), kind) for n, kind in nodes)
        self.edges = tuple((str(a), str(b)) for a, b in edges)
        seen = set()
        for n, _ in self.nodes:
            if n in seen:
                raise GraphError(f"duplicate node name: {n}")
            seen.add(n)
        if len(set(self.edges)) != len(self.edges):
            raise GraphError("duplicate edge")
        self._index = {n: i for i, (n, _) in enumerate(self.nodes)}
        self._kind = {n: k for n, k in self.nodes}
        self._parents: dict[str, tuple[str, ...]] = {n: () for n in self._index}
        self._children: dict[str, tuple[str, ...]] = {n: () for n in self._index}
        for a, b in self.edges:
            if a in self._index and b in self._index:
                self._children[a] += (b,)
                self._parents[b] += (a,)
        order = self._index
        for n in self._index:
            self._parents[n] = tuple(sorted(self._parents[n], key=order.__getitem__))
            self._children[n] = tuple(sorted(self._children[n], key=order.__getitem__))
        self._edge_set = frozenset(self.edges)
        self._anc_cache: dict[str, frozenset[str]] = {}
        self._desc_cache: dict[str, frozenset[str]] = {}

    # --- basic structure ---------------------------------------------------

    @property
    def node_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.nodes)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        self._require(name)
        return self._index[name]

    def kind(self, name: str) -> NodeKind:
        self._require(name)
        return self._kind[name]

    def _require(self, *names: str) -> None:
        for n in names:
            if n not in self._index:
                raise GraphError(f"unknown node: {n}")

    @property
    def decisions(self) -> tuple[str, ...]:
        return tuple(n for n, k in self.nodes if k is NodeKind.DECISION)

    @property
    def decision(self) -> str:
        ds = self.decisions
        if len(ds) != 1:
            raise GraphError(f"expected exactly one decision node, found {len(ds)}")
        return ds[0]

    @property
    def utilities(self) -> tuple[str, ...]:
        return tuple(n for n, k in self.nodes if k is NodeKind.UTILITY)

    @property
    def chance_nodes(self) -> tuple[str, ...]:
        return tuple(n for n, k in self.nodes if k is NodeKind.CHANCE)

    def parents(self, name: str) -> tuple[str, ...]:
        self._require(name)
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        self._require(name)
        return self._children[name]

    def family(self, name: str) -> tuple[str, ...]:
        """The node together with its parents."""
        self._require(name)
        members = (name,) + self._parents[name]
        return tuple(sorted(set(members), key=self._index.__getitem__))

    def ancestors(self, name: str) -> frozenset[str]:
        """Reflexive-transitive ancestors (length-zero paths count)."""
        hit = self._anc_cache.get(name)
        if hit is not None:
            return hit
        self._require(name)
        out, stack = {name}, [name]
        while stack:
            for p in self._parents[stack.pop()]:
                if p not in out:
                    out.add(p)
                    stack.append(p)
        result = frozenset(out)
        self._anc_cache[name] = result
        return result

    def descendants(self, name: str) -> frozenset[str]:
        """Reflexive-transitive descendants (length-zero paths count)."""
        hit = self._desc_cache.get(name)
        if hit is not None:
            return hit
        self._require(name)
        out, stack = {name}, [name]
        while stack:
            for c in self._children[stack.pop()]:
                if c not in out:
                    out.add(c)
                    stack.append(c)
        result = frozenset(out)
        self._desc_cache[name] = result
        return result

    def topological_order(self) -> tuple[str, ...]:
        """Kahn's algorithm, preferring declaration order among ready nodes."""
        indeg = {n: len(self._parents[n]) for n in self._index}
        ready = sorted((n for n, d in indeg.items() if d == 0), key=self._index.__getitem__)
        out: list[str] = []
        while ready:
            n = ready.pop(0)
            out.append(n)
            changed = False
            for c in self._children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
                    changed = True
            if changed:
                ready.sort(key=self._index.__getitem__)
        if len(out) != len(self.nodes):
            raise GraphError("cycle detected; no topological order exists")
        return tuple(out)

    def replace_edges(self, edges: Iterable[tuple[str, str]]) -> "Cid":
        return Cid(self.nodes, edges, name=self.name)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Cid)
            and self.name == other.name
            and self.nodes == other.nodes
            and self.edges == other.edges
        )

    def __repr__(self) -> str:
        return f"Cid({self.name!r}, {len(self.nodes)} nodes, {len(self.edges)} edges)"


# --- validation -------------------------------------------------------------


def validate(graph: Cid) -> list[str]:
    """Return all invariant violations of ``graph``; empty means ok.

    Checked: edge endpoints are declared, no self-loops, acyclicity, utility
    nodes have no children, and there is exactly one decision node.
    Violations are data rather than exceptions so all of them surface at
    once.
    """
    problems: list[str] = []
    declared = set(graph.node_names)
    for a, b in graph.edges:
        for end in (a, b):
            if end not in declared:
                problems.append(f"edge references undeclared node: {a} -> {b}")
                break
        if a == b:
            problems.append(f"self-loop: {a} -> {a}")
    cycle = _find_cycle(graph)
    if cycle is not None:
        problems.append("cycle detected: " + " -> ".join(cycle))
    for u in graph.utilities:
        for c in graph.children(u):
            problems.append(f"utility node has child: {u} -> {c}")
    n_dec = len(graph.decisions)
    if n_dec != 1:
        problems.append(f"expected exactly one decision node, found {n_dec}")
    return problems


def _find_cycle(graph: Cid) -> Optional[list[str]]:
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in graph.node_names}
    stack: list[str] = []

    def visit(n: str) -> Optional[list[str]]:
        color[n] = GREY
        stack.append(n)
        for c in graph.children(n):
            if color[c] == GREY:
                return stack[stack.index(c):] + [c]
            if color[c] == WHITE:
                found = visit(c)
                if found is not None:
                    return found
        stack.pop()
        color[n] = BLACK
        return None

    for n in graph.node_names:
        if color[n] == WHITE:
            found = visit(n)
            if found is not None:
                return found
    return None


# --- relations ---------------------------------------------------------------


def relatives(graph: Cid, node: str, relation: str) -> frozenset[str]:
    """Standard DAG relations; ancestors/descendants are reflexive."""
    if relation not in RELATIONS:
        raise GraphError(f"unknown relation: {relation}")
    if relation == "parents":
        return frozenset(graph.parents(node))
    if relation == "children":
        return frozenset(graph.children(node))
    if relation == "ancestors":
        return graph.ancestors(node)
    if relation == "descendants":
        return graph.descendants(node)
    return frozenset(graph.family(node))


# --- directed paths ----------------------------------------------------------


def _shortest_lex_directed(graph: Cid, source: str, target: str) -> Optional[list[str]]:
    """Shortest directed path, ties broken lexicographically by declaration.

    Iterative deepening with children visited in declaration order: the
    first path found at the minimal depth is the lexicographically smallest
    one of that length.
    """
    if source == target:
        return [source]
    for depth in range(1, len(graph.nodes)):
        found = _dfs_directed(graph, source, target, depth, [source])
        if found is not None:
            return found
    return None


def _dfs_directed(graph, node, target, depth, acc) -> Optional[list[str]]:
    if depth == 0:
        return None
    for c in graph.children(node):
        if c == target:
            return acc + [c]
        if c not in acc:
            found = _dfs_directed(graph, c, target, depth - 1, acc + [c])
            if found is not None:
                return found
    return None


def find_directed_path(
    graph: Cid, source: str, target: str, via: Optional[str] = None
) -> Optional[PathWitness]:
    """Some directed path ``source`` to ``target``, optionally through ``via``.

    Length-zero paths count, so ``find_directed_path(g, x, x)`` is ``[x]``.
    With ``via`` the result is the concatenation of the two deterministic
    halves; in a DAG the halves can only share the ``via`` node, so the
    concatenation is a simple path.
    """
    graph._require(source, target)
    if via is None:
        nodes = _shortest_lex_directed(graph, source, target)
        return None if nodes is None else directed_witness(nodes)
    graph._require(via)
    first = _shortest_lex_directed(graph, source, via)
    if first is None:
        return None
    second = _shortest_lex_directed(graph, via, target)
    if second is None:
        return None
    return directed_witness(first + second[1:])


def intercepts(
    graph: Cid,
    sources: Iterable[str],
    targets: Iterable[str],
    cut: Iterable[str],
) -> bool:
    """True iff every directed path from ``sources`` to ``targets`` meets ``cut``.

    A length-zero path from a node to itself contains just that node, so a
    source that is also a target escapes the cut unless the node itself is
    cut.
    """
    src, tgt, blocked = set(sources), set(targets), set(cut)
    graph._require(*src, *tgt, *blocked)
    frontier = [s for s in src if s not in blocked]
    if any(s in tgt for s in frontier):
        return False
    seen = set(frontier)
    while frontier:
        n = frontier.pop()
        for c in graph.children(n):
            if c in blocked or c in seen:
                continue
            if c in tgt:
                return False
            seen.add(c)
            frontier.append(c)
    return True


# --- d-separation ------------------------------------------------------------


def _path_is_active(graph: Cid, nodes: Sequence[str], zs: frozenset[str]) -> bool:
    """Chain/fork/collider test for one concrete undirected path.

    A collider is open when it or any of its (reflexive) descendants is
    conditioned on; any other interior node blocks when conditioned on.
    """
    for i in range(1, len(nodes) - 1):
        prev, mid, nxt = nodes[i - 1], nodes[i], nodes[i + 1]
        into_left = (prev, mid) in graph._edge_set
        into_right = (nxt, mid) in graph._edge_set
        if into_left and into_right:
            if not (graph.descendants(mid) & zs):
                return False
        else:
            if mid in zs:
                return False
    return True


def _undirected_neighbors(graph: Cid, node: str) -> list[tuple[str, str]]:
    """(neighbor, direction) pairs in declaration order; direction is the
    flag recorded for the step node -> neighbor."""
    out = [(c, FORWARD) for c in graph.children(node)]
    out += [(p, BACKWARD) for p in graph.parents(node)]
    out.sort(key=lambda item: graph.index(item[0]))
    return out


def find_active_path(
    graph: Cid, x: str, y: str, zs: Iterable[str]
) -> Optional[PathWitness]:
    """One undirected path from ``x`` to ``y`` that is active given ``zs``.

    Deterministic choice rule: the shortest active path, ties broken
    lexicographically by node declaration order.  Returns ``None`` when
    every path is blocked, i.e. when ``x`` and ``y`` are d-separated by
    ``zs``.
    """
    cond = frozenset(zs)
    graph._require(x, y, *cond)
    if x == y:
        return PathWitness((x,))
    for depth in range(1, len(graph.nodes)):
        found = _dfs_active(graph, x, y, cond, depth, [x], [])
        if found is not None:
            return PathWitness(tuple(found[0]), tuple(found[1]))
    return None


def _dfs_active(graph, node, target, cond, depth, nodes, dirs):
    if depth == 0:
        return None
    for nbr, step in _undirected_neighbors(graph, node):
        if nbr in nodes:
            continue
        cand_nodes, cand_dirs = nodes + [nbr], dirs + [step]
        if nbr == target:
            if _path_is_active(graph, cand_nodes, cond):
                return cand_nodes, cand_dirs
            continue
        found = _dfs_active(graph, nbr, target, cond, depth - 1, cand_nodes, cand_dirs)
        if found is not None:
            return found
    return None


def d_separated(
    graph: Cid,
    xs: Iterable[str],
    ys: Iterable[str],
    zs: Iterable[str],
) -> tuple[bool, Optional[PathWitness]]:
    """Whether ``zs`` d-separates ``xs`` from ``ys``.

    Returns ``(True, None)`` when every undirected path from ``xs`` to
    ``ys`` is blocked, and ``(False, path)`` with one active path
    otherwise.  The three sets must be pairwise disjoint.
    """
    sx, sy, sz = frozenset(xs), frozenset(ys), frozenset(zs)
    graph._require(*sx, *sy, *sz)
    if sx & sy or sx & sz or sy & sz:
        raise GraphError("d-separation requires pairwise disjoint node sets")
    order = graph.index
    for x in sorted(sx, key=order):
        for y in sorted(sy, key=order):
            path = find_active_path(graph, x, y, sz)
            if path is not None:
                return False, path
    return True, None


# --- reduced graph -------------------------------------------------------------


def reduced_graph(graph: Cid) -> Cid:
    """Delete uninformative observation edges into the decision.

    An edge ``W -> D`` is dropped when ``W`` is d-separated from every
    utility node downstream of ``D`` given the rest of ``D``'s family.  All
    other structure is preserved.  The result is used by the
    value-of-control criterion.
    """
    problems = validate(graph)
    if problems:
        raise GraphError("invalid graph: " + "; ".join(problems))
    d = graph.decision
    keep: list[tuple[str, str]] = []
    removable = {w: True for w in graph.parents(d)}
    down_utils = [u for u in graph.utilities if u in graph.descendants(d)]
    for w in graph.parents(d):
        cond = frozenset(graph.family(d)) - {w}
        for u in down_utils:
            if find_active_path(graph, w, u, cond) is not None:
                removable[w] = False
                break
    for a, b in graph.edges:
        if b == d and removable.get(a, False):
            continue
        keep.append((a, b))
    return graph.replace_edges(keep)


def removed_information_edges(graph: Cid) -> list[tuple[str, str]]:
    """The information edges that :func:`reduced_graph` deletes."""
    kept = set(reduced_graph(graph).edges)
    return [e for e in graph.edges if e not in kept]
