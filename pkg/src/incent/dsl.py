"""Parser and serializer for the model description language.

A file holds a ``cid`` block (graph structure) optionally followed by a
``scim`` block (domains, exogenous distributions, mechanism tables, and
numeric value maps).  A file with only a ``cid`` block parses to a graph;
with both blocks it parses to a full model.

The language is deliberately tiny: mechanisms are extensional row tables,
probabilities and utilities are exact rationals written ``p/q``, and
``#`` starts a comment running to the end of the line.

    cid lecture {
      chance Weather;
      decision Go;
      utility Fun;
      edge Weather -> Go;
      edge Go -> Fun;
    }
    scim {
      domain Weather = { rain, sun };
      exo Weather = { e0: 1/2, e1: 1/2 };
      fn Weather:
        (exo = e0) -> rain;
        (exo = e1) -> sun;
      ...
    }

Parsing never stops at the first problem: syntax errors recover at the
next ``;`` or ``}`` and semantic validation runs over everything that did
parse, so a bad file reports all of its problems, each with a 1-based
line/column span.  Serialization is canonical and lossless: parsing the
output of ``serialize_model`` reproduces the model structurally.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .graph import Cid, NodeKind, validate
from .model import FULL_TABLE_LIMIT, Domain, ModelError, Scim, StructFn, full_rows, table_size

KEYWORDS = {
    "cid", "scim", "chance", "decision", "utility",
    "edge", "domain", "exo", "fn", "value",
}

KIND_WORDS = {
    "chance": NodeKind.CHANCE,
    "decision": NodeKind.DECISION,
    "utility": NodeKind.UTILITY,
}


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass
class ParseError:
    span: SourceSpan
    message: str
    expected: tuple[str, ...] = ()

    def __str__(self) -> str:
        note = ""
        if self.expected:
            note = " (expected " + " or ".join(self.expected) + ")"
        return f"{self.span}: {self.message}{note}"


class ParseFailure(Exception):
    """Raised by :func:`parse_model` with every error found in the input."""

    def __init__(self, errors: list[ParseError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


@dataclass
class _Token:
    kind: str  # ident, int, punctuation kinds, eof
    text: str
    span: SourceSpan


def _lex(text: str, filename: str) -> tuple[list[_Token], list[ParseError]]:
    tokens: list[_Token] = []
    errors: list[ParseError] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        span = SourceSpan(filename, line, col)
        if c.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(_Token("ident", word, SourceSpan(filename, line, col, j - i)))
            col += j - i
            i = j
            continue
        if c.isdigit() or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("int", text[i:j], SourceSpan(filename, line, col, j - i)))
            col += j - i
            i = j
            continue
        if c == "-" and i + 1 < n and text[i + 1] == ">":
            tokens.append(_Token("->", "->", SourceSpan(filename, line, col, 2)))
            i += 2
            col += 2
            continue
        if c in "{}(),;:=/":
            tokens.append(_Token(c, c, span))
            i += 1
            col += 1
            continue
        errors.append(ParseError(span, f"unexpected character {c!r}"))
        i += 1
        col += 1
    tokens.append(_Token("eof", "", SourceSpan(filename, line, col)))
    return tokens, errors


class _Recover(Exception):
    pass


class _Parser:
    """Recursive descent with per-declaration error recovery."""

    def __init__(self, tokens: list[_Token], errors: list[ParseError]):
        self.tokens = tokens
        self.pos = 0
        self.errors = errors

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, span: SourceSpan, message: str, expected: tuple[str, ...] = ()):
        self.errors.append(ParseError(span, message, expected))

    def fail(self, message: str, expected: tuple[str, ...] = ()):
        self.error(self.peek().span, message, expected)
        raise _Recover()

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(f"found {tok.text or 'end of input'!r}", (kind,))
        return self.advance()

    def expect_name(self) -> _Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            self.fail(f"found {tok.text or 'end of input'!r}", ("identifier",))
        return self.advance()

    def expect_word(self, word: str) -> _Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text != word:
            self.fail(f"found {tok.text or 'end of input'!r}", (word,))
        return self.advance()

    def at_word(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.text in words

    def sync(self):
        """Skip to just past the next ';' (or stop before '}'/eof)."""
        while True:
            tok = self.peek()
            if tok.kind == "eof" or tok.kind == "}":
                return
            self.advance()
            if tok.kind == ";":
                return

    def rational(self) -> Fraction:
        num = int(self.expect("int").text)
        if self.peek().kind == "/":
            self.advance()
            den_tok = self.expect("int")
            den = int(den_tok.text)
            if den <= 0:
                self.error(den_tok.span, "denominator must be positive")
                return Fraction(num)
            return Fraction(num, den)
        return Fraction(num)

    # --- blocks ------------------------------------------------------------

    def parse_cid_block(self):
        self.expect_word("cid")
        name = self.expect_name()
        self.expect("{")
        nodes: list[tuple[_Token, NodeKind]] = []
        edges: list[tuple[_Token, _Token]] = []
        while not self.peek().kind in ("}", "eof"):
            try:
                tok = self.peek()
                if self.at_word(*KIND_WORDS):
                    kind = KIND_WORDS[self.advance().text]
                    nodes.append((self.expect_name(), kind))
                    while self.peek().kind == ",":
                        self.advance()
                        nodes.append((self.expect_name(), kind))
                    self.expect(";")
                elif self.at_word("edge"):
                    self.advance()
                    while True:
                        a = self.expect_name()
                        self.expect("->")
                        b = self.expect_name()
                        edges.append((a, b))
                        if self.peek().kind != ",":
                            break
                        self.advance()
                    self.expect(";")
                else:
                    self.fail(
                        f"found {tok.text or 'end of input'!r}",
                        ("chance", "decision", "utility", "edge", "}"),
                    )
            except _Recover:
                self.sync()
        self.expect("}")
        return name, nodes, edges

    def parse_scim_block(self):
        self.expect_word("scim")
        self.expect("{")
        decls = {"domain": [], "exo": [], "value": [], "fn": []}
        while not self.peek().kind in ("}", "eof"):
            try:
                if self.at_word("domain"):
                    span = self.advance().span
                    node = self.expect_name()
                    self.expect("=")
                    self.expect("{")
                    values = [self.expect_name()]
                    while self.peek().kind == ",":
                        self.advance()
                        values.append(self.expect_name())
                    self.expect("}")
                    self.expect(";")
                    decls["domain"].append((span, node, values))
                elif self.at_word("exo"):
                    span = self.advance().span
                    node = self.expect_name()
                    self.expect("=")
                    self.expect("{")
                    entries = [self._exo_entry()]
                    while self.peek().kind == ",":
                        self.advance()
                        entries.append(self._exo_entry())
                    self.expect("}")
                    self.expect(";")
                    decls["exo"].append((span, node, entries))
                elif self.at_word("value"):
                    span = self.advance().span
                    node = self.expect_name()
                    self.expect("{")
                    entries = [self._value_entry()]
                    while self.peek().kind == ",":
                        self.advance()
                        entries.append(self._value_entry())
                    self.expect("}")
                    self.expect(";")
                    decls["value"].append((span, node, entries))
                elif self.at_word("fn"):
                    span = self.advance().span
                    node = self.expect_name()
                    self.expect(":")
                    rows = []
                    while self.peek().kind == "(":
                        rows.append(self._fn_row())
                    if not rows:
                        self.fail("structural function needs at least one row", ("(",))
                    decls["fn"].append((span, node, rows))
                else:
                    self.fail(
                        f"found {self.peek().text or 'end of input'!r}",
                        ("domain", "exo", "fn", "value", "}"),
                    )
            except _Recover:
                self.sync()
        self.expect("}")
        return decls

    def _exo_entry(self):
        name = self.expect_name()
        self.expect(":")
        prob = self.rational()
        return name, prob

    def _value_entry(self):
        name = self.expect_name()
        self.expect(":")
        num = self.rational()
        return name, num

    def _fn_row(self):
        span = self.expect("(").span
        bindings: list[tuple[_Token, _Token]] = []
        exo_value: Optional[_Token] = None
        if self.peek().kind == ",":  # tolerated zero-parent form "(, exo = v)"
            self.advance()
        while True:
            tok = self.peek()
            if tok.kind == "ident" and tok.text == "exo":
                self.advance()
                self.expect("=")
                exo_value = self.expect_name()
                break
            name = self.expect_name()
            self.expect("=")
            val = self.expect_name()
            bindings.append((name, val))
            self.expect(",")
        self.expect(")")
        self.expect("->")
        out = self.expect_name()
        self.expect(";")
        return span, bindings, exo_value, out


def parse_model(text: str, filename: str = "<string>") -> Union[Cid, Scim]:
    """Parse source text into a graph or a full model.

    Raises :class:`ParseFailure` carrying every syntax and validation
    error (with source spans); a failed parse never returns a partial
    result.
    """
    tokens, errors = _lex(text, filename)
    parser = _Parser(tokens, errors)

    name_tok = nodes_raw = edges_raw = None
    scim_decls = None
    try:
        name_tok, nodes_raw, edges_raw = parser.parse_cid_block()
        if parser.at_word("scim"):
            scim_decls = parser.parse_scim_block()
        tok = parser.peek()
        if tok.kind != "eof":
            parser.error(tok.span, f"unexpected trailing input {tok.text!r}")
    except _Recover:
        parser.sync()
    if nodes_raw is None:
        raise ParseFailure(errors or [ParseError(SourceSpan(filename, 1, 1), "empty input")])

    # Assemble and validate the graph.
    node_list: list[tuple[str, NodeKind]] = []
    node_spans: dict[str, SourceSpan] = {}
    for tok, kind in nodes_raw:
        if tok.text in node_spans:
            errors.append(ParseError(tok.span, f"duplicate node declaration: {tok.text}"))
            continue
        node_spans[tok.text] = tok.span
        node_list.append((tok.text, kind))
    edge_list: list[tuple[str, str]] = []
    for a, b in edges_raw:
        for end in (a, b):
            if end.text not in node_spans:
                errors.append(ParseError(end.span, f"edge references undeclared node: {end.text}"))
                break
        else:
            if a.text == b.text:
                errors.append(ParseError(a.span, f"self-loop: {a.text} -> {b.text}"))
            elif (a.text, b.text) in edge_list:
                errors.append(ParseError(a.span, f"duplicate edge: {a.text} -> {b.text}"))
            else:
                edge_list.append((a.text, b.text))

    graph = Cid(node_list, edge_list, name=name_tok.text)
    for problem in validate(graph):
        errors.append(ParseError(name_tok.span, problem))

    if scim_decls is None:
        if errors:
            raise ParseFailure(errors)
        return graph

    model = _assemble_scim(graph, scim_decls, errors, name_tok)
    if errors:
        raise ParseFailure(errors)
    return model


def _assemble_scim(graph: Cid, decls, errors: list[ParseError], name_tok) -> Scim:
    domains: dict[str, Domain] = {}
    numeric: dict[str, dict[str, Fraction]] = {}
    exo_domains: dict[str, Domain] = {}
    exo_dists: dict[str, dict[str, Fraction]] = {}
    fns: dict[str, StructFn] = {}

    for span, node, values in decls["domain"]:
        node_name = node.text
        if node_name not in graph:
            errors.append(ParseError(node.span, f"domain for undeclared node: {node_name}"))
            continue
        if node_name in domains:
            errors.append(ParseError(span, f"duplicate domain for {node_name}"))
            continue
        names = [v.text for v in values]
        if len(set(names)) != len(names):
            errors.append(ParseError(span, f"duplicate values in domain of {node_name}"))
            continue
        domains[node_name] = Domain(tuple(names))

    for span, node, entries in decls["exo"]:
        node_name = node.text
        if node_name not in graph:
            errors.append(ParseError(node.span, f"exo for undeclared node: {node_name}"))
            continue
        if node_name in exo_domains:
            errors.append(ParseError(span, f"duplicate exo declaration for {node_name}"))
            continue
        dist: dict[str, Fraction] = {}
        values: list[str] = []
        ok = True
        for v, p in entries:
            if v.text in dist:
                errors.append(ParseError(v.span, f"duplicate exo value {v.text} for {node_name}"))
                ok = False
                continue
            if p < 0:
                errors.append(ParseError(v.span, f"negative probability for {node_name}:{v.text}"))
                ok = False
            dist[v.text] = p
            values.append(v.text)
        if ok and sum(dist.values(), Fraction(0)) != 1:
            total = sum(dist.values(), Fraction(0))
            errors.append(ParseError(span, f"distribution not normalized: sums to {total}"))
        exo_domains[node_name] = Domain(tuple(values))
        exo_dists[node_name] = dist

    for span, node, entries in decls["value"]:
        node_name = node.text
        if node_name not in graph:
            errors.append(ParseError(node.span, f"value map for undeclared node: {node_name}"))
            continue
        if node_name in numeric:
            errors.append(ParseError(span, f"duplicate value map for {node_name}"))
            continue
        mapping: dict[str, Fraction] = {}
        dom = domains.get(node_name)
        for v, q in entries:
            if dom is not None and v.text not in dom.values:
                errors.append(ParseError(v.span, f"value {v.text} not in domain of {node_name}"))
                continue
            if v.text in mapping:
                errors.append(ParseError(v.span, f"duplicate value entry {v.text}"))
                continue
            mapping[v.text] = q
        numeric[node_name] = mapping

    decision = graph.decisions[0] if len(graph.decisions) == 1 else None
    for span, node, rows in decls["fn"]:
        node_name = node.text
        if node_name not in graph:
            errors.append(ParseError(node.span, f"fn for undeclared node: {node_name}"))
            continue
        if node_name == decision:
            errors.append(
                ParseError(node.span, "decision node must not have a structural function")
            )
            continue
        if node_name in fns:
            errors.append(ParseError(span, f"duplicate fn for {node_name}"))
            continue
        parents = graph.parents(node_name)
        table: dict[tuple[tuple, str], str] = {}
        for row_span, bindings, exo_tok, out in rows:
            bound: dict[str, str] = {}
            row_ok = True
            for p, v in bindings:
                if p.text not in parents:
                    errors.append(
                        ParseError(p.span, f"{p.text} is not a parent of {node_name}")
                    )
                    row_ok = False
                    continue
                if p.text in bound:
                    errors.append(ParseError(p.span, f"parent {p.text} bound twice"))
                    row_ok = False
                    continue
                pdom = domains.get(p.text)
                if pdom is not None and v.text not in pdom.values:
                    errors.append(
                        ParseError(v.span, f"value {v.text} not in domain of {p.text}")
                    )
                    row_ok = False
                bound[p.text] = v.text
            if set(bound) != set(parents):
                missing = sorted(set(parents) - set(bound))
                if missing and row_ok:
                    errors.append(
                        ParseError(row_span, f"row does not bind parents: {', '.join(missing)}")
                    )
                row_ok = False
            edom = exo_domains.get(node_name)
            if exo_tok is not None and edom is not None and exo_tok.text not in edom.values:
                errors.append(
                    ParseError(exo_tok.span, f"value {exo_tok.text} not in exo domain of {node_name}")
                )
                row_ok = False
            dom = domains.get(node_name)
            if dom is not None and out.text not in dom.values:
                errors.append(
                    ParseError(out.span, f"value {out.text} not in domain of {node_name}")
                )
                row_ok = False
            if not row_ok:
                continue
            key = (tuple(bound[p] for p in parents), exo_tok.text)
            if key in table:
                errors.append(ParseError(row_span, "duplicate row"))
                continue
            table[key] = out.text
        fn = StructFn(node_name, parents, rows=table)
        fns[node_name] = fn
        dom = domains.get(node_name)
        edom = exo_domains.get(node_name)
        if dom is not None and edom is not None and all(p in domains for p in parents):
            expected = 1
            for p in parents:
                expected *= len(domains[p].values)
            expected *= len(edom.values)
            if len(table) < expected:
                errors.append(
                    ParseError(span, f"partial structural function for {node_name}")
                )

    for n in graph.node_names:
        if n not in domains:
            errors.append(ParseError(name_tok.span, f"missing domain for node: {n}"))
        if n not in exo_domains:
            errors.append(ParseError(name_tok.span, f"missing exo declaration for node: {n}"))
        if n != decision and n not in fns:
            errors.append(ParseError(name_tok.span, f"missing fn declaration for node: {n}"))
        if graph.kind(n) is NodeKind.UTILITY:
            mapping = numeric.get(n)
            dom = domains.get(n)
            if mapping is None:
                errors.append(ParseError(name_tok.span, f"utility node {n} needs a value map"))
            elif dom is not None and set(mapping) != set(dom.values):
                errors.append(
                    ParseError(name_tok.span, f"value map of utility {n} is not total")
                )

    for n, mapping in numeric.items():
        if n in domains:
            domains[n] = Domain(domains[n].values, mapping)

    return Scim(
        graph=graph,
        domains=domains,
        exo_domains=exo_domains,
        exo_dists=exo_dists,
        fns=fns,
        name=name_tok.text,
    )


# --- serialization ------------------------------------------------------------


def _fmt_rational(q: Fraction) -> str:
    return str(q)


def serialize_model(model: Union[Cid, Scim]) -> str:
    """Canonical text form; parsing it back reproduces the model.

    Rationals are always written exactly (``1/2``, never a decimal).
    Models whose mechanism tables exceed the full-table limit cannot be
    serialized and raise :class:`~incent.model.ModelError`.
    """
    if isinstance(model, Cid):
        return _serialize_cid(model, model.name)
    out = [_serialize_cid(model.graph, model.name)]
    out.append("scim {")
    for n in model.graph.node_names:
        values = ", ".join(str(v) for v in model.domains[n].values)
        out.append(f"  domain {n} = {{ {values} }};")
    for n in model.graph.node_names:
        dist = model.exo_dists[n]
        entries = ", ".join(
            f"{v}: {_fmt_rational(dist[v])}" for v in model.exo_domains[n].values
        )
        out.append(f"  exo {n} = {{ {entries} }};")
    for n in model.graph.node_names:
        dom = model.domains[n]
        if dom.numeric is None:
            continue
        entries = ", ".join(f"{v}: {_fmt_rational(dom.numeric[v])}" for v in dom.values)
        out.append(f"  value {n} {{ {entries} }};")
    for n in model.graph.node_names:
        if n not in model.fns:
            continue
        if table_size(model, n) > FULL_TABLE_LIMIT:
            raise ModelError(f"structural function of {n} too large to serialize")
        fn = model.fns[n]
        out.append(f"  fn {n}:")
        for (pv, e), value in full_rows(model, n):
            bindings = [f"{p} = {v}" for p, v in zip(fn.parents, pv)]
            bindings.append(f"exo = {e}")
            out.append(f"    ({', '.join(bindings)}) -> {value};")
    out.append("}")
    return "\n".join(out) + "\n"


def _serialize_cid(graph: Cid, name: str) -> str:
    out = [f"cid {name} {{"]
    for n, kind in graph.nodes:
        out.append(f"  {kind.value} {n};")
    for a, b in graph.edges:
        out.append(f"  edge {a} -> {b};")
    out.append("}")
    return "\n".join(out)
