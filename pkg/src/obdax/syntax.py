"""Text formats: `.dlhr` knowledge-base files and `.cq` query files.

One statement per line-terminated `.`; `#` starts a line comment.  Concept
names start uppercase, role names lowercase, individuals either way; `"..."`
quoting admits spaces.  Parsing is error-recovering: every malformed
statement yields a diagnostic with its source span and parsing continues.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .dimensions import OrderConstraint
from .kb import (ABox, Axiom, BasicConcept, BOT, Bot, ConceptInc, Cri,
                 DisjConcepts, DisjRoles, Exists, Named, Role, RoleInc, TBox,
                 TOP, Top)
from .model import AnswerSet
from .queries import (Atom, ConceptAtom, ConjunctiveQuery, EqAtom, Individual,
                      RoleAtom, Variable)

KEYWORDS = {"sub", "o", "exists", "top", "bot", "simple",
            "disjoint", "disjointRole", "ord"}

_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_VAR_RE = re.compile(r"\?([A-Za-z][A-Za-z0-9_]*)")


@dataclass(frozen=True)
class SourceSpan:
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    message: str
    span: SourceSpan

    def __str__(self) -> str:
        return f"{self.span}: {self.message}"


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "var" | "string" | "punct"
    text: str
    span: SourceSpan


def _tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diagnostics: list[Diagnostic] = []
    line = 1
    col = 1
    i = 0
    n = len(text)

    def span(length: int) -> SourceSpan:
        return SourceSpan(line, col, line, col + length)

    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == ":" and i + 1 < n and text[i + 1] == "-":
            tokens.append(Token("punct", ":-", span(2)))
            i += 2
            col += 2
            continue
        if ch in "(){},<=.-":
            tokens.append(Token("punct", ch, span(1)))
            i += 1
            col += 1
            continue
        if ch == '"':
            j = text.find('"', i + 1)
            if j == -1:
                diagnostics.append(Diagnostic("unterminated string", span(1)))
                break
            content = text[i + 1:j]
            tokens.append(Token("string", content, span(j - i + 1)))
            col += j - i + 1
            i = j + 1
            continue
        if ch == "?":
            m = _VAR_RE.match(text, i)
            if not m:
                diagnostics.append(Diagnostic("'?' must start a variable name", span(1)))
                i += 1
                col += 1
                continue
            tokens.append(Token("var", m.group(1), span(len(m.group(0)))))
            col += len(m.group(0))
            i = m.end()
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(Token("ident", m.group(0), span(len(m.group(0)))))
            col += len(m.group(0))
            i = m.end()
            continue
        diagnostics.append(Diagnostic(f"unexpected character '{ch}'", span(1)))
        i += 1
        col += 1
    return tokens, diagnostics


def _statement_groups(tokens: list[Token]) -> list[list[Token]]:
    groups: list[list[Token]] = []
    current: list[Token] = []
    for token in tokens:
        if token.kind == "punct" and token.text == ".":
            if current:
                groups.append(current)
            current = []
        else:
            current.append(token)
    if current:
        groups.append(current)
    return groups


class _ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(message)
        self.diagnostic = Diagnostic(message, span)


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if not self.done else None

    def take(self) -> Token:
        if self.done:
            last = self.tokens[-1].span if self.tokens else SourceSpan(1, 1, 1, 1)
            raise _ParseError("unexpected end of statement", last)
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect_punct(self, text: str) -> Token:
        token = self.take()
        if token.kind != "punct" or token.text != text:
            raise _ParseError(f"expected '{text}', found '{token.text}'", token.span)
        return token

    def expect_end(self) -> None:
        token = self.peek()
        if token is not None:
            raise _ParseError(f"unexpected trailing '{token.text}'", token.span)


def _is_concept_name(name: str) -> bool:
    return bool(name) and name[0].isupper()


def _is_role_name(name: str) -> bool:
    return bool(name) and name[0].islower()


def _name_token(cur: _Cursor, what: str) -> Token:
    token = cur.take()
    if token.kind not in ("ident", "string"):
        raise _ParseError(f"expected {what}, found '{token.text}'", token.span)
    if token.text.startswith("_"):
        raise _ParseError("identifiers starting with '_' are reserved", token.span)
    return token


def _concept_token(cur: _Cursor) -> Token:
    token = _name_token(cur, "a concept name")
    if not _is_concept_name(token.text):
        raise _ParseError(f"concept names start uppercase: '{token.text}'", token.span)
    return token


def _role(cur: _Cursor, allow_inverse: bool = True) -> Role:
    token = _name_token(cur, "a role name")
    if not _is_role_name(token.text):
        raise _ParseError(f"role names start lowercase: '{token.text}'", token.span)
    nxt = cur.peek()
    if nxt is not None and nxt.kind == "punct" and nxt.text == "-":
        cur.take()
        if not allow_inverse:
            raise _ParseError("inverse roles are not allowed here", nxt.span)
        return Role(token.text, inverted=True)
    return Role(token.text)


def _side(cur: _Cursor):
    """('concept', BasicConcept) or ('role', Role)."""
    token = cur.peek()
    if token is None:
        raise _ParseError("expected an inclusion side",
                          SourceSpan(1, 1, 1, 1))
    if token.kind == "ident" and token.text == "top":
        cur.take()
        return ("concept", TOP)
    if token.kind == "ident" and token.text == "bot":
        cur.take()
        return ("concept", BOT)
    if token.kind == "ident" and token.text == "exists":
        cur.take()
        return ("concept", Exists(_role(cur)))
    name = _name_token(cur, "a concept or role name")
    if _is_concept_name(name.text):
        return ("concept", Named(name.text))
    role = Role(name.text)
    nxt = cur.peek()
    if nxt is not None and nxt.kind == "punct" and nxt.text == "-":
        cur.take()
        role = Role(name.text, inverted=True)
    return ("role", role)


def _individual(cur: _Cursor) -> str:
    token = _name_token(cur, "an individual name")
    return token.text


@dataclass
class KBDocument:
    tbox: TBox
    abox: ABox
    constraints: tuple[OrderConstraint, ...]
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def parse_kb(text: str) -> KBDocument:
    tokens, diagnostics = _tokenize(text)
    axioms: list[Axiom] = []
    simple: set[str] = set()
    concept_assertions: set[tuple[str, str]] = set()
    role_assertions: set[tuple[str, str, str]] = set()
    constraints: list[OrderConstraint] = []
    constraint_roles: set[str] = set()

    for group in _statement_groups(tokens):
        cur = _Cursor(group)
        try:
            head = group[0]
            if head.kind == "ident" and head.text == "simple":
                cur.take()
                role = _role(cur, allow_inverse=False)
                cur.expect_end()
                simple.add(role.name)
            elif head.kind == "ident" and head.text == "ord":
                cur.take()
                role = _role(cur, allow_inverse=False)
                cur.expect_punct("{")
                pairs: set[tuple[str, str]] = set()
                while True:
                    first = _concept_token(cur).text
                    cur.expect_punct("<")
                    second = _concept_token(cur).text
                    pairs.add((first, second))
                    nxt = cur.peek()
                    if nxt is not None and nxt.kind == "punct" and nxt.text == ",":
                        cur.take()
                        continue
                    break
                cur.expect_punct("}")
                cur.expect_end()
                if role.name in constraint_roles:
                    raise _ParseError(
                        f"duplicate order constraint for role '{role.name}'", head.span)
                concepts = frozenset(c for pair in pairs for c in pair)
                try:
                    constraints.append(OrderConstraint(role.name, concepts,
                                                       frozenset(pairs)))
                    constraint_roles.add(role.name)
                except ValueError as exc:
                    raise _ParseError(str(exc), head.span)
            elif head.kind == "ident" and head.text == "disjoint":
                cur.take()
                kind1, first = _side(cur)
                kind2, second = _side(cur)
                cur.expect_end()
                if kind1 != "concept" or kind2 != "concept":
                    raise _ParseError("'disjoint' takes two concepts", head.span)
                axioms.append(DisjConcepts(first, second))
            elif head.kind == "ident" and head.text == "disjointRole":
                cur.take()
                first = _role(cur)
                second = _role(cur)
                cur.expect_end()
                axioms.append(DisjRoles(first, second))
            elif (len(group) >= 2 and group[1].kind == "punct"
                  and group[1].text == "("):
                _parse_assertion(cur, concept_assertions, role_assertions)
            else:
                _parse_inclusion(cur, axioms)
        except _ParseError as exc:
            diagnostics.append(exc.diagnostic)
    tbox = TBox(tuple(axioms), frozenset(simple))
    abox = ABox(frozenset(concept_assertions), frozenset(role_assertions))
    return KBDocument(tbox, abox, tuple(constraints), tuple(diagnostics))


def _parse_assertion(cur: _Cursor, concept_assertions, role_assertions) -> None:
    name = _name_token(cur, "a predicate name")
    cur.expect_punct("(")
    args = [_individual(cur)]
    nxt = cur.peek()
    if nxt is not None and nxt.kind == "punct" and nxt.text == ",":
        cur.take()
        args.append(_individual(cur))
    cur.expect_punct(")")
    cur.expect_end()
    if len(args) == 1:
        if not _is_concept_name(name.text):
            raise _ParseError(
                f"concept assertions need an uppercase concept name: '{name.text}'",
                name.span)
        concept_assertions.add((name.text, args[0]))
    else:
        if not _is_role_name(name.text):
            raise _ParseError(
                f"role assertions need a lowercase role name: '{name.text}'",
                name.span)
        role_assertions.add((name.text, args[0], args[1]))


def _parse_inclusion(cur: _Cursor, axioms: list[Axiom]) -> None:
    start = cur.peek()
    kind1, first = _side(cur)
    token = cur.take()
    if token.kind == "ident" and token.text == "o":
        if kind1 != "role" or first.inverted:
            raise _ParseError("chain axioms are over plain role names", token.span)
        second = _role(cur, allow_inverse=False)
        keyword = cur.take()
        if keyword.kind != "ident" or keyword.text != "sub":
            raise _ParseError(f"expected 'sub', found '{keyword.text}'", keyword.span)
        target = _role(cur, allow_inverse=False)
        cur.expect_end()
        axioms.append(Cri(first, second, target))
        return
    if token.kind != "ident" or token.text != "sub":
        raise _ParseError(f"expected 'sub', found '{token.text}'", token.span)
    kind2, second = _side(cur)
    cur.expect_end()
    if kind1 == "concept" and kind2 == "concept":
        axioms.append(ConceptInc(first, second))
    elif kind1 == "role" and kind2 == "role":
        axioms.append(RoleInc(first, second))
    else:
        raise _ParseError("inclusion sides must be both concepts or both roles",
                          start.span if start else token.span)


# ---------------------------------------------------------------------------
# Query parsing
# ---------------------------------------------------------------------------

@dataclass
class QueryDocument:
    query: ConjunctiveQuery | None
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.query is not None and not self.diagnostics


def parse_query(text: str) -> QueryDocument:
    tokens, diagnostics = _tokenize(text)
    if diagnostics:
        return QueryDocument(None, tuple(diagnostics))
    # A single optional trailing '.' ends the query.
    if tokens and tokens[-1].kind == "punct" and tokens[-1].text == ".":
        tokens = tokens[:-1]
    cur = _Cursor(tokens)
    try:
        _name_token(cur, "a query name")
        cur.expect_punct("(")
        answer_vars: list[str] = []
        nxt = cur.peek()
        if nxt is not None and nxt.kind == "var":
            answer_vars.append(cur.take().text)
            while True:
                nxt = cur.peek()
                if nxt is not None and nxt.kind == "punct" and nxt.text == ",":
                    cur.take()
                    token = cur.take()
                    if token.kind != "var":
                        raise _ParseError("answer positions must be variables",
                                          token.span)
                    answer_vars.append(token.text)
                else:
                    break
        cur.expect_punct(")")
        cur.expect_punct(":-")
        atoms: list[Atom] = []
        if not cur.done:
            atoms.append(_parse_atom(cur))
            while not cur.done:
                cur.expect_punct(",")
                atoms.append(_parse_atom(cur))
        query = ConjunctiveQuery(tuple(answer_vars), frozenset(atoms))
        body_vars = query.variables()
        for v in answer_vars:
            if v not in body_vars:
                raise _ParseError(f"answer variable ?{v} does not occur in the body",
                                  tokens[0].span if tokens else SourceSpan(1, 1, 1, 1))
        return QueryDocument(query, ())
    except _ParseError as exc:
        return QueryDocument(None, (exc.diagnostic,))


def _parse_term(cur: _Cursor):
    token = cur.take()
    if token.kind == "var":
        return Variable(token.text)
    if token.kind in ("ident", "string"):
        if token.text.startswith("_"):
            raise _ParseError("identifiers starting with '_' are reserved", token.span)
        return Individual(token.text)
    raise _ParseError(f"expected a term, found '{token.text}'", token.span)


def _parse_atom(cur: _Cursor) -> Atom:
    token = cur.peek()
    if token is None:
        raise _ParseError("expected an atom", SourceSpan(1, 1, 1, 1))
    if token.kind in ("ident", "string"):
        following = cur.tokens[cur.pos + 1] if cur.pos + 1 < len(cur.tokens) else None
        if following is not None and following.kind == "punct" and following.text == "(":
            name = _name_token(cur, "a predicate name")
            cur.expect_punct("(")
            first = _parse_term(cur)
            nxt = cur.peek()
            if nxt is not None and nxt.kind == "punct" and nxt.text == ",":
                cur.take()
                second = _parse_term(cur)
                cur.expect_punct(")")
                if not _is_role_name(name.text):
                    raise _ParseError(
                        f"role atoms need a lowercase role name: '{name.text}'",
                        name.span)
                return RoleAtom(name.text, first, second)
            cur.expect_punct(")")
            if not _is_concept_name(name.text):
                raise _ParseError(
                    f"concept atoms need an uppercase concept name: '{name.text}'",
                    name.span)
            return ConceptAtom(name.text, first)
    left = _parse_term(cur)
    cur.expect_punct("=")
    right = _parse_term(cur)
    return EqAtom(left, right)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _quote(name: str) -> str:
    if _IDENT_RE.fullmatch(name):
        return name
    return f'"{name}"'


def role_text(role: Role) -> str:
    return f"{_quote(role.name)}-" if role.inverted else _quote(role.name)


def concept_text(concept: BasicConcept) -> str:
    if isinstance(concept, Top):
        return "top"
    if isinstance(concept, Bot):
        return "bot"
    if isinstance(concept, Named):
        return _quote(concept.name)
    return f"exists {role_text(concept.role)}"


def axiom_text(axiom: Axiom) -> str:
    if isinstance(axiom, ConceptInc):
        return f"{concept_text(axiom.lhs)} sub {concept_text(axiom.rhs)}."
    if isinstance(axiom, RoleInc):
        return f"{role_text(axiom.lhs)} sub {role_text(axiom.rhs)}."
    if isinstance(axiom, Cri):
        return (f"{role_text(axiom.left)} o {role_text(axiom.guard)} "
                f"sub {role_text(axiom.target)}.")
    if isinstance(axiom, DisjConcepts):
        return f"disjoint {concept_text(axiom.first)} {concept_text(axiom.second)}."
    if isinstance(axiom, DisjRoles):
        return f"disjointRole {role_text(axiom.first)} {role_text(axiom.second)}."
    raise TypeError(f"unknown axiom type {type(axiom).__name__}")


def constraint_text(constraint: OrderConstraint) -> str:
    pairs = ", ".join(f"{_quote(a)} < {_quote(b)}" for a, b in sorted(constraint.order))
    return f"ord {_quote(constraint.role)} {{ {pairs} }}."


def serialize_kb(tbox: TBox, abox: ABox,
                 constraints: Sequence[OrderConstraint] = ()) -> str:
    lines: list[str] = []
    for name in sorted(tbox.simple_roles):
        lines.append(f"simple {_quote(name)}.")
    for axiom in tbox.axioms:
        lines.append(axiom_text(axiom))
    for constraint in constraints:
        lines.append(constraint_text(constraint))
    for concept, a in sorted(abox.concept_assertions):
        lines.append(f"{_quote(concept)}({_quote(a)}).")
    for role, a, b in sorted(abox.role_assertions):
        lines.append(f"{_quote(role)}({_quote(a)}, {_quote(b)}).")
    return "\n".join(lines) + ("\n" if lines else "")


def term_text(term) -> str:
    if isinstance(term, Variable):
        return f"?{term.name}"
    return _quote(term.name)


def atom_text(atom: Atom) -> str:
    if isinstance(atom, ConceptAtom):
        return f"{_quote(atom.concept)}({term_text(atom.term)})"
    if isinstance(atom, RoleAtom):
        return f"{_quote(atom.role)}({term_text(atom.subject)},{term_text(atom.object)})"
    return f"{term_text(atom.left)} = {term_text(atom.right)}"


def query_text(q: ConjunctiveQuery, name: str = "q") -> str:
    head = ", ".join(f"?{v}" for v in q.answer_vars)
    body = ", ".join(sorted(atom_text(a) for a in q.atoms))
    return f"{name}({head}) :- {body}."


def ucq_text(queries: Iterable[ConjunctiveQuery]) -> str:
    from .queries import sort_key
    lines = [query_text(q) for q in sorted(queries, key=sort_key)]
    return "\n".join(lines) + ("\n" if lines else "")


def answers_text(answers: AnswerSet) -> str:
    lines = [", ".join(row) for row in answers.sorted_tuples()]
    return "\n".join(lines) + ("\n" if lines else "")


def answers_json(answers: AnswerSet) -> str:
    payload = {
        "answers": [list(row) for row in answers.sorted_tuples()],
        "method": answers.method.value,
        "exact": answers.exact,
    }
    return json.dumps(payload, sort_keys=True)


def serialize(value) -> str:
    """Text form of a TBox, ABox, query, UCQ, or answer set."""
    if isinstance(value, TBox):
        return serialize_kb(value, ABox())
    if isinstance(value, ABox):
        return serialize_kb(TBox(), value)
    if isinstance(value, ConjunctiveQuery):
        return query_text(value) + "\n"
    if isinstance(value, AnswerSet):
        return answers_text(value)
    if isinstance(value, (list, tuple, set, frozenset)) and all(
            isinstance(v, ConjunctiveQuery) for v in value):
        return ucq_text(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")
