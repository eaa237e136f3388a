"""Conjunctive queries: terms, atoms, well-formedness, and canonical forms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

# Namespaces for generated variables.  User variables never start with an
# underscore (enforced by the parser), so these cannot collide.
CANON_VAR_PREFIX = "_c"
FRESH_VAR_PREFIX = "_v"


@dataclass(frozen=True, order=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


@dataclass(frozen=True, order=True)
class Individual:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Union[Variable, Individual]


@dataclass(frozen=True)
class ConceptAtom:
    concept: str
    term: Term

    def __str__(self) -> str:
        return f"{self.concept}({self.term})"


@dataclass(frozen=True)
class RoleAtom:
    role: str
    subject: Term
    object: Term

    def __str__(self) -> str:
        return f"{self.role}({self.subject},{self.object})"


@dataclass(frozen=True)
class EqAtom:
    left: Term
    right: Term

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


Atom = Union[ConceptAtom, RoleAtom, EqAtom]


def atom_terms(atom: Atom) -> tuple[Term, ...]:
    if isinstance(atom, ConceptAtom):
        return (atom.term,)
    if isinstance(atom, RoleAtom):
        return (atom.subject, atom.object)
    return (atom.left, atom.right)


def atom_vars(atom: Atom) -> tuple[Variable, ...]:
    return tuple(t for t in atom_terms(atom) if isinstance(t, Variable))


@dataclass(frozen=True)
class ConjunctiveQuery:
    """Answer variables (by name, in head order) plus a set of atoms."""

    answer_vars: tuple[str, ...] = ()
    atoms: frozenset[Atom] = frozenset()

    def variables(self) -> frozenset[str]:
        return frozenset(v.name for atom in self.atoms for v in atom_vars(atom))

    def terms(self) -> frozenset[Term]:
        return frozenset(t for atom in self.atoms for t in atom_terms(atom))

    def individuals(self) -> frozenset[str]:
        return frozenset(t.name for t in self.terms() if isinstance(t, Individual))

    @property
    def arity(self) -> int:
        return len(self.answer_vars)

    def is_boolean(self) -> bool:
        return not self.answer_vars

    def validate(self) -> None:
        body_vars = self.variables()
        for v in self.answer_vars:
            if v not in body_vars:
                raise ValueError(f"answer variable ?{v} does not occur in any atom")

    def occurrences(self, var: str) -> int:
        """Number of term positions holding ``var``, counting all atom kinds."""
        return sum(1 for atom in self.atoms for t in atom_terms(atom)
                   if isinstance(t, Variable) and t.name == var)

    def __str__(self) -> str:
        head = ", ".join(f"?{v}" for v in self.answer_vars)
        body = ", ".join(sorted(str(a) for a in self.atoms))
        return f"q({head}) :- {body}."


def make_query(answer_vars: Iterable[str], atoms: Iterable[Atom]) -> ConjunctiveQuery:
    q = ConjunctiveQuery(tuple(answer_vars), frozenset(atoms))
    q.validate()
    return q


def substitute(q: ConjunctiveQuery, mapping: Mapping[str, Term]) -> ConjunctiveQuery:
    """Apply a variable substitution to atoms and to the head.

    Head positions may only be mapped to variables: merging two answer
    variables keeps the arity, with the surviving name in both positions.
    """
    def sub_term(t: Term) -> Term:
        if isinstance(t, Variable) and t.name in mapping:
            return mapping[t.name]
        return t

    def sub_atom(atom: Atom) -> Atom:
        if isinstance(atom, ConceptAtom):
            return ConceptAtom(atom.concept, sub_term(atom.term))
        if isinstance(atom, RoleAtom):
            return RoleAtom(atom.role, sub_term(atom.subject), sub_term(atom.object))
        return EqAtom(sub_term(atom.left), sub_term(atom.right))

    head = []
    for v in q.answer_vars:
        image = mapping.get(v)
        if image is None:
            head.append(v)
        elif isinstance(image, Variable):
            head.append(image.name)
        else:
            raise ValueError(f"cannot substitute answer variable ?{v} by an individual")
    return ConjunctiveQuery(tuple(head), frozenset(sub_atom(a) for a in q.atoms))


def fresh_variable(q: ConjunctiveQuery, hint: int = 0) -> Variable:
    """A variable guaranteed not to occur in ``q``."""
    used = q.variables()
    n = hint
    while f"{FRESH_VAR_PREFIX}{n}" in used:
        n += 1
    return Variable(f"{FRESH_VAR_PREFIX}{n}")


# ---------------------------------------------------------------------------
# Canonicalization
# ---------------------------------------------------------------------------

def _term_key(t: Term, answer: frozenset[str], assigned: Mapping[str, int]):
    if isinstance(t, Individual):
        return (0, t.name, 0)
    if t.name in answer:
        return (1, t.name, 0)
    if t.name in assigned:
        return (2, "", assigned[t.name])
    return (3, "", 0)


def _atom_key(atom: Atom, answer: frozenset[str], assigned: Mapping[str, int]):
    if isinstance(atom, ConceptAtom):
        return (0, atom.concept, _term_key(atom.term, answer, assigned), ())
    if isinstance(atom, RoleAtom):
        return (1, atom.role, _term_key(atom.subject, answer, assigned),
                _term_key(atom.object, answer, assigned))
    k1 = _term_key(atom.left, answer, assigned)
    k2 = _term_key(atom.right, answer, assigned)
    return (2, "", min(k1, k2), max(k1, k2))


def canonicalize(q: ConjunctiveQuery) -> ConjunctiveQuery:
    """Deterministic representative of ``q`` up to renaming of non-answer
    variables and atom order.

    Answer variable names are preserved; non-answer variables are renumbered
    by first occurrence along a stable atom ordering.  Two queries equal up to
    such renaming map to the same value.
    """
    answer = frozenset(q.answer_vars)
    atoms = list(q.atoms)
    assigned: dict[str, int] = {}
    # Refine the existential-variable numbering until the induced atom order
    # is stable; each pass can only sharpen the previous one.
    for _ in range(len(q.variables()) + 2):
        atoms.sort(key=lambda a: _atom_key(a, answer, assigned))
        new_assigned: dict[str, int] = {}
        for atom in atoms:
            for v in atom_vars(atom):
                if v.name not in answer and v.name not in new_assigned:
                    new_assigned[v.name] = len(new_assigned)
        if new_assigned == assigned:
            break
        assigned = new_assigned

    mapping = {name: Variable(f"{CANON_VAR_PREFIX}{i}") for name, i in assigned.items()}

    def ren(t: Term) -> Term:
        if isinstance(t, Variable) and t.name in mapping:
            return mapping[t.name]
        return t

    out: set[Atom] = set()
    for atom in q.atoms:
        if isinstance(atom, ConceptAtom):
            out.add(ConceptAtom(atom.concept, ren(atom.term)))
        elif isinstance(atom, RoleAtom):
            out.add(RoleAtom(atom.role, ren(atom.subject), ren(atom.object)))
        else:
            left, right = ren(atom.left), ren(atom.right)
            # Equality is symmetric; order the terms for stability.
            if (right.__class__.__name__, str(right)) < (left.__class__.__name__, str(left)):
                left, right = right, left
            out.add(EqAtom(left, right))
    return ConjunctiveQuery(q.answer_vars, frozenset(out))


def queries_equivalent(q1: ConjunctiveQuery, q2: ConjunctiveQuery) -> bool:
    """Equality up to canonicalization."""
    return canonicalize(q1) == canonicalize(q2)


def sort_key(q: ConjunctiveQuery) -> tuple:
    """Stable ordering key for sets of canonicalized queries."""
    answer = frozenset(q.answer_vars)
    assigned: dict[str, int] = {}
    for atom in sorted(q.atoms, key=lambda a: _atom_key(a, answer, {})):
        for v in atom_vars(atom):
            if v.name not in answer and v.name not in assigned:
                assigned[v.name] = len(assigned)
    keys = tuple(sorted(_atom_key(a, answer, assigned) for a in q.atoms))
    return (len(q.atoms), keys, q.answer_vars)
