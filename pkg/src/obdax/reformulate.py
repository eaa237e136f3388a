"""Enumeration and application of query reformulation moves.

Restraining moves shrink the certain answers; relaxation moves grow them.
Ontology-driven moves are justified by a TBox axiom; data-driven moves by an
entailed fact or a containment that holds over the current data.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Sequence

from . import rewriting
from .errors import StaleMoveError, UnsupportedShapeError
from .kb import (Axiom, ConceptInc, Cri, Exists, Named, RoleInc, TBox,
                 is_reserved_name)
from .queries import (Atom, ConceptAtom, ConjunctiveQuery, EqAtom, Individual,
                      RoleAtom, Variable, canonicalize, fresh_variable,
                      sort_key, substitute)

if TYPE_CHECKING:
    from .context import KBContext

RESTRAIN_RULES = ("S1", "S2", "S3", "S4", "S5", "S6", "S7",
                  "SD1", "SD2", "SD3", "SD4", "SD5", "SD6")
RELAX_RULES = ("G1", "G2", "G3", "G4", "G5", "G6", "G7",
               "GD1", "GD2", "GD3", "GD4", "GD5", "GD6")

# Containment shapes: a lone category atom, or a role step into a category.
AtomicShape = tuple[str, str]            # ("atomic", concept)
PatternShape = tuple[str, str, str]      # ("pattern", role, concept)


@dataclass(frozen=True)
class Justification:
    kind: str  # "axiom" | "fact" | "containment" | "unification"
    axiom: Axiom | None = None
    fact: tuple | None = None

    def describe(self) -> str:
        if self.kind == "axiom":
            return f"axiom {self.axiom}"
        if self.kind == "fact":
            if self.fact[0] == "concept":
                return f"entailed fact {self.fact[1]}({self.fact[2]})"
            return f"entailed fact {self.fact[1]}({self.fact[2]},{self.fact[3]})"
        if self.kind == "containment":
            sub, sup = self.fact
            return (f"data containment: {_shape_text(sub)} is contained in "
                    f"{_shape_text(sup)}")
        if self.kind == "drop":
            return "dropping an atom over an unconstrained variable"
        return f"unify ?{self.fact[0]} into ?{self.fact[1]}"

    def sort_text(self) -> str:
        return self.describe()


def _shape_text(shape: tuple) -> str:
    if shape[0] == "atomic":
        return f"{shape[1]}(x)"
    return f"{shape[1]}(x,y) and {shape[2]}(y)"


@dataclass(frozen=True)
class RuleInstance:
    rule_id: str
    direction: str  # "restrain" | "relax"
    data_driven: bool
    target: tuple[Atom, ...]
    justification: Justification
    result: ConjunctiveQuery
    source: ConjunctiveQuery  # canonical form of the query it was computed for
    kb_version: int = 0
    variant: str = ""  # disambiguates e.g. subject/object bindings

    @property
    def move_id(self) -> str:
        payload = "|".join([
            self.rule_id,
            ";".join(sorted(str(a) for a in self.target)),
            self.justification.describe(),
            self.variant,
        ])
        return hashlib.sha1(payload.encode()).hexdigest()[:12]

    def describe(self) -> str:
        what = ", ".join(sorted(str(a) for a in self.target)) or "query variables"
        return f"{self.rule_id} on {what} using {self.justification.describe()}"


def apply_move(q: ConjunctiveQuery, move: RuleInstance) -> ConjunctiveQuery:
    """Return the move's precomputed result, guarding against stale moves."""
    if canonicalize(q) != move.source:
        raise StaleMoveError(
            f"move {move.move_id} was computed for a different query")
    return move.result


# ---------------------------------------------------------------------------
# Ontology-driven relaxations (duals of the specialization rules)
# ---------------------------------------------------------------------------

def relax_step_instances(q: ConjunctiveQuery, tbox: TBox
                         ) -> Iterator[tuple[str, tuple[Atom, ...], Axiom | None,
                                             ConjunctiveQuery]]:
    answer = frozenset(q.answer_vars)

    def non_answer_var(term) -> bool:
        return isinstance(term, Variable) and term.name not in answer

    for ax in tbox.axioms:
        if isinstance(ax, ConceptInc):
            lhs, rhs = ax.lhs, ax.rhs
            if isinstance(lhs, Named) and isinstance(rhs, Named):
                for atom in q.atoms:
                    if isinstance(atom, ConceptAtom) and atom.concept == lhs.name:
                        result = _swap(q, {atom}, {ConceptAtom(rhs.name, atom.term)})
                        yield "G1", (atom,), ax, result
            elif isinstance(lhs, Named) and isinstance(rhs, Exists):
                for atom in q.atoms:
                    if isinstance(atom, ConceptAtom) and atom.concept == lhs.name:
                        z = fresh_variable(q)
                        result = _swap(q, {atom},
                                       {rewriting._edge_atom(rhs.role, atom.term, z)})
                        yield "G2", (atom,), ax, result
            elif isinstance(lhs, Exists) and isinstance(rhs, Named):
                for atom, x, y in rewriting._edge_atoms(q, lhs.role):
                    if non_answer_var(y) and q.occurrences(y.name) == 1:
                        result = _swap(q, {atom}, {ConceptAtom(rhs.name, x)})
                        yield "G3", (atom,), ax, result
        elif isinstance(ax, RoleInc):
            rule = "G5" if ax.rhs.inverted else "G4"
            for atom in q.atoms:
                if isinstance(atom, RoleAtom) and atom.role == ax.lhs.name:
                    replacement = rewriting._edge_atom(ax.rhs, atom.subject, atom.object)
                    yield rule, (atom,), ax, _swap(q, {atom}, {replacement})
        elif isinstance(ax, Cri) and ax.left == ax.target:
            for head in q.atoms:
                if not (isinstance(head, RoleAtom) and head.role == ax.target.name):
                    continue
                y = head.object
                if not non_answer_var(y) or q.occurrences(y.name) != 2:
                    continue
                for step in q.atoms:
                    if (isinstance(step, RoleAtom) and step.role == ax.guard.name
                            and step is not head and step.subject == y):
                        replacement = RoleAtom(head.role, head.subject, step.object)
                        yield ("G6", (head, step), ax,
                               _swap(q, {head, step}, {replacement}))

    # G7: dropping a concept atom over a non-answer variable.
    for atom in q.atoms:
        if (isinstance(atom, ConceptAtom) and isinstance(atom.term, Variable)
                and atom.term.name not in answer):
            yield "G7", (atom,), None, _swap(q, {atom}, set())


def _swap(q: ConjunctiveQuery, removed: set, added: set) -> ConjunctiveQuery:
    return ConjunctiveQuery(q.answer_vars, (q.atoms - frozenset(removed)) | frozenset(added))


# ---------------------------------------------------------------------------
# Data-driven rules
# ---------------------------------------------------------------------------

def _atomic_query(concept: str) -> ConjunctiveQuery:
    return ConjunctiveQuery(("x",), frozenset({ConceptAtom(concept, Variable("x"))}))


def _pattern_query(role: str, concept: str) -> ConjunctiveQuery:
    x, y = Variable("x"), Variable("y")
    return ConjunctiveQuery(("x",), frozenset({RoleAtom(role, x, y),
                                               ConceptAtom(concept, y)}))


def _shape_of(q: ConjunctiveQuery) -> tuple | None:
    if len(q.answer_vars) != 1:
        return None
    head = q.answer_vars[0]
    atoms = sorted(q.atoms, key=str)
    if len(atoms) == 1 and isinstance(atoms[0], ConceptAtom):
        atom = atoms[0]
        if isinstance(atom.term, Variable) and atom.term.name == head:
            return ("atomic", atom.concept)
    if len(atoms) == 2:
        roles = [a for a in atoms if isinstance(a, RoleAtom)]
        concepts = [a for a in atoms if isinstance(a, ConceptAtom)]
        if len(roles) == 1 and len(concepts) == 1:
            r, c = roles[0], concepts[0]
            if (isinstance(r.subject, Variable) and r.subject.name == head
                    and isinstance(r.object, Variable)
                    and r.object.name != head
                    and r.object == c.term):
                return ("pattern", r.role, c.concept)
    return None


def _query_for_shape(shape: tuple) -> ConjunctiveQuery:
    if shape[0] == "atomic":
        return _atomic_query(shape[1])
    return _pattern_query(shape[1], shape[2])


def query_containment_k(q1: ConjunctiveQuery, q2: ConjunctiveQuery,
                        ctx: "KBContext") -> bool:
    """Whether the certain answers of q1 are contained in those of q2 over
    this knowledge base.  Only the restricted shapes used by the data-driven
    rules are accepted; results are memoized per KB snapshot."""
    shape1, shape2 = _shape_of(q1), _shape_of(q2)
    if shape1 is None or shape2 is None:
        raise UnsupportedShapeError(
            "containment is decided only for single-category or role-step queries")
    return _containment(shape1, shape2, ctx)


def _containment(sub: tuple, sup: tuple, ctx: "KBContext") -> bool:
    if sub == sup:
        return True
    key = (sub, sup)
    cached = ctx.containment_cache.get(key)
    if cached is None:
        left = ctx.certain(_query_for_shape(sub)).tuples
        right = ctx.certain(_query_for_shape(sup)).tuples
        cached = left <= right
        ctx.containment_cache[key] = cached
    return cached


def _user_concepts(ctx: "KBContext") -> list[str]:
    return sorted(ctx.user_signature.concepts)


def _pattern_shapes(ctx: "KBContext") -> list[PatternShape]:
    return [("pattern", role, concept)
            for role in sorted(ctx.user_signature.roles)
            for concept in _user_concepts(ctx)]


def _restrain_data_instances(q: ConjunctiveQuery, ctx: "KBContext"
                             ) -> Iterator[tuple[str, tuple[Atom, ...],
                                                 Justification, str,
                                                 ConjunctiveQuery]]:
    answer = frozenset(q.answer_vars)
    concept_atoms = sorted((a for a in q.atoms if isinstance(a, ConceptAtom)), key=str)
    role_atoms = sorted((a for a in q.atoms if isinstance(a, RoleAtom)), key=str)

    for atom in concept_atoms:  # SD1
        if not isinstance(atom.term, Variable):
            continue
        for name in sorted(ctx.entailed_concept_instances(atom.concept)):
            just = Justification("fact", fact=("concept", atom.concept, name))
            result = _swap(q, set(), {EqAtom(atom.term, Individual(name))})
            yield "SD1", (atom,), just, "", result

    for atom in role_atoms:  # SD2
        for a, b in sorted(ctx.entailed_role_pairs(atom.role)):
            just = Justification("fact", fact=("role", atom.role, a, b))
            if isinstance(atom.subject, Variable):
                result = _swap(q, set(), {EqAtom(atom.subject, Individual(a))})
                yield "SD2", (atom,), just, "subject", result
            if isinstance(atom.object, Variable):
                result = _swap(q, set(), {EqAtom(atom.object, Individual(b))})
                yield "SD2", (atom,), just, "object", result

    for atom in concept_atoms:  # SD3 / SD4
        for concept in _user_concepts(ctx):
            if concept == atom.concept:
                continue
            sub = ("atomic", concept)
            sup = ("atomic", atom.concept)
            if _containment(sub, sup, ctx):
                just = Justification("containment", fact=(sub, sup))
                result = _swap(q, {atom}, {ConceptAtom(concept, atom.term)})
                yield "SD3", (atom,), just, "", result
        for shape in _pattern_shapes(ctx):
            sup = ("atomic", atom.concept)
            if _containment(shape, sup, ctx):
                z = fresh_variable(q)
                just = Justification("containment", fact=(shape, sup))
                result = _swap(q, {atom}, {RoleAtom(shape[1], atom.term, z),
                                           ConceptAtom(shape[2], z)})
                yield "SD4", (atom,), just, "", result

    for head, step in _step_patterns(q, answer):  # SD5 / SD6
        pattern = ("pattern", head.role, step.concept)
        for concept in _user_concepts(ctx):
            sub = ("atomic", concept)
            if _containment(sub, pattern, ctx):
                just = Justification("containment", fact=(sub, pattern))
                result = _swap(q, {head, step}, {ConceptAtom(concept, head.subject)})
                yield "SD5", (head, step), just, "", result
        for shape in _pattern_shapes(ctx):
            if shape[1:] == (head.role, step.concept):
                continue
            if _containment(shape, pattern, ctx):
                z = fresh_variable(q)
                just = Justification("containment", fact=(shape, pattern))
                result = _swap(q, {head, step},
                               {RoleAtom(shape[1], head.subject, z),
                                ConceptAtom(shape[2], z)})
                yield "SD6", (head, step), just, "", result


def _relax_data_instances(q: ConjunctiveQuery, ctx: "KBContext"
                          ) -> Iterator[tuple[str, tuple[Atom, ...],
                                              Justification, str,
                                              ConjunctiveQuery]]:
    answer = frozenset(q.answer_vars)
    eq_atoms = []
    for atom in sorted((a for a in q.atoms if isinstance(a, EqAtom)), key=str):
        if isinstance(atom.left, Variable) and isinstance(atom.right, Individual):
            eq_atoms.append((atom, atom.left, atom.right.name))
        elif isinstance(atom.right, Variable) and isinstance(atom.left, Individual):
            eq_atoms.append((atom, atom.right, atom.left.name))

    for atom, var, name in eq_atoms:  # GD1 / GD2
        for concept in _user_concepts(ctx):
            if name in ctx.entailed_concept_instances(concept):
                just = Justification("fact", fact=("concept", concept, name))
                result = _swap(q, {atom}, {ConceptAtom(concept, var)})
                yield "GD1", (atom,), just, "", result
        for role in sorted(ctx.user_signature.roles):
            for a, b in sorted(ctx.entailed_role_pairs(role)):
                if a != name:
                    continue
                z = fresh_variable(q)
                just = Justification("fact", fact=("role", role, a, b))
                result = _swap(q, {atom}, {RoleAtom(role, var, z),
                                           EqAtom(z, Individual(b))})
                yield "GD2", (atom,), just, "", result

    concept_atoms = sorted((a for a in q.atoms if isinstance(a, ConceptAtom)), key=str)
    for atom in concept_atoms:  # GD3 / GD4
        for concept in _user_concepts(ctx):
            if concept == atom.concept:
                continue
            sub = ("atomic", atom.concept)
            sup = ("atomic", concept)
            if _containment(sub, sup, ctx):
                just = Justification("containment", fact=(sub, sup))
                result = _swap(q, {atom}, {ConceptAtom(concept, atom.term)})
                yield "GD3", (atom,), just, "", result
        for shape in _pattern_shapes(ctx):
            sub = ("atomic", atom.concept)
            if _containment(sub, shape, ctx):
                z = fresh_variable(q)
                just = Justification("containment", fact=(sub, shape))
                result = _swap(q, {atom}, {RoleAtom(shape[1], atom.term, z),
                                           ConceptAtom(shape[2], z)})
                yield "GD4", (atom,), just, "", result

    for head, step in _step_patterns(q, answer):  # GD5 / GD6
        pattern = ("pattern", head.role, step.concept)
        for concept in _user_concepts(ctx):
            sup = ("atomic", concept)
            if _containment(pattern, sup, ctx):
                just = Justification("containment", fact=(pattern, sup))
                result = _swap(q, {head, step}, {ConceptAtom(concept, head.subject)})
                yield "GD5", (head, step), just, "", result
        for shape in _pattern_shapes(ctx):
            if shape[1:] == (head.role, step.concept):
                continue
            if _containment(pattern, shape, ctx):
                z = fresh_variable(q)
                just = Justification("containment", fact=(pattern, shape))
                result = _swap(q, {head, step},
                               {RoleAtom(shape[1], head.subject, z),
                                ConceptAtom(shape[2], z)})
                yield "GD6", (head, step), just, "", result


def _step_patterns(q: ConjunctiveQuery, answer: frozenset[str]
                   ) -> list[tuple[RoleAtom, ConceptAtom]]:
    """Pairs role(x, y), concept(y) whose shared variable y is non-answer and
    occurs nowhere else in the query."""
    out = []
    for head in sorted((a for a in q.atoms if isinstance(a, RoleAtom)), key=str):
        y = head.object
        if not isinstance(y, Variable) or y.name in answer:
            continue
        if q.occurrences(y.name) != 2:
            continue
        for step in sorted((a for a in q.atoms if isinstance(a, ConceptAtom)), key=str):
            if step.term == y:
                out.append((head, step))
    return out


# ---------------------------------------------------------------------------
# Public enumeration
# ---------------------------------------------------------------------------

def _user_axiom_tbox(ctx: "KBContext") -> TBox:
    """Normalized axioms restricted to the user vocabulary (names introduced
    by normalization or unfolding never justify interactive moves)."""
    from .kb import signature_of
    kept = []
    for ax in ctx.tbox.axioms:
        single = TBox((ax,))
        sig = signature_of(single)
        names = sig.concepts | sig.roles
        if not any(is_reserved_name(n) for n in names):
            kept.append(ax)
    return TBox(tuple(kept), ctx.tbox.simple_roles)


def _build(rule_id: str, direction: str, data_driven: bool,
           target: tuple[Atom, ...], justification: Justification,
           result: ConjunctiveQuery, source: ConjunctiveQuery,
           version: int, variant: str = "") -> RuleInstance:
    return RuleInstance(rule_id, direction, data_driven, target, justification,
                        result, source, version, variant)


def _ordered(moves: list[RuleInstance], rule_order: Sequence[str]) -> list[RuleInstance]:
    index = {rule: i for i, rule in enumerate(rule_order)}
    seen = set()
    unique = []
    for move in sorted(moves, key=lambda m: (
            index[m.rule_id],
            tuple(sorted(str(a) for a in m.target)),
            m.justification.sort_text(),
            m.variant,
            sort_key(canonicalize(m.result)))):
        key = (move.rule_id, move.target, move.justification, move.variant,
               canonicalize(move.result))
        if key not in seen:
            seen.add(key)
            unique.append(move)
    return unique


def restrain_moves(q: ConjunctiveQuery, ctx: "KBContext",
                   data_driven: bool = False) -> list[RuleInstance]:
    """Every applicable specialization move, deterministically ordered.

    Moves that would leave the query unchanged up to canonical form are
    suppressed.
    """
    q.validate()
    ctx.ensure_consistent()
    source = canonicalize(q)
    tbox = _user_axiom_tbox(ctx)
    moves: list[RuleInstance] = []
    for rule, target, ax, result in rewriting.restrain_step_instances(q, tbox):
        just = Justification("axiom", axiom=ax)
        moves.append(_build(rule, "restrain", False, target, just, result,
                            source, ctx.version))
    # Interactive unification: any variable pair, answer variables absorb
    # non-answer ones, two answer variables never merge.
    answer = frozenset(q.answer_vars)
    variables = sorted(q.variables())
    for x in variables:
        if x in answer:
            continue
        for y in variables:
            if x == y:
                continue
            result = substitute(q, {x: Variable(y)})
            just = Justification("unification", fact=(x, y))
            moves.append(_build("S7", "restrain", False, (), just, result,
                                source, ctx.version))
    if data_driven:
        for rule, target, just, variant, result in _restrain_data_instances(q, ctx):
            moves.append(_build(rule, "restrain", True, target, just, result,
                                source, ctx.version, variant))
    moves = [m for m in moves if canonicalize(m.result) != source]
    return _ordered(moves, RESTRAIN_RULES)


def relax_moves(q: ConjunctiveQuery, ctx: "KBContext",
                data_driven: bool = False) -> list[RuleInstance]:
    """Every applicable generalization move, deterministically ordered."""
    q.validate()
    ctx.ensure_consistent()
    source = canonicalize(q)
    tbox = _user_axiom_tbox(ctx)
    moves: list[RuleInstance] = []
    for rule, target, ax, result in relax_step_instances(q, tbox):
        if rule == "G7":
            just = Justification("drop", fact=tuple(str(a) for a in target))
        else:
            just = Justification("axiom", axiom=ax)
        moves.append(_build(rule, "relax", False, target, just, result,
                            source, ctx.version))
    if data_driven:
        for rule, target, just, variant, result in _relax_data_instances(q, ctx):
            moves.append(_build(rule, "relax", True, target, just, result,
                                source, ctx.version, variant))
    moves = [m for m in moves if canonicalize(m.result) != source]
    return _ordered(moves, RELAX_RULES)
