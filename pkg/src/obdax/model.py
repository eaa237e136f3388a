"""Finite interpretations: the polynomial small model, CQ evaluation,
consistency checking, and certain-answer dispatch."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

from . import rewriting
from .analysis import TBoxKind, classify, find_chain_bound
from .errors import (InconsistentKBError, UnboundedOrUnknownError,
                     UnsupportedFragmentError)
from .kb import (ABox, Axiom, BasicConcept, Bot, ConceptInc, Cri,
                 DisjConcepts, DisjRoles, Exists, Named, Role, RoleInc, TBox,
                 Top)
from .queries import (Atom, ConceptAtom, ConjunctiveQuery, Individual,
                      RoleAtom, Term, Variable, atom_terms)


@dataclass(frozen=True, order=True)
class Element:
    """Domain element: a named individual, a per-individual filler, a shared
    filler, or a chase-generated anonymous individual."""

    kind: str  # "ind" | "filler" | "shared" | "anon"
    label: str

    def is_individual(self) -> bool:
        return self.kind == "ind"

    def __str__(self) -> str:
        return self.label


def ind(name: str) -> Element:
    return Element("ind", name)


@dataclass(frozen=True, eq=False)
class Interpretation:
    domain: frozenset[Element]
    concepts: Mapping[str, frozenset[Element]]
    roles: Mapping[str, frozenset[tuple[Element, Element]]]

    @cached_property
    def individuals(self) -> Mapping[str, Element]:
        return {e.label: e for e in self.domain if e.is_individual()}

    def concept_ext(self, name: str) -> frozenset[Element]:
        return self.concepts.get(name, frozenset())

    def role_ext(self, name: str) -> frozenset[tuple[Element, Element]]:
        return self.roles.get(name, frozenset())

    def signed_pairs(self, role: Role) -> frozenset[tuple[Element, Element]]:
        pairs = self.role_ext(role.name)
        if role.inverted:
            return frozenset((b, a) for a, b in pairs)
        return pairs

    def basic_ext(self, concept: BasicConcept) -> frozenset[Element]:
        if isinstance(concept, Top):
            return self.domain
        if isinstance(concept, Bot):
            return frozenset()
        if isinstance(concept, Named):
            return self.concept_ext(concept.name)
        return frozenset(a for a, _ in self.signed_pairs(concept.role))


def abox_interpretation(abox: ABox) -> Interpretation:
    """The ABox read literally as a finite interpretation over its individuals."""
    concepts: dict[str, set[Element]] = {}
    roles: dict[str, set[tuple[Element, Element]]] = {}
    for concept, a in abox.concept_assertions:
        concepts.setdefault(concept, set()).add(ind(a))
    for role, a, b in abox.role_assertions:
        roles.setdefault(role, set()).add((ind(a), ind(b)))
    return Interpretation(
        frozenset(ind(a) for a in abox.individuals),
        {c: frozenset(es) for c, es in concepts.items()},
        {r: frozenset(ps) for r, ps in roles.items()},
    )


# ---------------------------------------------------------------------------
# Small model
# ---------------------------------------------------------------------------

def build_small_model(tbox: TBox, abox: ABox) -> Interpretation:
    """Minimal finite structure over the individuals plus one filler per
    (individual, existential role) and one shared filler per existential role,
    closed under all positive axioms by fixpoint."""
    cls = classify(tbox)
    if cls.kind is TBoxKind.GENERAL:
        raise UnsupportedFragmentError(
            "the small model is defined for recursion-safe TBoxes")

    ex_roles = sorted({ax.rhs.role for ax in tbox.concept_incs()
                       if isinstance(ax.rhs, Exists)})
    d0 = {name: ind(name) for name in sorted(abox.individuals)}
    filler = {(name, role): Element("filler", f"{name}.{role}")
              for name in d0 for role in map(str, ex_roles)}
    shared = {str(role): Element("shared", f"*.{role}") for role in ex_roles}
    domain = frozenset(d0.values()) | frozenset(filler.values()) | frozenset(shared.values())

    concepts: dict[str, set[Element]] = {}
    roles: dict[str, set[tuple[Element, Element]]] = {}
    for concept, a in abox.concept_assertions:
        concepts.setdefault(concept, set()).add(d0[a])
    for role, a, b in abox.role_assertions:
        roles.setdefault(role, set()).add((d0[a], d0[b]))

    def ext(concept: BasicConcept) -> set[Element]:
        if isinstance(concept, Top):
            return set(domain)
        if isinstance(concept, Bot):
            return set()
        if isinstance(concept, Named):
            return set(concepts.get(concept.name, ()))
        pairs = roles.get(concept.role.name, set())
        if concept.role.inverted:
            return {b for _, b in pairs}
        return {a for a, _ in pairs}

    def add_signed(role: Role, a: Element, b: Element) -> bool:
        pair = (b, a) if role.inverted else (a, b)
        bucket = roles.setdefault(role.name, set())
        if pair in bucket:
            return False
        bucket.add(pair)
        return True

    changed = True
    while changed:
        changed = False
        for ax in tbox.axioms:
            if isinstance(ax, ConceptInc):
                if isinstance(ax.rhs, Named):
                    bucket = concepts.setdefault(ax.rhs.name, set())
                    new = ext(ax.lhs) - bucket
                    if new:
                        bucket |= new
                        changed = True
                elif isinstance(ax.rhs, Exists):
                    role = ax.rhs.role
                    for d in sorted(ext(ax.lhs)):
                        if d.is_individual():
                            target = filler[(d.label, str(role))]
                        else:
                            target = shared[str(role)]
                        if add_signed(role, d, target):
                            changed = True
            elif isinstance(ax, RoleInc):
                src = ax.lhs
                pairs = roles.get(src.name, set())
                oriented = [(b, a) for a, b in pairs] if src.inverted else list(pairs)
                for a, b in sorted(oriented):
                    if add_signed(ax.rhs, a, b):
                        changed = True
            elif isinstance(ax, Cri):
                left = roles.get(ax.left.name, set())
                guard = roles.get(ax.guard.name, set())
                by_subject: dict[Element, list[Element]] = {}
                for a, b in guard:
                    by_subject.setdefault(a, []).append(b)
                for a, b in sorted(left):
                    for c in sorted(by_subject.get(b, ())):
                        if add_signed(ax.target, a, c):
                            changed = True

    return Interpretation(domain,
                          {c: frozenset(es) for c, es in concepts.items()},
                          {r: frozenset(ps) for r, ps in roles.items()})


# ---------------------------------------------------------------------------
# Model checking (used by tests and consistency)
# ---------------------------------------------------------------------------

def satisfies(interp: Interpretation, axiom: Axiom) -> bool:
    if isinstance(axiom, ConceptInc):
        return interp.basic_ext(axiom.lhs) <= interp.basic_ext(axiom.rhs)
    if isinstance(axiom, RoleInc):
        return interp.signed_pairs(axiom.lhs) <= interp.signed_pairs(axiom.rhs)
    if isinstance(axiom, Cri):
        guard_by_subject: dict[Element, set[Element]] = {}
        for a, b in interp.role_ext(axiom.guard.name):
            guard_by_subject.setdefault(a, set()).add(b)
        target = interp.role_ext(axiom.target.name)
        for a, b in interp.role_ext(axiom.left.name):
            for c in guard_by_subject.get(b, ()):
                if (a, c) not in target:
                    return False
        return True
    if isinstance(axiom, DisjConcepts):
        return not (interp.basic_ext(axiom.first) & interp.basic_ext(axiom.second))
    if isinstance(axiom, DisjRoles):
        return not (interp.signed_pairs(axiom.first) & interp.signed_pairs(axiom.second))
    raise TypeError(f"unknown axiom type {type(axiom).__name__}")


def satisfies_abox(interp: Interpretation, abox: ABox) -> bool:
    for concept, a in abox.concept_assertions:
        if ind(a) not in interp.concept_ext(concept):
            return False
    for role, a, b in abox.role_assertions:
        if (ind(a), ind(b)) not in interp.role_ext(role):
            return False
    return True


# ---------------------------------------------------------------------------
# Query evaluation
# ---------------------------------------------------------------------------

def _variable_components(q: ConjunctiveQuery) -> list[frozenset[Atom]]:
    """Atoms grouped by shared variables; ground atoms form singletons."""
    atoms = list(q.atoms)
    parent = list(range(len(atoms)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    by_var: dict[str, int] = {}
    for i, atom in enumerate(atoms):
        for term in atom_terms(atom):
            if isinstance(term, Variable):
                if term.name in by_var:
                    ra, rb = find(i), find(by_var[term.name])
                    if ra != rb:
                        parent[ra] = rb
                else:
                    by_var[term.name] = i
    groups: dict[int, set[Atom]] = {}
    for i, atom in enumerate(atoms):
        groups.setdefault(find(i), set()).add(atom)
    return [frozenset(group) for group in groups.values()]


def evaluate(q: ConjunctiveQuery, interp: Interpretation) -> frozenset[tuple[Element, ...]]:
    """All tuples for which a match of the query exists in the interpretation.

    Individuals named in the query map to themselves even when the
    interpretation does not mention them (they can then only satisfy
    equality atoms).  Variable-disjoint parts of the query are evaluated
    independently and recombined, so unrelated conjuncts multiply answer
    tuples instead of search time.
    """
    q.validate()
    components = _variable_components(q)
    if len(components) > 1:
        tuples: list[frozenset[tuple[Element, ...]]] = []
        for component in components:
            head = tuple(v for v in dict.fromkeys(q.answer_vars)
                         if any(Variable(v) in atom_terms(a) for a in component))
            part = evaluate(ConjunctiveQuery(head, component), interp)
            if not part:
                return frozenset()
            tuples.append(part)
        heads = [tuple(v for v in dict.fromkeys(q.answer_vars)
                       if any(Variable(v) in atom_terms(a) for a in component))
                 for component in components]
        combined: list[dict[str, Element]] = [{}]
        for head, part in zip(heads, tuples):
            expanded = []
            for binding in combined:
                for row in part:
                    merged = dict(binding)
                    merged.update(zip(head, row))
                    expanded.append(merged)
            combined = expanded
        return frozenset(tuple(binding[v] for v in q.answer_vars)
                         for binding in combined)

    def term_element(t: Term) -> Element | None:
        if isinstance(t, Individual):
            return interp.individuals.get(t.name, ind(t.name))
        return None

    subject_index: dict[str, dict[Element, list[Element]]] = {}
    object_index: dict[str, dict[Element, list[Element]]] = {}
    for name, pairs in interp.roles.items():
        si: dict[Element, list[Element]] = {}
        oi: dict[Element, list[Element]] = {}
        for a, b in pairs:
            si.setdefault(a, []).append(b)
            oi.setdefault(b, []).append(a)
        subject_index[name] = si
        object_index[name] = oi

    atoms = sorted(q.atoms, key=str)
    results: set[tuple[Element, ...]] = set()
    domain_sorted = sorted(interp.domain)

    def value(t: Term, binding: dict[str, Element]) -> Element | None:
        fixed = term_element(t)
        if fixed is not None:
            return fixed
        return binding.get(t.name)  # type: ignore[union-attr]

    def bound_count(atom: Atom, binding) -> int:
        return sum(1 for t in atom_terms(atom) if value(t, binding) is not None)

    def candidates(atom: Atom, binding) -> Iterable[dict[str, Element]]:
        """Bindings extensions making this atom true."""
        if isinstance(atom, ConceptAtom):
            v = value(atom.term, binding)
            extension = interp.concept_ext(atom.concept)
            if v is not None:
                if v in extension:
                    yield {}
                return
            for e in sorted(extension):
                yield {atom.term.name: e}
            return
        if isinstance(atom, RoleAtom):
            s = value(atom.subject, binding)
            o = value(atom.object, binding)
            pairs = interp.role_ext(atom.role)
            if s is not None and o is not None:
                if (s, o) in pairs:
                    yield {}
                return
            if s is not None:
                succs = subject_index.get(atom.role, {}).get(s, ())
                for e in sorted(succs):
                    yield {atom.object.name: e}
                return
            if o is not None:
                preds = object_index.get(atom.role, {}).get(o, ())
                for e in sorted(preds):
                    yield {atom.subject.name: e}
                return
            if isinstance(atom.subject, Variable) and atom.subject == atom.object:
                for a, b in sorted(pairs):
                    if a == b:
                        yield {atom.subject.name: a}
                return
            for a, b in sorted(pairs):
                yield {atom.subject.name: a, atom.object.name: b}
            return
        # Equality atom.
        left = value(atom.left, binding)
        right = value(atom.right, binding)
        if left is not None and right is not None:
            if left == right:
                yield {}
            return
        if left is not None:
            yield {atom.right.name: left}
            return
        if right is not None:
            yield {atom.left.name: right}
            return
        if atom.left == atom.right:
            for e in domain_sorted:
                yield {atom.left.name: e}
            return
        for e in domain_sorted:
            yield {atom.left.name: e, atom.right.name: e}

    def search(binding: dict[str, Element], remaining: list[Atom]):
        if not remaining:
            results.add(tuple(binding[v] for v in q.answer_vars))
            return
        best_i = max(range(len(remaining)),
                     key=lambda i: bound_count(remaining[i], binding))
        atom = remaining[best_i]
        rest = remaining[:best_i] + remaining[best_i + 1:]
        for extension in candidates(atom, binding):
            new_binding = {**binding, **extension}
            search(new_binding, rest)

    if not atoms:
        results.add(())
    else:
        search({}, atoms)
    return frozenset(results)


# ---------------------------------------------------------------------------
# Answer sets and certain-answer dispatch
# ---------------------------------------------------------------------------

class AnswerMethod(enum.Enum):
    REWRITING = "rewriting"
    K_REWRITING = "k-rewriting"
    SMALL_MODEL = "small-model"
    ORACLE = "oracle"


@dataclass(frozen=True)
class AnswerSet:
    tuples: frozenset[tuple[str, ...]]
    arity: int
    method: AnswerMethod
    exact: bool
    rewriting_size: int = 0

    def sorted_tuples(self) -> list[tuple[str, ...]]:
        return sorted(self.tuples)


def _individual_tuples(matches: Iterable[tuple[Element, ...]],
                       individuals: frozenset[str]) -> frozenset[tuple[str, ...]]:
    out = set()
    for row in matches:
        if all(e.is_individual() and e.label in individuals for e in row):
            out.add(tuple(e.label for e in row))
    return frozenset(out)


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    violated_axiom: Axiom | None = None
    witness: tuple[str, ...] | None = None
    path: str = ""

    def __bool__(self) -> bool:
        return self.consistent


def _concept_atoms(concept: BasicConcept, var: Variable,
                   helper: Variable) -> list[Atom] | None:
    """Atoms expressing membership of ``var`` in a basic concept.

    Returns None for ``bot`` (no element can witness it) and the empty list
    for ``top``.
    """
    if isinstance(concept, Bot):
        return None
    if isinstance(concept, Top):
        return []
    if isinstance(concept, Named):
        return [ConceptAtom(concept.name, var)]
    role = concept.role
    if role.inverted:
        return [RoleAtom(role.name, helper, var)]
    return [RoleAtom(role.name, var, helper)]


def _violation_query(axiom: Axiom) -> ConjunctiveQuery | None:
    """Boolean query that fires exactly when the disjointness axiom is violated."""
    x = Variable("x")
    if isinstance(axiom, DisjConcepts):
        first = _concept_atoms(axiom.first, x, Variable("y1"))
        second = _concept_atoms(axiom.second, x, Variable("y2"))
        if first is None or second is None:
            return None
        return ConjunctiveQuery((), frozenset(first + second))
    if isinstance(axiom, DisjRoles):
        y = Variable("y")

        def role_atom(role: Role) -> Atom:
            if role.inverted:
                return RoleAtom(role.name, y, x)
            return RoleAtom(role.name, x, y)

        return ConjunctiveQuery((), frozenset({role_atom(axiom.first),
                                               role_atom(axiom.second)}))
    return None


def check_consistency(tbox: TBox, abox: ABox,
                      max_steps: int = rewriting.DEFAULT_MAX_STEPS) -> ConsistencyResult:
    """Small-model check for recursion-safe TBoxes; violation-query rewriting
    for non-recursive ones."""
    cls = classify(tbox)
    if cls.kind is TBoxKind.GENERAL:
        raise UnsupportedFragmentError(
            "consistency checking supports non-recursive and recursion-safe TBoxes")

    negative = sorted(tbox.disjointness_axioms(), key=str)
    if cls.kind is TBoxKind.RECURSION_SAFE:
        smod = build_small_model(tbox, abox)
        for ax in negative:
            if isinstance(ax, DisjConcepts):
                overlap = smod.basic_ext(ax.first) & smod.basic_ext(ax.second)
                if overlap:
                    witness = (min(overlap).label,)
                    return ConsistencyResult(False, ax, witness, "small-model")
            else:
                overlap = smod.signed_pairs(ax.first) & smod.signed_pairs(ax.second)
                if overlap:
                    a, b = min(overlap)
                    return ConsistencyResult(False, ax, (a.label, b.label), "small-model")
        return ConsistencyResult(True, path="small-model")

    data = abox_interpretation(abox)
    for ax in negative:
        violation = _violation_query(ax)
        if violation is None:
            continue
        if not violation.atoms:
            if abox.individuals:
                return ConsistencyResult(False, ax, (min(abox.individuals),), "rewriting")
            continue
        rewritten = rewriting.rewrite(violation, tbox, max_steps=max_steps)
        for disjunct in sorted(rewritten.queries, key=str):
            exposed = ConjunctiveQuery(tuple(sorted(disjunct.variables())),
                                       disjunct.atoms)
            matches = evaluate(exposed, data)
            for row in sorted(matches):
                return ConsistencyResult(
                    False, ax, tuple(e.label for e in row), "rewriting")
    return ConsistencyResult(True, path="rewriting")


def is_instance_query(q: ConjunctiveQuery) -> bool:
    """A single concept or role atom whose terms are exactly the answer
    variables, in head order."""
    if len(q.atoms) != 1:
        return False
    atom = next(iter(q.atoms))
    if isinstance(atom, ConceptAtom):
        return (isinstance(atom.term, Variable)
                and q.answer_vars == (atom.term.name,))
    if isinstance(atom, RoleAtom):
        return (isinstance(atom.subject, Variable)
                and isinstance(atom.object, Variable)
                and atom.subject != atom.object
                and q.answer_vars == (atom.subject.name, atom.object.name))
    return False


def _union_over_rewriting(queries: Iterable[ConjunctiveQuery],
                          interp: Interpretation,
                          individuals: frozenset[str]) -> frozenset[tuple[str, ...]]:
    answers: set[tuple[str, ...]] = set()
    for disjunct in queries:
        answers |= _individual_tuples(evaluate(disjunct, interp), individuals)
    return frozenset(answers)


def instance_answers(q: ConjunctiveQuery, tbox: TBox, abox: ABox,
                     *, smod: Interpretation | None = None,
                     skip_consistency: bool = False) -> AnswerSet:
    """Certain answers of a single-atom query via the small model."""
    if not is_instance_query(q):
        raise ValueError("not an instance query")
    cls = classify(tbox)
    if cls.kind is TBoxKind.GENERAL:
        raise UnsupportedFragmentError("instance answering needs a recursion-safe TBox")
    if not skip_consistency:
        verdict = check_consistency(tbox, abox)
        if not verdict:
            raise InconsistentKBError(axiom=verdict.violated_axiom,
                                      witness=verdict.witness)
    if smod is None:
        smod = build_small_model(tbox, abox)
    tuples = _individual_tuples(evaluate(q, smod), abox.individuals)
    return AnswerSet(tuples, q.arity, AnswerMethod.SMALL_MODEL, exact=True)


def certain_answers(q: ConjunctiveQuery, tbox: TBox, abox: ABox, *,
                    k: int | None = None, method: str = "auto",
                    max_steps: int = rewriting.DEFAULT_MAX_STEPS,
                    bound_budget: int = 10_000,
                    skip_consistency: bool = False) -> AnswerSet:
    """Certain answers with automatic dispatch.

    Non-recursive TBoxes evaluate the saturation-based rewriting over the raw
    data.  Recursion-safe TBoxes go through the k-rewriting, with k taken
    from the caller or established by exact chain search; single-atom queries
    over answer variables may short-circuit through the small model.
    """
    q.validate()
    cls = classify(tbox)
    if cls.kind is TBoxKind.GENERAL:
        raise UnsupportedFragmentError(
            "certain answers support non-recursive and recursion-safe TBoxes")
    if not skip_consistency:
        verdict = check_consistency(tbox, abox, max_steps)
        if not verdict:
            raise InconsistentKBError(axiom=verdict.violated_axiom,
                                      witness=verdict.witness)

    if method == "auto":
        if cls.kind is TBoxKind.NON_RECURSIVE:
            method = "rewrite"
        elif is_instance_query(q):
            method = "small-model"
        else:
            method = "k-rewrite"

    if method == "small-model":
        if not is_instance_query(q):
            raise ValueError("the small-model method only answers instance queries")
        if cls.kind is not TBoxKind.RECURSION_SAFE:
            raise ValueError("the small-model method needs a recursion-safe TBox")
        return instance_answers(q, tbox, abox, skip_consistency=True)

    data = abox_interpretation(abox)
    if method == "rewrite":
        rewritten = rewriting.rewrite(q, tbox, max_steps=max_steps)
        tuples = _union_over_rewriting(rewritten.queries, data, abox.individuals)
        return AnswerSet(tuples, q.arity, AnswerMethod.REWRITING, exact=True,
                         rewriting_size=len(rewritten.queries))
    if method == "k-rewrite":
        if k is None:
            k = find_chain_bound(tbox, abox, bound_budget)
            if k is None:
                raise UnboundedOrUnknownError(
                    "no chain bound could be established within budget")
        if k == 0:
            k = 1  # any positive bound works when no chain exists
        rewritten = rewriting.k_rewrite(q, tbox, k, max_steps=max_steps,
                                        data=abox)
        tuples = _union_over_rewriting(rewritten.queries, data, abox.individuals)
        return AnswerSet(tuples, q.arity, AnswerMethod.K_REWRITING, exact=True,
                         rewriting_size=len(rewritten.queries))
    raise ValueError(f"unknown method '{method}'")
