"""Restricted chase over a knowledge base.

Brute-force fixpoint that materializes entailed assertions, generating fresh
anonymous individuals for unmet existentials.  The induced interpretation is
the canonical model on saturating runs; the engine's fast paths are tested
against it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .kb import (ABox, Axiom, BasicConcept, Bot, ConceptInc, Cri,
                 DisjConcepts, DisjRoles, Exists, Named, Role, RoleInc, TBox,
                 Top)
from .model import AnswerMethod, AnswerSet, Element, Interpretation, evaluate, ind
from .queries import ConjunctiveQuery

ANON_PREFIX = "_anon"


@dataclass(frozen=True)
class Violation:
    axiom: Axiom
    witness: tuple[str, ...]


@dataclass(frozen=True)
class ChaseResult:
    interpretation: Interpretation
    steps: int
    saturated: bool
    violation: Violation | None = None

    @property
    def consistent(self) -> bool | None:
        """Definite verdict when available: violations are final, and a
        saturated violation-free chase is a model."""
        if self.violation is not None:
            return False
        if self.saturated:
            return True
        return None


class _State:
    def __init__(self, abox: ABox):
        self.concept_facts: set[tuple[str, str]] = set(abox.concept_assertions)
        self.role_facts: set[tuple[str, str, str]] = set(abox.role_assertions)
        self.individuals: list[str] = sorted(abox.individuals)
        self._known = set(self.individuals)
        self.anon_counter = 0

    def clone(self) -> "_State":
        twin = object.__new__(_State)
        twin.concept_facts = set(self.concept_facts)
        twin.role_facts = set(self.role_facts)
        twin.individuals = list(self.individuals)
        twin._known = set(self._known)
        twin.anon_counter = self.anon_counter
        return twin

    def fresh_individual(self) -> str:
        name = f"{ANON_PREFIX}{self.anon_counter}"
        self.anon_counter += 1
        self.individuals.append(name)
        self._known.add(name)
        return name

    def concept_ext(self, concept: BasicConcept) -> list[str]:
        if isinstance(concept, Top):
            return list(self.individuals)
        if isinstance(concept, Bot):
            return []
        if isinstance(concept, Named):
            return sorted(a for c, a in self.concept_facts if c == concept.name)
        role = concept.role
        if role.inverted:
            return sorted({b for r, _a, b in self.role_facts if r == role.name})
        return sorted({a for r, a, _b in self.role_facts if r == role.name})

    def signed_pairs(self, role: Role) -> list[tuple[str, str]]:
        if role.inverted:
            return sorted((b, a) for r, a, b in self.role_facts if r == role.name)
        return sorted((a, b) for r, a, b in self.role_facts if r == role.name)

    def has_successor(self, a: str, role: Role) -> bool:
        if role.inverted:
            return any(r == role.name and b == a for r, _x, b in self.role_facts)
        return any(r == role.name and x == a for r, x, _b in self.role_facts)

    def add_concept(self, concept: str, a: str) -> bool:
        fact = (concept, a)
        if fact in self.concept_facts:
            return False
        self.concept_facts.add(fact)
        return True

    def add_edge(self, role: Role, a: str, b: str) -> bool:
        fact = (role.name, b, a) if role.inverted else (role.name, a, b)
        if fact in self.role_facts:
            return False
        self.role_facts.add(fact)
        return True


def _find_violation(state: _State, tbox: TBox) -> Violation | None:
    for ax in sorted(tbox.axioms, key=str):
        if isinstance(ax, DisjConcepts):
            overlap = set(state.concept_ext(ax.first)) & set(state.concept_ext(ax.second))
            if overlap:
                return Violation(ax, (min(overlap),))
        elif isinstance(ax, DisjRoles):
            overlap = set(state.signed_pairs(ax.first)) & set(state.signed_pairs(ax.second))
            if overlap:
                return Violation(ax, min(overlap))
        elif isinstance(ax, ConceptInc) and isinstance(ax.rhs, Bot):
            members = state.concept_ext(ax.lhs)
            if members:
                return Violation(ax, (members[0],))
    return None


def chase(tbox: TBox, abox: ABox, budget: int) -> ChaseResult:
    """Apply the assertion-generation clauses fairly (axiom round-robin, with
    deterministically ordered triggers) for at most ``budget`` applications.

    The existential clause is restricted: it fires only when the element has
    no successor over the role yet.  Disjointness axioms are never chased;
    any violation found in the generated assertions is reported.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")

    state = _State(abox)
    steps = 0
    saturated = False
    positives = [ax for ax in tbox.axioms
                 if isinstance(ax, (ConceptInc, RoleInc, Cri))
                 and not (isinstance(ax, ConceptInc) and isinstance(ax.rhs, (Top, Bot)))]

    exhausted = False
    while not exhausted:
        changed = False
        for ax in positives:
            for did_change in _apply_axiom(state, ax):
                if did_change:
                    steps += 1
                    changed = True
                    if steps >= budget:
                        exhausted = True
                        break
            if exhausted:
                break
        if not changed and not exhausted:
            saturated = True
            break

    if exhausted and not saturated:
        # The budget cut the run short; a dry sweep tells whether the cut
        # happened to land exactly on the fixpoint.
        probe = state.clone()
        saturated = not any(any(_apply_axiom(probe, ax)) for ax in positives)

    violation = _find_violation(state, tbox)
    interp = _interpretation(state, abox)
    return ChaseResult(interp, steps, saturated, violation)


def _apply_axiom(state: _State, ax: Axiom) -> Iterable[bool]:
    if isinstance(ax, ConceptInc):
        rhs = ax.rhs
        if isinstance(rhs, Named):
            for a in state.concept_ext(ax.lhs):
                yield state.add_concept(rhs.name, a)
        elif isinstance(rhs, Exists):
            for a in state.concept_ext(ax.lhs):
                if not state.has_successor(a, rhs.role):
                    fresh = state.fresh_individual()
                    yield state.add_edge(rhs.role, a, fresh)
                else:
                    yield False
    elif isinstance(ax, RoleInc):
        for a, b in state.signed_pairs(ax.lhs):
            yield state.add_edge(ax.rhs, a, b)
    elif isinstance(ax, Cri):
        guard_by_subject: dict[str, list[str]] = {}
        for a, b in state.signed_pairs(ax.guard):
            guard_by_subject.setdefault(a, []).append(b)
        for a, b in state.signed_pairs(ax.left):
            for c in sorted(guard_by_subject.get(b, ())):
                yield state.add_edge(ax.target, a, c)


def _interpretation(state: _State, abox: ABox) -> Interpretation:
    named = abox.individuals

    def element(name: str) -> Element:
        return ind(name) if name in named else Element("anon", name)

    domain = frozenset(element(name) for name in state.individuals)
    concepts: dict[str, set[Element]] = {}
    for concept, a in state.concept_facts:
        concepts.setdefault(concept, set()).add(element(a))
    roles: dict[str, set[tuple[Element, Element]]] = {}
    for role, a, b in state.role_facts:
        roles.setdefault(role, set()).add((element(a), element(b)))
    return Interpretation(domain,
                          {c: frozenset(es) for c, es in concepts.items()},
                          {r: frozenset(ps) for r, ps in roles.items()})


def oracle_certain_answers(q: ConjunctiveQuery, tbox: TBox, abox: ABox,
                           budget: int = 2000) -> tuple[AnswerSet, bool]:
    """Certain answers straight off the chase interpretation.

    Exact on saturating runs; otherwise a sound under-approximation that
    grows monotonically with the budget.  Anonymous individuals never appear
    in answer tuples.
    """
    result = chase(tbox, abox, budget)
    matches = evaluate(q, result.interpretation)
    individuals = abox.individuals
    tuples = frozenset(tuple(e.label for e in row) for row in matches
                       if all(e.is_individual() and e.label in individuals for e in row))
    answers = AnswerSet(tuples, q.arity, AnswerMethod.ORACLE, exact=result.saturated)
    return answers, result.saturated


def oracle_consistent(tbox: TBox, abox: ABox, budget: int = 2000) -> bool | None:
    """Definite consistency verdict via the chase, or None when the budget
    ran out without a violation."""
    return chase(tbox, abox, budget).consistent
