"""Saturation-based first-order rewriting of conjunctive queries, plus the
unfolding of recursive role chains into a bounded stack of fresh roles."""

from __future__ import annotations

import functools
import os
from collections import deque
from dataclasses import dataclass
from typing import Iterator

from .analysis import TBoxKind, classify
from .errors import CapExceededError, RecursiveTBoxError, UnsupportedFragmentError
from .kb import (Axiom, ConceptInc, Cri, Exists, Named, Role, RoleInc, TBox,
                 Top)
from .queries import (Atom, ConceptAtom, ConjunctiveQuery, EqAtom, Individual,
                      RoleAtom, Term, Variable, canonicalize, fresh_variable,
                      substitute)

DEFAULT_MAX_STEPS = 100_000

# Prefix for roles introduced by chain unfolding, and for variables
# introduced by individual pinning and chain materialization.
UNFOLD_PREFIX = "_u"
FRESH_PIN_PREFIX = "_p"
FRESH_VAR_HINT = "_w"


def configured_max_steps() -> int:
    """Step cap, overridable through the OBDAX_MAX_STEPS environment variable."""
    raw = os.environ.get("OBDAX_MAX_STEPS")
    if raw:
        try:
            value = int(raw)
            if value > 0:
                return value
        except ValueError:
            pass
    return DEFAULT_MAX_STEPS


@dataclass(frozen=True)
class RewritingStats:
    steps: int
    dedup_hits: int
    cap: int


@dataclass(frozen=True)
class RewritingSet:
    queries: frozenset[ConjunctiveQuery]
    stats: RewritingStats

    def __len__(self) -> int:
        return len(self.queries)


# ---------------------------------------------------------------------------
# Single rewriting steps
# ---------------------------------------------------------------------------

def _edge_atoms(q: ConjunctiveQuery, role: Role) -> Iterator[tuple[RoleAtom, Term, Term]]:
    """Role atoms of ``q`` read as an edge of ``role`` from x to y."""
    for atom in q.atoms:
        if isinstance(atom, RoleAtom) and atom.role == role.name:
            if role.inverted:
                yield atom, atom.object, atom.subject
            else:
                yield atom, atom.subject, atom.object


def _edge_atom(role: Role, x: Term, y: Term) -> RoleAtom:
    if role.inverted:
        return RoleAtom(role.name, y, x)
    return RoleAtom(role.name, x, y)


def _replace(q: ConjunctiveQuery, removed: frozenset[Atom],
             added: frozenset[Atom]) -> ConjunctiveQuery:
    atoms = (q.atoms - removed) | added
    result = ConjunctiveQuery(q.answer_vars, atoms)
    body_vars = result.variables()
    # An answer variable may lose its last occurrence only through the
    # top-concept drop rules; re-anchor it with a trivial equality so the
    # query stays well-formed and the variable ranges over the whole domain.
    missing = {v for v in q.answer_vars if v not in body_vars}
    if missing:
        atoms = atoms | {EqAtom(Variable(v), Variable(v)) for v in sorted(missing)}
        result = ConjunctiveQuery(q.answer_vars, atoms)
    return result


def _absorbable(q: ConjunctiveQuery, term: Term) -> bool:
    """True when the term is a non-answer variable occurring exactly once."""
    return (isinstance(term, Variable)
            and term.name not in q.answer_vars
            and q.occurrences(term.name) == 1)


def restrain_step_instances(q: ConjunctiveQuery, tbox: TBox, *,
                            merge_answer_vars: bool = False,
                            include_top_rules: bool = False
                            ) -> Iterator[tuple[str, tuple[Atom, ...], Axiom | None,
                                                ConjunctiveQuery]]:
    """All single-step specializations of ``q`` under the TBox.

    Yields (rule id, consumed atoms, justifying axiom, result).  Rule S7 has
    no axiom.  ``merge_answer_vars`` additionally allows unifying two answer
    variables (the head then repeats the surviving one); the internal
    saturation needs this for completeness, interactive move enumeration
    does not offer it.
    """
    answer = frozenset(q.answer_vars)
    for ax in tbox.axioms:
        if isinstance(ax, ConceptInc):
            lhs, rhs = ax.lhs, ax.rhs
            if isinstance(lhs, Named) and isinstance(rhs, Named):
                for atom in q.atoms:
                    if isinstance(atom, ConceptAtom) and atom.concept == rhs.name:
                        result = _replace(q, frozenset({atom}),
                                          frozenset({ConceptAtom(lhs.name, atom.term)}))
                        yield "S1", (atom,), ax, result
            elif isinstance(lhs, Named) and isinstance(rhs, Exists):
                for atom, x, y in _edge_atoms(q, rhs.role):
                    if _absorbable(q, y):
                        result = _replace(q, frozenset({atom}),
                                          frozenset({ConceptAtom(lhs.name, x)}))
                        yield "S2", (atom,), ax, result
            elif isinstance(lhs, Exists) and isinstance(rhs, Named):
                for atom in q.atoms:
                    if isinstance(atom, ConceptAtom) and atom.concept == rhs.name:
                        z = fresh_variable(q)
                        result = _replace(q, frozenset({atom}),
                                          frozenset({_edge_atom(lhs.role, atom.term, z)}))
                        yield "S3", (atom,), ax, result
            elif include_top_rules and isinstance(lhs, Top):
                if isinstance(rhs, Named):
                    for atom in q.atoms:
                        if isinstance(atom, ConceptAtom) and atom.concept == rhs.name:
                            yield ("S1", (atom,), ax,
                                   _replace(q, frozenset({atom}), frozenset()))
                elif isinstance(rhs, Exists):
                    for atom, _x, y in _edge_atoms(q, rhs.role):
                        if _absorbable(q, y):
                            yield ("S2", (atom,), ax,
                                   _replace(q, frozenset({atom}), frozenset()))
        elif isinstance(ax, RoleInc):
            rule = "S5" if ax.rhs.inverted else "S4"
            for atom in q.atoms:
                if isinstance(atom, RoleAtom) and atom.role == ax.rhs.name:
                    if ax.rhs.inverted:
                        replacement = _edge_atom(ax.lhs, atom.object, atom.subject)
                    else:
                        replacement = _edge_atom(ax.lhs, atom.subject, atom.object)
                    result = _replace(q, frozenset({atom}), frozenset({replacement}))
                    yield rule, (atom,), ax, result
        elif isinstance(ax, Cri):
            for atom in q.atoms:
                if isinstance(atom, RoleAtom) and atom.role == ax.target.name:
                    z = fresh_variable(q)
                    added = frozenset({RoleAtom(ax.left.name, atom.subject, z),
                                       RoleAtom(ax.guard.name, z, atom.object)})
                    result = _replace(q, frozenset({atom}), added)
                    yield "S6", (atom,), ax, result

    if merge_answer_vars:
        # Saturation mode: unification driven by pairs of same-predicate
        # atoms, which is what completeness of the closure actually needs;
        # merging all variable pairs blindly blows the set up exponentially.
        # Merges exist purely to unblock existential absorption, so only
        # atoms that can eventually vanish through an absorption are worth
        # collapsing.  (Interactive move enumeration offers plain variable
        # pairs instead and lives with the reformulation layer.)
        roles, concepts = _vanishable_predicates(tbox)
        if roles or concepts:
            for mapping in _unifying_substitutions(q, roles, concepts):
                yield "S7", (), None, substitute(q, mapping)


@functools.lru_cache(maxsize=128)
def _vanishable_predicates(tbox: TBox) -> tuple[frozenset[str], frozenset[str]]:
    """Role and concept names whose atoms can disappear from a query.

    A role atom vanishes only through existential absorption, possibly after
    stepping down the role hierarchy; a concept atom only by first turning
    into such a role atom.  Merging atoms over any other predicate can never
    unblock an absorption, so the saturation skips those pairs.
    """
    ex_roles = {ax.rhs.role.name for ax in tbox.concept_incs()
                if isinstance(ax.rhs, Exists)}
    if not ex_roles:
        return frozenset(), frozenset()
    # Sub-role reachability (name level): an atom over r can become an atom
    # over any l with l included in r, possibly through inverses.
    down_roles: dict[str, set[str]] = {}
    changed = True
    names = {ax.lhs.name for ax in tbox.role_incs()} | \
        {ax.rhs.name for ax in tbox.role_incs()} | ex_roles
    for name in names:
        down_roles[name] = {name}
    while changed:
        changed = False
        for ax in tbox.role_incs():
            sup, sub = ax.rhs.name, ax.lhs.name
            for target in list(down_roles):
                if sup in down_roles[target] and sub not in down_roles[target]:
                    down_roles[target].add(sub)
                    changed = True
    vanishable_roles = {r for r, below in down_roles.items() if below & ex_roles}
    vanishable_roles |= ex_roles

    # A concept atom feeds a vanishable role atom through an existential on
    # the left, possibly after stepping down the concept hierarchy.
    seeds = {ax.rhs.name for ax in tbox.concept_incs()
             if isinstance(ax.lhs, Exists) and isinstance(ax.rhs, Named)
             and ax.lhs.role.name in vanishable_roles}
    vanishable_concepts = set(seeds)
    changed = True
    while changed:
        changed = False
        for ax in tbox.concept_incs():
            if (isinstance(ax.lhs, Named) and isinstance(ax.rhs, Named)
                    and ax.lhs.name in vanishable_concepts
                    and ax.rhs.name not in vanishable_concepts):
                vanishable_concepts.add(ax.rhs.name)
                changed = True
    return frozenset(vanishable_roles), frozenset(vanishable_concepts)


def _unifying_substitutions(q: ConjunctiveQuery, roles: frozenset[str],
                            concepts: frozenset[str]
                            ) -> Iterator[dict[str, Variable]]:
    """Substitutions merging the variables of two unifiable atoms.

    Two answer variables may merge (the head then repeats the survivor);
    representative choice is deterministic.
    """
    answer = frozenset(q.answer_vars)
    atoms = sorted(q.atoms, key=str)
    seen: set[tuple] = set()
    for i, first in enumerate(atoms):
        for second in atoms[i + 1:]:
            pairs: list[tuple[Term, Term]] | None = None
            if (isinstance(first, ConceptAtom) and isinstance(second, ConceptAtom)
                    and first.concept == second.concept
                    and first.concept in concepts):
                pairs = [(first.term, second.term)]
            elif (isinstance(first, RoleAtom) and isinstance(second, RoleAtom)
                    and first.role == second.role
                    and first.role in roles):
                pairs = [(first.subject, second.subject),
                         (first.object, second.object)]
            if pairs is None:
                continue
            mapping = _unify_pairs(pairs, answer)
            if not mapping:
                continue
            key = tuple(sorted((k, v.name) for k, v in mapping.items()))
            if key not in seen:
                seen.add(key)
                yield mapping


def _unify_pairs(pairs: list[tuple[Term, Term]],
                 answer: frozenset[str]) -> dict[str, Variable] | None:
    """Most general variable unifier for the term pairs, or None.

    Individuals never unify with anything here: queries entering saturation
    carry individuals only in equality atoms.
    """
    parent: dict[str, str] = {}

    def find(v: str) -> str:
        while parent.get(v, v) != v:
            parent[v] = parent.get(parent[v], parent[v])
            v = parent[v]
        return v

    def rep_key(v: str):
        # Answer variables survive merges; ties break lexicographically.
        return (v not in answer, v)

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra == rb:
            return
        keep, drop = sorted((ra, rb), key=rep_key)
        parent[drop] = keep

    for left, right in pairs:
        if isinstance(left, Variable) and isinstance(right, Variable):
            union(left.name, right.name)
        elif left != right:
            return None
    mapping = {}
    for v in list(parent):
        root = find(v)
        if root != v:
            mapping[v] = Variable(root)
    return mapping or None


# ---------------------------------------------------------------------------
# Saturation
# ---------------------------------------------------------------------------

def pin_individuals(q: ConjunctiveQuery) -> ConjunctiveQuery:
    """Replace individuals inside concept/role atoms by fresh variables pinned
    with equality atoms.  Semantically neutral; it lets the unification-driven
    merge reach atoms that mention constants."""
    pinned: dict[str, Variable] = {}
    extra: set[Atom] = set()
    counter = 0
    used = q.variables()

    def pin(term: Term) -> Term:
        nonlocal counter
        if not isinstance(term, Individual):
            return term
        if term.name not in pinned:
            while f"{FRESH_PIN_PREFIX}{counter}" in used:
                counter += 1
            var = Variable(f"{FRESH_PIN_PREFIX}{counter}")
            counter += 1
            pinned[term.name] = var
            extra.add(EqAtom(var, term))
        return pinned[term.name]

    atoms: set[Atom] = set()
    for atom in q.atoms:
        if isinstance(atom, ConceptAtom):
            atoms.add(ConceptAtom(atom.concept, pin(atom.term)))
        elif isinstance(atom, RoleAtom):
            atoms.add(RoleAtom(atom.role, pin(atom.subject), pin(atom.object)))
        else:
            atoms.add(atom)
    return ConjunctiveQuery(q.answer_vars, frozenset(atoms | extra))


def _saturate(seeds: list[ConjunctiveQuery], tbox: TBox, max_steps: int,
              expander=None) -> RewritingSet:
    """Fixpoint closure under the specialization rules with canonical dedup.

    ``expander``, when given, maps (query, freshly added atoms) to the
    queries actually entered into the set; the chain machinery uses it to
    replace every newly introduced atom over a recursive role by its bounded
    chain variants.
    """
    seen: set[ConjunctiveQuery] = set()
    frontier: deque[ConjunctiveQuery] = deque()
    steps = 0
    dedup_hits = 0

    def admit(query: ConjunctiveQuery) -> None:
        nonlocal dedup_hits
        canonical = canonicalize(query)
        if canonical in seen:
            dedup_hits += 1
        else:
            seen.add(canonical)
            frontier.append(canonical)

    for seed in seeds:
        pinned = pin_individuals(seed)
        for variant in (expander(pinned, pinned.atoms) if expander else [pinned]):
            admit(variant)
        seen.add(canonicalize(seed))

    while frontier:
        current = frontier.popleft()
        for _rule, _targets, _ax, produced in restrain_step_instances(
                current, tbox, merge_answer_vars=True, include_top_rules=True):
            added = produced.atoms - current.atoms
            variants = (expander(produced, added) if expander else [produced])
            for variant in variants:
                steps += 1
                if steps > max_steps:
                    raise CapExceededError(steps, max_steps)
                admit(variant)
    return RewritingSet(frozenset(seen), RewritingStats(steps, dedup_hits, max_steps))


def rewrite(q: ConjunctiveQuery, tbox: TBox, *,
            max_steps: int = DEFAULT_MAX_STEPS) -> RewritingSet:
    """Close ``{q}`` under the specialization rules up to canonical form.

    The TBox must be free of recursive chain axioms; termination is then
    guaranteed by deduplication alone, with ``max_steps`` as a hard guard
    against misclassified input.
    """
    q.validate()
    cls = classify(tbox)
    if cls.kind is not TBoxKind.NON_RECURSIVE:
        raise RecursiveTBoxError(
            "plain rewriting requires a TBox without recursive chain axioms")
    return _saturate([q], tbox, max_steps)


# ---------------------------------------------------------------------------
# Chain unfolding
# ---------------------------------------------------------------------------

def _level_name(role: str, j: int) -> str:
    return f"{UNFOLD_PREFIX}_{role}_{j}"


def hat_name(role: str) -> str:
    return f"{UNFOLD_PREFIX}_{role}_hat"


def k_unfold(tbox: TBox, k: int) -> tuple[TBox, dict[str, str]]:
    """Replace each recursive self chain ``r . s sub r`` by a bounded stack:
    r goes into level 0, each guard step lifts level j-1 to level j, and all
    levels flow into a fresh umbrella role recorded in the renaming.

    Guards of the same recursive role share one stack, so chains mixing
    several guard roles unfold correctly.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    cls = classify(tbox)
    if cls.kind is TBoxKind.GENERAL:
        raise UnsupportedFragmentError("unfolding requires a recursion-safe TBox")
    if cls.kind is TBoxKind.NON_RECURSIVE:
        return tbox, {}

    replaced: dict[str, list[str]] = {}
    kept: list[Axiom] = []
    for ax in tbox.axioms:
        if (isinstance(ax, Cri) and ax.target.name in cls.recursive_roles
                and ax.left.name == ax.target.name):
            replaced.setdefault(ax.target.name, []).append(ax.guard.name)
        else:
            kept.append(ax)

    renaming: dict[str, str] = {}
    fresh: list[Axiom] = []
    for role in sorted(replaced):
        guards = sorted(set(replaced[role]))
        hat = hat_name(role)
        renaming[role] = hat
        fresh.append(RoleInc(Role(role), Role(_level_name(role, 0))))
        for j in range(1, k + 1):
            for guard in guards:
                fresh.append(Cri(Role(_level_name(role, j - 1)), Role(guard),
                                 Role(_level_name(role, j))))
        # Level 0 must reach the umbrella role too, or plain data facts
        # would be lost from it.
        for j in range(k + 1):
            fresh.append(RoleInc(Role(_level_name(role, j)), Role(hat)))
    return TBox(tuple(kept + fresh), tbox.simple_roles), renaming


def _chain_expansions(q: ConjunctiveQuery, candidates, guard_sets: dict,
                      k: int, walks: "_GuardWalks | None" = None
                      ) -> Iterator[ConjunctiveQuery]:
    """Every replacement of the given recursive-role atoms by explicit guard
    chains of length 0..k.

    An atom over a recursive role stands for a derived edge: a base edge
    followed by up to k guard steps.  Materializing the chains directly is
    equivalent to routing the atom through the unfolded level roles, whose
    axioms interact with nothing else, but skips all partially-unfolded
    intermediate queries.  With ``walks`` given, guard sequences that no data
    walk can realize are pruned: guard atoms survive into every descendant
    disjunct, so those disjuncts can never match the data.
    """
    targets = [atom for atom in sorted(candidates, key=str)
               if isinstance(atom, RoleAtom) and guard_sets.get(atom.role)
               and atom in q.atoms]

    def expand(index: int, query: ConjunctiveQuery) -> Iterator[ConjunctiveQuery]:
        if index == len(targets):
            yield query
            return
        atom = targets[index]
        guards = sorted(guard_sets[atom.role])
        for sequence in _guard_sequences(guards, k, walks):
            replaced = _chain_atoms(query, atom, sequence)
            yield from expand(index + 1, replaced)

    yield from expand(0, q)


class _GuardWalks:
    """Existence of data walks realizing guard sequences."""

    def __init__(self, tbox: TBox, abox):
        self._tbox = tbox
        self._abox = abox
        self._edges: dict[str, list[tuple[str, str]]] = {}

    def edges(self, guard: str) -> list[tuple[str, str]]:
        if guard not in self._edges:
            from .analysis import _guard_edges
            adjacency = _guard_edges(self._tbox, self._abox, frozenset({guard}))
            self._edges[guard] = [(a, b) for a, targets in adjacency.items()
                                  for b in targets]
        return self._edges[guard]

    def step(self, frontier: frozenset[str] | None, guard: str) -> frozenset[str]:
        edges = self.edges(guard)
        if frontier is None:
            return frozenset(b for _a, b in edges)
        return frozenset(b for a, b in edges if a in frontier)


def _guard_sequences(guards: list[str], k: int,
                     walks: "_GuardWalks | None") -> Iterator[tuple[str, ...]]:
    def extend(prefix: tuple[str, ...],
               frontier) -> Iterator[tuple[str, ...]]:
        yield prefix
        if len(prefix) == k:
            return
        for guard in guards:
            if walks is None:
                yield from extend(prefix + (guard,), None)
            else:
                reached = walks.step(frontier, guard)
                if reached:
                    yield from extend(prefix + (guard,), reached)

    yield from extend((), None)


def _chain_atoms(q: ConjunctiveQuery, atom: RoleAtom,
                 sequence: tuple[str, ...]) -> ConjunctiveQuery:
    """Replace r(x, y) by r(x, w1), s1(w1, w2), ..., si(wi, y)."""
    if not sequence:
        return q
    used = set(q.variables())
    fresh: list[Variable] = []
    n = 0
    while len(fresh) < len(sequence):
        name = f"{FRESH_VAR_HINT}{n}"
        n += 1
        if name not in used:
            used.add(name)
            fresh.append(Variable(name))
    nodes: list[Term] = [atom.subject, *fresh, atom.object]
    atoms = set(q.atoms) - {atom}
    atoms.add(RoleAtom(atom.role, nodes[0], nodes[1]))
    for j, guard in enumerate(sequence):
        atoms.add(RoleAtom(guard, nodes[j + 1], nodes[j + 2]))
    return ConjunctiveQuery(q.answer_vars, frozenset(atoms))


def k_rewrite(q: ConjunctiveQuery, tbox: TBox, k: int, *,
              max_steps: int = DEFAULT_MAX_STEPS, data=None) -> RewritingSet:
    """Rewriting equivalent to saturating the umbrella-role query over the
    k-unfolded TBox.  Over any k-bounded data set the union of the result
    equals the certain answers.

    ``data`` (an ABox) restricts the generated guard chains to sequences some
    data walk can realize; the resulting union of answers over that ABox is
    unchanged.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    cls = classify(tbox)
    if cls.kind is TBoxKind.GENERAL:
        raise UnsupportedFragmentError("k-rewriting requires a recursion-safe TBox")
    if cls.kind is TBoxKind.NON_RECURSIVE:
        return rewrite(q, tbox, max_steps=max_steps)

    base_axioms = tuple(
        ax for ax in tbox.axioms
        if not (isinstance(ax, Cri) and ax.target.name in cls.recursive_roles
                and ax.left.name == ax.target.name))
    base = TBox(base_axioms, tbox.simple_roles)
    guard_sets = {role: guards for role, guards in cls.guard_sets.items() if guards}
    walks = _GuardWalks(tbox, data) if data is not None else None

    def expander(query: ConjunctiveQuery, added_atoms):
        # Atoms over recursive roles stand for derived edges wherever a rule
        # (or the seed) introduces them; chain heads produced here are plain
        # base edges and are never re-expanded.
        return _chain_expansions(query, added_atoms, guard_sets, k, walks)

    return _saturate([q], base, max_steps, expander)
