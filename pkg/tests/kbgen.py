"""Random knowledge-base and query generation for the differential suites.

Sizes stay within: 8 concepts, 5 roles, 15 axioms, 20 assertions, 5-atom
queries.  Generation is stratified over the non-recursive and recursion-safe
fragments; recursion-safe instances keep guard roles away from existentials
by construction.
"""

from __future__ import annotations

import random

from obdax import (ABox, ConceptAtom, ConceptInc, ConjunctiveQuery, Cri,
                   DisjConcepts, DisjRoles, EqAtom, Exists, Individual, Named,
                   OrderConstraint, Role, RoleAtom, RoleInc, TBox, TBoxKind,
                   Variable, classify, validate_tbox)

CONCEPTS = [f"C{i}" for i in range(8)]
GENERAL_ROLES = ["p0", "p1", "p2"]
GUARD_ROLES = ["g0", "g1"]
INDIVIDUALS = [f"a{i}" for i in range(6)]


def random_tbox(rng: random.Random, stratum: str,
                allow_disjointness: bool = True) -> TBox:
    """One TBox of the requested class ('non-recursive' or 'recursion-safe')."""
    for _ in range(60):
        tbox = _candidate_tbox(rng, stratum, allow_disjointness)
        if not validate_tbox(tbox).ok:
            continue
        kind = classify(tbox).kind
        if stratum == "non-recursive" and kind is TBoxKind.NON_RECURSIVE:
            return tbox
        if stratum == "recursion-safe" and kind is TBoxKind.RECURSION_SAFE:
            return tbox
    raise AssertionError(f"could not generate a {stratum} TBox")


def _candidate_tbox(rng: random.Random, stratum: str,
                    allow_disjointness: bool) -> TBox:
    concepts = CONCEPTS[:rng.randint(3, 8)]
    roles = GENERAL_ROLES[:rng.randint(1, 3)]
    axioms = []
    simple: set[str] = set()
    guarded = stratum == "recursion-safe"

    if guarded:
        guards = GUARD_ROLES[:rng.randint(1, 2)]
        simple.update(guards)
        target = rng.choice(roles)
        for guard in guards:
            axioms.append(Cri(Role(target), Role(guard), Role(target)))
        usable_guards = list(guards)
    else:
        usable_guards = []
        if rng.random() < 0.5 and len(roles) >= 2:
            guard = GUARD_ROLES[0]
            simple.add(guard)
            usable_guards = [guard]
            left, target = rng.sample(roles, 2)
            axioms.append(Cri(Role(left), Role(guard), Role(target)))

    n_extra = rng.randint(2, 12)
    for _ in range(n_extra):
        dice = rng.random()
        if dice < 0.35:
            a, b = rng.choice(concepts), rng.choice(concepts)
            if a != b:
                axioms.append(ConceptInc(Named(a), Named(b)))
        elif dice < 0.55:
            # Existentials never touch guard roles in the recursion-safe
            # stratum; in the non-recursive one any role goes.
            pool = roles if guarded else roles + usable_guards
            role = Role(rng.choice(pool), rng.random() < 0.3)
            concept = Named(rng.choice(concepts))
            if rng.random() < 0.5:
                axioms.append(ConceptInc(concept, Exists(role)))
            else:
                axioms.append(ConceptInc(Exists(role), concept))
        elif dice < 0.7:
            pool = roles + usable_guards
            sub = rng.choice(pool)
            sup = rng.choice(pool)
            if sub == sup:
                continue
            # Keep non-simple roles out of simple supersets.
            if sup in simple and sub not in simple:
                continue
            axioms.append(RoleInc(Role(sub), Role(sup, rng.random() < 0.3)))
        elif dice < 0.8:
            role = Role(rng.choice(roles), rng.random() < 0.3)
            axioms.append(ConceptInc(Exists(role), Named(rng.choice(concepts))))
        elif allow_disjointness and dice < 0.9:
            a, b = rng.choice(concepts), rng.choice(concepts)
            if a != b:
                axioms.append(DisjConcepts(Named(a), Named(b)))
        elif allow_disjointness and len(roles) >= 2:
            a, b = rng.sample(roles, 2)
            axioms.append(DisjRoles(Role(a), Role(b)))
    return TBox(tuple(axioms), frozenset(simple))


def random_abox(rng: random.Random, tbox: TBox) -> ABox:
    concepts = sorted({c for c in _tbox_concepts(tbox)}) or ["C0"]
    roles = sorted({r for r in _tbox_roles(tbox)}) or ["p0"]
    individuals = INDIVIDUALS[:rng.randint(2, 6)]
    concept_assertions = set()
    role_assertions = set()
    for _ in range(rng.randint(1, 20)):
        if rng.random() < 0.45:
            concept_assertions.add((rng.choice(concepts), rng.choice(individuals)))
        else:
            role_assertions.add((rng.choice(roles), rng.choice(individuals),
                                 rng.choice(individuals)))
    return ABox(frozenset(concept_assertions), frozenset(role_assertions))


def _tbox_concepts(tbox: TBox):
    from obdax import signature_of
    return signature_of(tbox).concepts


def _tbox_roles(tbox: TBox):
    from obdax import signature_of
    return signature_of(tbox).roles


def random_query(rng: random.Random, tbox: TBox, abox: ABox,
                 max_atoms: int = 4) -> ConjunctiveQuery:
    concepts = sorted(_tbox_concepts(tbox)) or ["C0"]
    roles = sorted(_tbox_roles(tbox)) or ["p0"]
    individuals = sorted(abox.individuals) or ["a0"]
    var_pool = ["x", "y", "z", "w"]

    for _ in range(50):
        n_atoms = rng.randint(1, max_atoms)
        atoms = []
        for _ in range(n_atoms):
            dice = rng.random()

            def term():
                if rng.random() < 0.15:
                    return Individual(rng.choice(individuals))
                return Variable(rng.choice(var_pool))

            if dice < 0.4:
                atoms.append(ConceptAtom(rng.choice(concepts), term()))
            elif dice < 0.85:
                atoms.append(RoleAtom(rng.choice(roles), term(), term()))
            else:
                atoms.append(EqAtom(Variable(rng.choice(var_pool)),
                                    Individual(rng.choice(individuals))))
        body_vars = {v.name for a in atoms
                     for v in _atom_variables(a)}
        if not body_vars:
            continue
        arity = rng.choice([0, 1, 1, 1, 2])
        answer = tuple(sorted(rng.sample(sorted(body_vars),
                                         min(arity, len(body_vars)))))
        return ConjunctiveQuery(answer, frozenset(atoms))
    raise AssertionError("could not generate a query")


def _atom_variables(atom):
    from obdax.queries import atom_vars
    return atom_vars(atom)


def random_kb(rng: random.Random, stratum: str,
              allow_disjointness: bool = True) -> tuple[TBox, ABox]:
    """A TBox of the requested class with a data set whose guard chains stay
    short: longer chains blow the k-rewriting up exponentially for
    multi-guard roles without exercising anything new."""
    from obdax import classify, find_chain_bound, normalize
    tbox = random_tbox(rng, stratum, allow_disjointness)
    guard_count = max((len(g) for g in classify(tbox).guard_sets.values()),
                      default=0)
    limit = 3 if guard_count <= 1 else 2
    for _ in range(40):
        abox = random_abox(rng, tbox)
        if stratum == "non-recursive":
            return tbox, abox
        bound = find_chain_bound(normalize(tbox), abox)
        if bound is not None and bound <= limit:
            return tbox, abox
    raise AssertionError("could not generate a short-chain ABox")


# ---------------------------------------------------------------------------
# Admissible dimensional KBs (for the chain-bound property)
# ---------------------------------------------------------------------------

def random_admissible_kb(rng: random.Random) -> tuple[TBox, ABox, tuple[OrderConstraint, ...]]:
    """A covered, admissible dimensional KB built level by level: guard edges
    only connect consecutive category levels upward."""
    n_levels = rng.randint(2, 4)
    levels = [f"L{i}" for i in range(n_levels)]
    guard = "g0"
    target = "p0"
    axioms = [Cri(Role(target), Role(guard), Role(target))]
    for level in levels:
        if rng.random() < 0.4:
            axioms.append(ConceptInc(Named(level), Named("C0")))
    if rng.random() < 0.5:
        axioms.append(ConceptInc(Exists(Role(target)), Named("C1")))
    if rng.random() < 0.4:
        axioms.append(ConceptInc(Named("C2"), Exists(Role(target))))
    tbox = TBox(tuple(axioms), frozenset({guard}))

    members: dict[str, list[str]] = {}
    counter = 0
    for level in levels:
        members[level] = []
        for _ in range(rng.randint(1, 2)):
            members[level].append(f"m{counter}")
            counter += 1
    concept_assertions = {(level, m) for level in levels for m in members[level]}
    role_assertions = set()
    for i in range(n_levels - 1):
        for child in members[levels[i]]:
            if rng.random() < 0.85:
                role_assertions.add((guard, child, rng.choice(members[levels[i + 1]])))
    outsiders = [f"e{i}" for i in range(rng.randint(1, 3))]
    all_members = [m for ms in members.values() for m in ms]
    for e in outsiders:
        for _ in range(rng.randint(0, 2)):
            role_assertions.add((target, e, rng.choice(all_members)))
        if rng.random() < 0.5:
            concept_assertions.add(("C2", e))
    abox = ABox(frozenset(concept_assertions), frozenset(role_assertions))
    order = frozenset((levels[i], levels[j])
                      for i in range(n_levels) for j in range(i + 1, n_levels))
    constraint = OrderConstraint(guard, frozenset(levels), order)
    return tbox, abox, (constraint,)
