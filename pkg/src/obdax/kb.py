"""Domain types for DL-Lite knowledge bases with complex role inclusions.

A TBox holds concept/role inclusions, disjointness axioms, and role-chain
axioms ``r . s sub t`` (the second role must be declared simple, the third
must not be).  An ABox holds ground concept and role assertions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Union

from . import queries

# Names generated by normalization; never part of the user vocabulary.
FRESH_PREFIX = "_n"


def is_reserved_name(name: str) -> bool:
    """User identifiers never start with an underscore."""
    return name.startswith("_")


# ---------------------------------------------------------------------------
# Roles and basic concepts
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Role:
    """A role name, optionally inverted.  Double inversion never nests."""

    name: str
    inverted: bool = False

    def inverse(self) -> "Role":
        return Role(self.name, not self.inverted)

    def __str__(self) -> str:
        return f"{self.name}-" if self.inverted else self.name


@dataclass(frozen=True)
class Top:
    def __str__(self) -> str:
        return "top"


@dataclass(frozen=True)
class Bot:
    def __str__(self) -> str:
        return "bot"


@dataclass(frozen=True)
class Named:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("concept name must be non-empty")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Exists:
    role: Role

    def __str__(self) -> str:
        return f"exists {self.role}"


BasicConcept = Union[Top, Bot, Named, Exists]

TOP = Top()
BOT = Bot()


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConceptInc:
    lhs: BasicConcept
    rhs: BasicConcept

    def __str__(self) -> str:
        return f"{self.lhs} sub {self.rhs}"


@dataclass(frozen=True)
class RoleInc:
    lhs: Role
    rhs: Role

    def __str__(self) -> str:
        return f"{self.lhs} sub {self.rhs}"


@dataclass(frozen=True)
class Cri:
    """Role-chain axiom: ``left . guard sub target``.

    All three are plain role names; ``guard`` must be simple and ``target``
    non-simple in any well-formed TBox.
    """

    left: Role
    guard: Role
    target: Role

    def __str__(self) -> str:
        return f"{self.left} o {self.guard} sub {self.target}"


@dataclass(frozen=True)
class DisjConcepts:
    first: BasicConcept
    second: BasicConcept

    def __str__(self) -> str:
        return f"disjoint {self.first} {self.second}"


@dataclass(frozen=True)
class DisjRoles:
    first: Role
    second: Role

    def __str__(self) -> str:
        return f"disjointRole {self.first} {self.second}"


Axiom = Union[ConceptInc, RoleInc, Cri, DisjConcepts, DisjRoles]


# ---------------------------------------------------------------------------
# TBox / ABox / Signature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TBox:
    """Ordered axiom collection plus the set of declared simple role names.

    Simple-role membership is by name and implicitly closed under inverse.
    """

    axioms: tuple[Axiom, ...] = ()
    simple_roles: frozenset[str] = frozenset()

    def is_simple(self, role: Role | str) -> bool:
        name = role.name if isinstance(role, Role) else role
        return name in self.simple_roles

    def concept_incs(self) -> Iterable[ConceptInc]:
        return (a for a in self.axioms if isinstance(a, ConceptInc))

    def role_incs(self) -> Iterable[RoleInc]:
        return (a for a in self.axioms if isinstance(a, RoleInc))

    def cris(self) -> Iterable[Cri]:
        return (a for a in self.axioms if isinstance(a, Cri))

    def disjointness_axioms(self) -> Iterable[Axiom]:
        return (a for a in self.axioms
                if isinstance(a, (DisjConcepts, DisjRoles)))


@dataclass(frozen=True)
class ABox:
    concept_assertions: frozenset[tuple[str, str]] = frozenset()
    role_assertions: frozenset[tuple[str, str, str]] = frozenset()

    @cached_property
    def individuals(self) -> frozenset[str]:
        names = {ind for _, ind in self.concept_assertions}
        for _, a, b in self.role_assertions:
            names.add(a)
            names.add(b)
        return frozenset(names)


@dataclass(frozen=True)
class Signature:
    concepts: frozenset[str] = frozenset()
    roles: frozenset[str] = frozenset()
    individuals: frozenset[str] = frozenset()

    def union(self, other: "Signature") -> "Signature":
        return Signature(self.concepts | other.concepts,
                         self.roles | other.roles,
                         self.individuals | other.individuals)


def _concept_names(c: BasicConcept) -> frozenset[str]:
    return frozenset({c.name}) if isinstance(c, Named) else frozenset()


def _role_names(c: BasicConcept) -> frozenset[str]:
    return frozenset({c.role.name}) if isinstance(c, Exists) else frozenset()


def signature_of(*parts) -> Signature:
    """Exact set of concept, role, and individual names in the given parts.

    Accepts any mix of TBox, ABox, and ConjunctiveQuery values.
    """
    concepts: set[str] = set()
    roles: set[str] = set()
    individuals: set[str] = set()
    for part in parts:
        if isinstance(part, TBox):
            for ax in part.axioms:
                if isinstance(ax, ConceptInc):
                    sides = (ax.lhs, ax.rhs)
                elif isinstance(ax, DisjConcepts):
                    sides = (ax.first, ax.second)
                else:
                    sides = ()
                for side in sides:
                    concepts |= _concept_names(side)
                    roles |= _role_names(side)
                if isinstance(ax, RoleInc):
                    roles |= {ax.lhs.name, ax.rhs.name}
                elif isinstance(ax, Cri):
                    roles |= {ax.left.name, ax.guard.name, ax.target.name}
                elif isinstance(ax, DisjRoles):
                    roles |= {ax.first.name, ax.second.name}
        elif isinstance(part, ABox):
            for concept, ind in part.concept_assertions:
                concepts.add(concept)
                individuals.add(ind)
            for role, a, b in part.role_assertions:
                roles.add(role)
                individuals.add(a)
                individuals.add(b)
        elif isinstance(part, queries.ConjunctiveQuery):
            for atom in part.atoms:
                if isinstance(atom, queries.ConceptAtom):
                    concepts.add(atom.concept)
                elif isinstance(atom, queries.RoleAtom):
                    roles.add(atom.role)
                for term in queries.atom_terms(atom):
                    if isinstance(term, queries.Individual):
                        individuals.add(term.name)
        else:
            raise TypeError(f"cannot take the signature of {type(part).__name__}")
    return Signature(frozenset(concepts), frozenset(roles), frozenset(individuals))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TBoxIssue:
    message: str
    axiom: Axiom | None


@dataclass(frozen=True)
class TBoxValidation:
    issues: tuple[TBoxIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_tbox(tbox: TBox) -> TBoxValidation:
    """Check the well-formedness conditions on role-chain axioms.

    Every violation is reported with the offending axiom; validation never
    raises.
    """
    issues: list[TBoxIssue] = []
    for ax in tbox.axioms:
        if isinstance(ax, Cri):
            for role in (ax.left, ax.guard, ax.target):
                if role.inverted:
                    issues.append(TBoxIssue(
                        f"role-chain axioms are over role names, got inverse '{role}'", ax))
            if not tbox.is_simple(ax.guard):
                issues.append(TBoxIssue(
                    f"CRI second role must be simple: '{ax.guard.name}' is not declared simple", ax))
            if tbox.is_simple(ax.target):
                issues.append(TBoxIssue(
                    f"CRI target role must be non-simple: '{ax.target.name}' is declared simple", ax))
        elif isinstance(ax, RoleInc):
            if tbox.is_simple(ax.rhs) and not tbox.is_simple(ax.lhs):
                issues.append(TBoxIssue(
                    f"role included in simple role '{ax.rhs.name}' must itself be simple: "
                    f"'{ax.lhs.name}'", ax))
    return TBoxValidation(tuple(issues))


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def _fresh_name_factory(tbox: TBox):
    used = signature_of(tbox).concepts
    counter = 0

    def fresh() -> str:
        nonlocal counter
        while True:
            name = f"{FRESH_PREFIX}{counter}"
            counter += 1
            if name not in used:
                return name
    return fresh


def normalize(tbox: TBox) -> TBox:
    """Rewrite every axiom into one of the standard shapes.

    Concept inclusions end up with at most one compound side (a fresh named
    concept splits double-compound ones); role inclusions get a plain name on
    the left; ``B sub bot`` becomes a self-disjointness.  Inclusions with
    ``top`` on the left are kept as-is and handled natively by model
    construction and rewriting.
    """
    fresh = _fresh_name_factory(tbox)
    out: list[Axiom] = []
    for ax in tbox.axioms:
        if isinstance(ax, ConceptInc):
            lhs, rhs = ax.lhs, ax.rhs
            if isinstance(rhs, Top) or isinstance(lhs, Bot):
                continue  # tautology
            if isinstance(rhs, Bot):
                out.append(DisjConcepts(lhs, lhs))
                continue
            if isinstance(lhs, Exists) and isinstance(rhs, Exists):
                mid = Named(fresh())
                out.append(ConceptInc(lhs, mid))
                out.append(ConceptInc(mid, rhs))
                continue
            out.append(ax)
        elif isinstance(ax, RoleInc):
            if ax.lhs.inverted:
                out.append(RoleInc(ax.lhs.inverse(), ax.rhs.inverse()))
            else:
                out.append(ax)
        else:
            out.append(ax)
    return TBox(tuple(out), tbox.simple_roles)
