"""Order constraints over simple roles, admissibility checking, and
dimensional navigation (roll-up / drill-down) assembled from reformulation
moves."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Iterable, Sequence

from .analysis import TBoxKind, classify
from .errors import (EmptyConstraintSetError, InconsistentKBError,
                     NoApplicableChainError, NotADimensionVariableError,
                     UnsupportedFragmentError)
from .kb import TBox
from .model import Interpretation, build_small_model, evaluate
from .queries import (ConceptAtom, ConjunctiveQuery, EqAtom, Individual,
                      RoleAtom, Variable)

if TYPE_CHECKING:
    from .context import KBContext
    from .reformulate import RuleInstance


def _transitive_closure(pairs: frozenset[tuple[str, str]]) -> frozenset[tuple[str, str]]:
    closure = set(pairs)
    changed = True
    while changed:
        changed = False
        for a, b in list(closure):
            for c, d in list(closure):
                if b == c and (a, d) not in closure:
                    closure.add((a, d))
                    changed = True
    return frozenset(closure)


@dataclass(frozen=True)
class OrderConstraint:
    """Order constraint on a simple role: edges may only connect instances of
    the listed concepts upward along the strict partial order."""

    role: str
    concepts: frozenset[str]
    order: frozenset[tuple[str, str]]

    def __post_init__(self):
        for a, b in self.order:
            if a not in self.concepts or b not in self.concepts:
                raise ValueError(f"order pair ({a}, {b}) mentions a concept "
                                 "outside the constraint's concept set")
        closure = _transitive_closure(self.order)
        for a, b in closure:
            if a == b:
                raise ValueError(f"order over '{self.role}' is cyclic at '{a}'")

    @cached_property
    def closure(self) -> frozenset[tuple[str, str]]:
        return _transitive_closure(self.order)

    def __str__(self) -> str:
        pairs = ", ".join(f"{a} < {b}" for a, b in sorted(self.order))
        return f"ord {self.role} {{ {pairs} }}"


def ell(constraints: Sequence[OrderConstraint]) -> int:
    """Largest concept-set size across the constraints; this bounds the
    guard-chain length of admissible data."""
    if not constraints:
        raise EmptyConstraintSetError("no order constraints given")
    return max(len(c.concepts) for c in constraints)


@dataclass(frozen=True)
class CoversReport:
    covers: bool
    uncovered: tuple[tuple[str, str], ...] = ()  # (recursive role, guard)
    conflicts: tuple[str, ...] = ()


def covers(constraints: Sequence[OrderConstraint], tbox: TBox) -> CoversReport:
    """Whether every guard set of a recursive role is constrained, with all
    guards of one role sharing a single compatible strict partial order."""
    cls = classify(tbox)
    by_role = {c.role: c for c in constraints}
    uncovered: list[tuple[str, str]] = []
    conflicts: list[str] = []
    for role in sorted(cls.recursive_roles):
        guards = sorted(cls.guard_sets.get(role, frozenset()))
        if not guards:
            continue
        present = []
        for guard in guards:
            constraint = by_role.get(guard)
            if constraint is None:
                uncovered.append((role, guard))
            else:
                present.append(constraint)
        if len(present) > 1:
            merged = frozenset().union(*(c.order for c in present))
            closure = _transitive_closure(merged)
            if any(a == b for a, b in closure):
                conflicts.append(
                    f"guards of '{role}' carry incompatible orders")
    ok = not uncovered and not conflicts
    return CoversReport(ok, tuple(uncovered), tuple(conflicts))


# ---------------------------------------------------------------------------
# Admissibility (small-model query checks)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstraintCheck:
    constraint: OrderConstraint
    # Role pairs not covered by any ordered concept pair.
    unordered_pairs: tuple[tuple[str, str], ...]
    # Role pairs hitting a concept pair outside the order.
    forbidden_pairs: tuple[tuple[str, str], ...]

    @property
    def ok(self) -> bool:
        return not self.unordered_pairs and not self.forbidden_pairs


@dataclass(frozen=True)
class DimensionReport:
    admissible: bool
    checks: tuple[ConstraintCheck, ...]


def _pair_query(role: str) -> ConjunctiveQuery:
    x, y = Variable("x"), Variable("y")
    return ConjunctiveQuery(("x", "y"), frozenset({RoleAtom(role, x, y)}))


def _guarded_pair_query(first: str, role: str, second: str) -> ConjunctiveQuery:
    x, y = Variable("x"), Variable("y")
    return ConjunctiveQuery(("x", "y"), frozenset({
        ConceptAtom(first, x), RoleAtom(role, x, y), ConceptAtom(second, y)}))


def check_admissibility(tbox: TBox, abox, constraints: Sequence[OrderConstraint],
                        *, smod: Interpretation | None = None,
                        skip_consistency: bool = False) -> DimensionReport:
    """Evaluate each constraint over the small model: every role pair must be
    covered by some ordered concept pair (1) and must avoid every unordered
    concept pair (2).  Both condition checks run as unions of small queries."""
    from .model import check_consistency  # local to keep module load light

    cls = classify(tbox)
    if cls.kind is TBoxKind.GENERAL:
        raise UnsupportedFragmentError(
            "admissibility is checked over recursion-safe knowledge bases")
    if not skip_consistency:
        verdict = check_consistency(tbox, abox)
        if not verdict:
            raise InconsistentKBError(axiom=verdict.violated_axiom,
                                      witness=verdict.witness)
    if smod is None:
        smod = build_small_model(tbox, abox)

    checks: list[ConstraintCheck] = []
    for constraint in constraints:
        base = evaluate(_pair_query(constraint.role), smod)
        ordered = constraint.closure
        allowed: set = set()
        for a, b in sorted(ordered):
            allowed |= evaluate(_guarded_pair_query(a, constraint.role, b), smod)
        members = sorted(constraint.concepts)
        forbidden: set = set()
        for a in members:
            for b in members:
                if (a, b) not in ordered:
                    forbidden |= evaluate(
                        _guarded_pair_query(a, constraint.role, b), smod)
        unordered_pairs = tuple(sorted(
            (p[0].label, p[1].label) for p in base - allowed))
        forbidden_pairs = tuple(sorted(
            (p[0].label, p[1].label) for p in base & forbidden))
        checks.append(ConstraintCheck(constraint, unordered_pairs, forbidden_pairs))
    return DimensionReport(all(c.ok for c in checks), tuple(checks))


# ---------------------------------------------------------------------------
# Roll-up / drill-down
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NavigationChain:
    moves: tuple["RuleInstance", ...]
    result: ConjunctiveQuery
    guard_role: str
    source_categories: tuple[str, ...]
    target_categories: tuple[str, ...]


def _as_var_name(var) -> str:
    if isinstance(var, Variable):
        return var.name
    name = str(var)
    return name[1:] if name.startswith("?") else name


def _dimension_atoms(q: ConjunctiveQuery, var_name: str,
                     ctx: "KBContext") -> list[tuple[RoleAtom, frozenset[str]]]:
    """Role atoms with ``var_name`` in object position over a covered
    recursive role, paired with the role's guard set."""
    cls = ctx.classification
    found = []
    for atom in sorted(q.atoms, key=str):
        if not isinstance(atom, RoleAtom):
            continue
        if not (isinstance(atom.object, Variable) and atom.object.name == var_name):
            continue
        guards = cls.guard_sets.get(atom.role, frozenset())
        if atom.role in cls.recursive_roles and guards:
            if all(g in ctx.constraints_by_role for g in guards):
                found.append((atom, guards))
    return found


def _categories(ctx: "KBContext", constraint: OrderConstraint,
                individual: str) -> tuple[str, ...]:
    return tuple(sorted(
        concept for concept in constraint.concepts
        if individual in ctx.entailed_concept_instances(concept)))


def _require_admissible(ctx: "KBContext") -> None:
    ctx.ensure_consistent()
    if not ctx.constraints:
        raise NoApplicableChainError("no order constraints declared")
    if not ctx.covers_report.covers:
        raise NoApplicableChainError("order constraints do not cover the TBox")
    if not ctx.admissibility.admissible:
        raise NoApplicableChainError("knowledge base is not admissible")


def _eq_bindings(q: ConjunctiveQuery, var_name: str) -> list[tuple[EqAtom, str]]:
    out = []
    for atom in sorted(q.atoms, key=str):
        if not isinstance(atom, EqAtom):
            continue
        left, right = atom.left, atom.right
        if isinstance(left, Variable) and left.name == var_name and isinstance(right, Individual):
            out.append((atom, right.name))
        elif isinstance(right, Variable) and right.name == var_name and isinstance(left, Individual):
            out.append((atom, left.name))
    return out


def roll_up(q: ConjunctiveQuery, var, ctx: "KBContext") -> list[NavigationChain]:
    """Relax-move chains lifting the variable one level up its dimension.

    With the variable equated to an individual the chain is a data-driven
    re-binding to a parent followed by the chain-collapse relaxation; with a
    category atom instead, a data-driven pattern expansion takes its place.
    """
    from .reformulate import relax_moves

    var_name = _as_var_name(var)
    _require_admissible(ctx)
    dimension_atoms = _dimension_atoms(q, var_name, ctx)
    if not dimension_atoms:
        raise NotADimensionVariableError(
            f"?{var_name} is not the object of a covered recursive role atom")

    chains: list[NavigationChain] = []
    bindings = _eq_bindings(q, var_name)
    for role_atom, guards in dimension_atoms:
        for guard in sorted(guards):
            constraint = ctx.constraints_by_role[guard]
            if bindings:
                for eq_atom, bound in bindings:
                    parents = sorted(b for a, b in ctx.entailed_role_pairs(guard)
                                     if a == bound)
                    first_moves = relax_moves(q, ctx, data_driven=True)
                    for parent in parents:
                        fact = ("role", guard, bound, parent)
                        m1 = _find_move(first_moves, "GD2", (eq_atom,), fact=fact)
                        if m1 is None:
                            continue
                        m2 = _find_collapse(relax_moves(m1.result, ctx, data_driven=False),
                                            role_atom.role, guard, var_name)
                        if m2 is None:
                            continue
                        chains.append(NavigationChain(
                            (m1, m2), m2.result, guard,
                            _categories(ctx, constraint, bound),
                            _categories(ctx, constraint, parent)))
            else:
                concept_atoms = [a for a in sorted(q.atoms, key=str)
                                 if isinstance(a, ConceptAtom)
                                 and isinstance(a.term, Variable)
                                 and a.term.name == var_name
                                 and a.concept in constraint.concepts]
                first_moves = relax_moves(q, ctx, data_driven=True)
                for concept_atom in concept_atoms:
                    parents = sorted(b for a, b in constraint.order
                                     if a == concept_atom.concept)
                    for parent in parents:
                        m1 = _find_pattern_expansion(first_moves, concept_atom,
                                                     guard, parent)
                        if m1 is None:
                            continue
                        m2 = _find_collapse(relax_moves(m1.result, ctx, data_driven=False),
                                            role_atom.role, guard, var_name)
                        if m2 is None:
                            continue
                        chains.append(NavigationChain(
                            (m1, m2), m2.result, guard,
                            (concept_atom.concept,), (parent,)))
    return _dedup_chains(chains)


def drill_down(q: ConjunctiveQuery, var, ctx: "KBContext") -> list[NavigationChain]:
    """Restrain-move chains descending one dimension level: expand the role
    atom through the chain axiom, then bind the fresh variable to a child of
    the current individual."""
    from .reformulate import restrain_moves

    var_name = _as_var_name(var)
    _require_admissible(ctx)
    dimension_atoms = _dimension_atoms(q, var_name, ctx)
    if not dimension_atoms:
        raise NotADimensionVariableError(
            f"?{var_name} is not the object of a covered recursive role atom")
    bindings = _eq_bindings(q, var_name)
    if not bindings:
        raise NoApplicableChainError(
            f"?{var_name} is not equated to an individual; nothing to drill into")

    chains: list[NavigationChain] = []
    for role_atom, guards in dimension_atoms:
        first_moves = restrain_moves(q, ctx, data_driven=False)
        for guard in sorted(guards):
            constraint = ctx.constraints_by_role[guard]
            m1 = _find_expansion(first_moves, role_atom, guard)
            if m1 is None:
                continue
            second_moves = restrain_moves(m1.result, ctx, data_driven=True)
            for eq_atom, bound in bindings:
                children = sorted(a for a, b in ctx.entailed_role_pairs(guard)
                                  if b == bound)
                for child in children:
                    fact = ("role", guard, child, bound)
                    m2 = _find_child_binding(second_moves, guard, var_name,
                                             fact, child)
                    if m2 is None:
                        continue
                    chains.append(NavigationChain(
                        (m1, m2), m2.result, guard,
                        _categories(ctx, constraint, bound),
                        _categories(ctx, constraint, child)))
    return _dedup_chains(chains)


def _dedup_chains(chains: Iterable[NavigationChain]) -> list[NavigationChain]:
    from .queries import canonicalize, sort_key
    seen = set()
    unique = []
    for chain in sorted(chains, key=lambda c: (sort_key(canonicalize(c.result)),
                                               c.guard_role)):
        key = (canonicalize(chain.result), chain.guard_role,
               tuple(m.move_id for m in chain.moves))
        if key not in seen:
            seen.add(key)
            unique.append(chain)
    return unique


def _find_move(moves, rule_id: str, target: tuple, fact=None):
    for m in moves:
        if m.rule_id != rule_id or m.target != target:
            continue
        if fact is not None and m.justification.fact != fact:
            continue
        return m
    return None


def _find_collapse(moves, role: str, guard: str, var_name: str):
    """The chain-collapse relaxation consuming role(u, var), guard(var, z)."""
    for m in moves:
        if m.rule_id != "G6":
            continue
        role_atoms = [a for a in m.target if isinstance(a, RoleAtom)]
        if len(role_atoms) != 2:
            continue
        head = next((a for a in role_atoms if a.role == role), None)
        step = next((a for a in role_atoms if a.role == guard), None)
        if head is None or step is None:
            continue
        if (isinstance(head.object, Variable) and head.object.name == var_name
                and isinstance(step.subject, Variable)
                and step.subject.name == var_name):
            return m
    return None


def _find_expansion(moves, role_atom: RoleAtom, guard: str):
    """The chain expansion specialization on the given role atom."""
    from .kb import Cri
    for m in moves:
        if m.rule_id != "S6" or m.target != (role_atom,):
            continue
        ax = m.justification.axiom
        if isinstance(ax, Cri) and ax.guard.name == guard and ax.left == ax.target:
            return m
    return None


def _find_pattern_expansion(moves, concept_atom: ConceptAtom, guard: str, parent: str):
    """The data-driven replacement of a category atom by its parent pattern."""
    wanted = (("atomic", concept_atom.concept), ("pattern", guard, parent))
    for m in moves:
        if (m.rule_id == "GD4" and m.target == (concept_atom,)
                and m.justification.fact == wanted):
            return m
    return None


def _find_child_binding(moves, guard: str, var_name: str, fact, child: str):
    """The data-driven binding of the freshly introduced variable to a child."""
    for m in moves:
        if m.rule_id != "SD2" or m.justification.fact != fact:
            continue
        if m.variant != "subject":
            continue
        target = m.target
        if (len(target) == 1 and isinstance(target[0], RoleAtom)
                and target[0].role == guard
                and isinstance(target[0].object, Variable)
                and target[0].object.name == var_name):
            subj = target[0].subject
            if any(isinstance(a, EqAtom)
                   and ((a.left == subj and isinstance(a.right, Individual)
                         and a.right.name == child)
                        or (a.right == subj and isinstance(a.left, Individual)
                            and a.left.name == child))
                   for a in m.result.atoms):
                return m
    return None
