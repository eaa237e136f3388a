"""Recursion analysis over TBoxes: dependency graph, fragment classification,
simple-role closures, and chain-boundedness of ABoxes."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

from .errors import UnsupportedFragmentError
from .kb import (ABox, Axiom, ConceptInc, Cri, Exists, Named, Role, RoleInc,
                 TBox)

# A graph node is ("concept"|"role", name).
Node = tuple[str, str]

DEFAULT_NODE_BUDGET = 10_000


@dataclass(frozen=True)
class RecursionGraph:
    nodes: frozenset[Node]
    # Edge -> the axioms that generated it (kept for explainability).
    edges: Mapping[tuple[Node, Node], tuple[Axiom, ...]]

    def successors(self, node: Node) -> list[Node]:
        return sorted(dst for (src, dst) in self.edges if src == node)


def recursion_graph(tbox: TBox) -> RecursionGraph:
    """Dependency graph with one node per concept/role name of the TBox.

    Edges point from the derived name to the names whose facts can trigger
    it: superconcept to subconcept, superrole to subrole, existential range
    to its trigger concept and back, and chain target to both chain parts.
    """
    nodes: set[Node] = set()
    edges: dict[tuple[Node, Node], list[Axiom]] = {}

    def add_node(node: Node):
        nodes.add(node)

    def add_edge(src: Node, dst: Node, ax: Axiom):
        nodes.add(src)
        nodes.add(dst)
        edges.setdefault((src, dst), []).append(ax)

    for ax in tbox.axioms:
        if isinstance(ax, ConceptInc):
            lhs, rhs = ax.lhs, ax.rhs
            if isinstance(lhs, Named):
                add_node(("concept", lhs.name))
            if isinstance(rhs, Named):
                add_node(("concept", rhs.name))
            if isinstance(lhs, Exists):
                add_node(("role", lhs.role.name))
            if isinstance(rhs, Exists):
                add_node(("role", rhs.role.name))
            if isinstance(lhs, Named) and isinstance(rhs, Named):
                add_edge(("concept", rhs.name), ("concept", lhs.name), ax)
            elif isinstance(lhs, Named) and isinstance(rhs, Exists):
                add_edge(("role", rhs.role.name), ("concept", lhs.name), ax)
            elif isinstance(lhs, Exists) and isinstance(rhs, Named):
                add_edge(("concept", rhs.name), ("role", lhs.role.name), ax)
        elif isinstance(ax, RoleInc):
            add_edge(("role", ax.rhs.name), ("role", ax.lhs.name), ax)
        elif isinstance(ax, Cri):
            add_edge(("role", ax.target.name), ("role", ax.left.name), ax)
            add_edge(("role", ax.target.name), ("role", ax.guard.name), ax)
    return RecursionGraph(frozenset(nodes),
                          {k: tuple(v) for k, v in edges.items()})


def _strongly_connected_components(graph: RecursionGraph) -> list[frozenset[Node]]:
    """Iterative Tarjan."""
    index: dict[Node, int] = {}
    lowlink: dict[Node, int] = {}
    on_stack: set[Node] = set()
    stack: list[Node] = []
    counter = 0
    components: list[frozenset[Node]] = []

    adj: dict[Node, list[Node]] = {n: [] for n in graph.nodes}
    for (src, dst) in graph.edges:
        adj[src].append(dst)
    for n in adj:
        adj[n].sort()

    for root in sorted(graph.nodes):
        if root in index:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = lowlink[succ] = counter
                    counter += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(adj[succ])))
                    advanced = True
                    break
                if succ in on_stack:
                    lowlink[node] = min(lowlink[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                component = set()
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.add(member)
                    if member == node:
                        break
                components.append(frozenset(component))
    return components


def recursive_role_names(graph: RecursionGraph) -> frozenset[str]:
    """Role names whose node lies on a cycle (larger component or self-loop)."""
    recursive: set[str] = set()
    for component in _strongly_connected_components(graph):
        if len(component) > 1:
            recursive |= {name for kind, name in component if kind == "role"}
    for (src, dst) in graph.edges:
        if src == dst and src[0] == "role":
            recursive.add(src[1])
    return frozenset(recursive)


class TBoxKind(enum.Enum):
    NON_RECURSIVE = "non-recursive"
    RECURSION_SAFE = "recursion-safe"
    GENERAL = "general"


@dataclass(frozen=True)
class TBoxClass:
    kind: TBoxKind
    recursive_roles: frozenset[str]
    guard_sets: Mapping[str, frozenset[str]]
    reasons: tuple[str, ...] = ()

    @property
    def is_non_recursive(self) -> bool:
        return self.kind is TBoxKind.NON_RECURSIVE

    @property
    def is_recursion_safe(self) -> bool:
        return self.kind is TBoxKind.RECURSION_SAFE


def simple_superroles(tbox: TBox, role: Role) -> frozenset[Role]:
    """Reflexive-transitive closure of ``role`` under role inclusions whose
    right side is simple.  Closed over inverses of the inclusion axioms."""
    closure: set[Role] = {role}
    frontier = [role]
    while frontier:
        current = frontier.pop()
        for ax in tbox.role_incs():
            if not tbox.is_simple(ax.rhs):
                continue
            for lhs, rhs in ((ax.lhs, ax.rhs), (ax.lhs.inverse(), ax.rhs.inverse())):
                if lhs == current and rhs not in closure:
                    closure.add(rhs)
                    frontier.append(rhs)
    return frozenset(closure)


def _existentially_implied_roles(tbox: TBox) -> frozenset[Role]:
    """Roles appearing under an existential on the right of a concept inclusion."""
    implied: set[Role] = set()
    for ax in tbox.concept_incs():
        if isinstance(ax.rhs, Exists):
            implied.add(ax.rhs.role)
    return frozenset(implied)


def classify(tbox: TBox) -> TBoxClass:
    """Most specific fragment: non-recursive, recursion-safe, or general.

    Non-recursive means no chain axiom targets a role on a cycle.  Otherwise
    the TBox is recursion-safe when every recursive chain axiom is of the
    self shape ``r . s sub r`` with only a self-loop through the target node,
    and no chain guard (up to simple superroles) is existentially implied.
    """
    graph = recursion_graph(tbox)
    recursive = recursive_role_names(graph)
    cris = list(tbox.cris())

    guard_sets = {
        r: frozenset(c.guard.name for c in cris
                     if c.target.name == r and c.left.name == r)
        for r in sorted(recursive)
    }

    if not any(c.target.name in recursive for c in cris):
        return TBoxClass(TBoxKind.NON_RECURSIVE, recursive, guard_sets)

    reasons: list[str] = []
    multi_cycle_roles = {name for component in _strongly_connected_components(graph)
                         if len(component) > 1
                         for kind, name in component if kind == "role"}
    for c in cris:
        if c.target.name in recursive:
            if c.target.name in multi_cycle_roles:
                reasons.append(
                    f"role '{c.target.name}' lies on a cycle of length > 1")
            if c.left.name != c.target.name:
                reasons.append(
                    f"recursive chain axiom '{c}' is not of the self shape")

    implied = _existentially_implied_roles(tbox)
    for c in cris:
        guard = Role(c.guard.name)
        for t in implied:
            supers = simple_superroles(tbox, t)
            if guard in supers or guard.inverse() in supers:
                reasons.append(
                    f"guard role '{guard.name}' of '{c}' is existentially implied via '{t}'")

    if reasons:
        return TBoxClass(TBoxKind.GENERAL, recursive, guard_sets, tuple(sorted(set(reasons))))
    return TBoxClass(TBoxKind.RECURSION_SAFE, recursive, guard_sets)


# ---------------------------------------------------------------------------
# Chain boundedness of ABoxes
# ---------------------------------------------------------------------------

class Boundedness(enum.Enum):
    BOUNDED = "bounded"
    NOT_BOUNDED = "not-bounded"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class BoundReport:
    status: Boundedness
    # Longest guard-chain length found per recursive role (exact unless UNKNOWN).
    longest: Mapping[str, int] = field(default_factory=dict)
    witness: tuple[str, ...] | None = None
    witness_role: str | None = None


def _guard_edges(tbox: TBox, abox: ABox, guards: frozenset[str]) -> dict[str, set[str]]:
    """Directed edges of the ABox that read as a guard-role step, following
    simple superrole closure in both orientations."""
    adjacency: dict[str, set[str]] = {}
    closure_cache: dict[str, frozenset[Role]] = {}
    for role, a, b in sorted(abox.role_assertions):
        if role not in closure_cache:
            closure_cache[role] = simple_superroles(tbox, Role(role))
        for sup in closure_cache[role]:
            if sup.name in guards:
                if sup.inverted:
                    adjacency.setdefault(b, set()).add(a)
                else:
                    adjacency.setdefault(a, set()).add(b)
    return adjacency


def _is_acyclic(adjacency: dict[str, set[str]]) -> bool:
    color: dict[str, int] = {}
    nodes = set(adjacency) | {w for ws in adjacency.values() for w in ws}
    for start in nodes:
        if color.get(start):
            continue
        stack = [(start, iter(sorted(adjacency.get(start, ()))))]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for succ in it:
                if color.get(succ) == 1:
                    return False
                if not color.get(succ):
                    color[succ] = 1
                    stack.append((succ, iter(sorted(adjacency.get(succ, ())))))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()
    return True


def _longest_dag_path(adjacency: dict[str, set[str]]) -> tuple[int, tuple[str, ...]]:
    nodes = sorted(set(adjacency) | {w for ws in adjacency.values() for w in ws})
    best: dict[str, tuple[int, tuple[str, ...]]] = {}

    def visit(node: str) -> tuple[int, tuple[str, ...]]:
        if node in best:
            return best[node]
        result = (0, (node,))
        for succ in sorted(adjacency.get(node, ())):
            length, path = visit(succ)
            if length + 1 > result[0]:
                result = (length + 1, (node,) + path)
        best[node] = result
        return result

    top = (0, ())
    for node in nodes:
        candidate = visit(node)
        if candidate[0] > top[0]:
            top = candidate
    return top


def _longest_path_exact(adjacency: dict[str, set[str]],
                        budget: int) -> tuple[int, tuple[str, ...]] | None:
    """Longest walk whose interior nodes are pairwise distinct and differ
    from both endpoints (endpoints themselves may coincide).  Returns None
    when the expansion budget is exhausted."""
    nodes = sorted(set(adjacency) | {w for ws in adjacency.values() for w in ws})
    expansions = 0
    best = (0, tuple())

    def explore(path: list[str], interior: set[str]) -> bool:
        nonlocal expansions, best
        expansions += 1
        if expansions > budget:
            return False
        current = path[-1]
        start = path[0]
        if current not in interior and len(path) - 1 > best[0]:
            best = (len(path) - 1, tuple(path))
        extendable = len(path) == 1 or (current != start and current not in interior)
        if not extendable:
            return True
        if len(path) > 1:
            interior = interior | {current}
        for succ in sorted(adjacency.get(current, ())):
            path.append(succ)
            ok = explore(path, interior)
            path.pop()
            if not ok:
                return False
        return True

    for start in nodes:
        if not explore([start], set()):
            return None
    if not best[1]:
        best = (0, (nodes[0],) if nodes else ())
    return best


def longest_guard_chain(tbox: TBox, abox: ABox, guards: frozenset[str],
                        budget: int = DEFAULT_NODE_BUDGET
                        ) -> tuple[int, tuple[str, ...]] | None:
    """Exact longest guard-role chain in the ABox, or None on budget overflow."""
    adjacency = _guard_edges(tbox, abox, guards)
    if not adjacency:
        return (0, ())
    if _is_acyclic(adjacency):
        return _longest_dag_path(adjacency)
    return _longest_path_exact(adjacency, budget)


def check_k_bounded(tbox: TBox, abox: ABox, k: int,
                    budget: int = DEFAULT_NODE_BUDGET) -> BoundReport:
    """Decide whether no recursive role admits a guard chain longer than k.

    Intermediate chain individuals must be pairwise distinct and distinct
    from the endpoints; endpoints may repeat.  Falls back to UNKNOWN only
    when the exact search overruns ``budget`` on a cyclic chain graph.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    cls = classify(tbox)
    if cls.kind is TBoxKind.GENERAL:
        raise UnsupportedFragmentError(
            "k-boundedness is defined for recursion-safe TBoxes")
    longest: dict[str, int] = {}
    for role in sorted(cls.recursive_roles):
        guards = cls.guard_sets.get(role, frozenset())
        result = longest_guard_chain(tbox, abox, guards, budget)
        if result is None:
            return BoundReport(Boundedness.UNKNOWN, longest)
        length, path = result
        longest[role] = length
        if length > k:
            return BoundReport(Boundedness.NOT_BOUNDED, longest, path, role)
    return BoundReport(Boundedness.BOUNDED, longest)


def find_chain_bound(tbox: TBox, abox: ABox,
                     budget: int = DEFAULT_NODE_BUDGET) -> int | None:
    """Smallest k for which the ABox is k-bounded, or None on budget overflow.

    Returns 0 for TBoxes without recursive roles (any positive k works).
    """
    cls = classify(tbox)
    if cls.kind is TBoxKind.GENERAL:
        raise UnsupportedFragmentError(
            "chain bounds are defined for recursion-safe TBoxes")
    bound = 0
    for role in sorted(cls.recursive_roles):
        guards = cls.guard_sets.get(role, frozenset())
        result = longest_guard_chain(tbox, abox, guards, budget)
        if result is None:
            return None
        bound = max(bound, result[0])
    return bound
