"""Immutable knowledge-base snapshot with lazily computed analysis results.

One context bundles a validated, normalized TBox, an ABox, and the declared
order constraints, and caches everything the reformulation and navigation
layers keep asking for: classification, consistency, the small model, the
resolved chain bound, entailed instances, and containment verdicts.
"""

from __future__ import annotations

from functools import cached_property
from typing import Sequence

from . import model, rewriting
from .analysis import TBoxKind, classify, find_chain_bound
from .errors import InconsistentKBError, UnboundedOrUnknownError
from .kb import ABox, Signature, TBox, is_reserved_name, normalize, signature_of, validate_tbox
from .queries import ConceptAtom, ConjunctiveQuery, RoleAtom, Variable


class KBContext:
    def __init__(self, tbox: TBox, abox: ABox,
                 constraints: Sequence = (), *,
                 version: int = 0,
                 max_steps: int | None = None,
                 bound_budget: int = 10_000):
        report = validate_tbox(tbox)
        if not report.ok:
            problems = "; ".join(issue.message for issue in report.issues)
            raise ValueError(f"ill-formed TBox: {problems}")
        self.original_tbox = tbox
        self.tbox = normalize(tbox)
        self.abox = abox
        self.constraints = tuple(constraints)
        self.version = version
        self.max_steps = max_steps if max_steps is not None else rewriting.configured_max_steps()
        self.bound_budget = bound_budget
        self._instance_cache: dict[tuple, frozenset] = {}
        self.containment_cache: dict[tuple, bool] = {}

    # -- analysis ----------------------------------------------------------

    @cached_property
    def classification(self):
        return classify(self.tbox)

    @cached_property
    def consistency(self) -> model.ConsistencyResult:
        return model.check_consistency(self.tbox, self.abox, self.max_steps)

    def ensure_consistent(self) -> None:
        verdict = self.consistency
        if not verdict:
            raise InconsistentKBError(axiom=verdict.violated_axiom,
                                      witness=verdict.witness)

    @cached_property
    def smod(self) -> model.Interpretation:
        return model.build_small_model(self.tbox, self.abox)

    @cached_property
    def user_signature(self) -> Signature:
        sig = signature_of(self.original_tbox, self.abox)
        return Signature(
            frozenset(c for c in sig.concepts if not is_reserved_name(c)),
            frozenset(r for r in sig.roles if not is_reserved_name(r)),
            frozenset(i for i in sig.individuals if not is_reserved_name(i)))

    # -- dimensions ----------------------------------------------------------

    @cached_property
    def constraints_by_role(self) -> dict:
        return {c.role: c for c in self.constraints}

    @cached_property
    def covers_report(self):
        from .dimensions import covers
        return covers(self.constraints, self.tbox)

    @cached_property
    def admissibility(self):
        from .dimensions import DimensionReport, check_admissibility
        if self.classification.kind is not TBoxKind.RECURSION_SAFE:
            return DimensionReport(not self.constraints, ())
        self.ensure_consistent()
        return check_admissibility(self.tbox, self.abox, self.constraints,
                                   smod=self.smod, skip_consistency=True)

    @cached_property
    def ell_value(self) -> int | None:
        from .dimensions import ell
        return ell(self.constraints) if self.constraints else None

    @cached_property
    def resolved_k(self) -> int:
        """Chain bound used for answering: the constraint-derived bound when
        the constraints cover the TBox and the data is admissible, otherwise
        an exact search over the data."""
        if (self.constraints and self.covers_report.covers
                and self.admissibility.admissible and self.ell_value):
            return self.ell_value
        bound = find_chain_bound(self.tbox, self.abox, self.bound_budget)
        if bound is None:
            raise UnboundedOrUnknownError(
                "no chain bound could be established within budget")
        return max(bound, 1)

    # -- answering -----------------------------------------------------------

    def certain(self, q: ConjunctiveQuery, *, k: int | None = None,
                method: str = "auto") -> model.AnswerSet:
        self.ensure_consistent()
        if (k is None and self.classification.kind is TBoxKind.RECURSION_SAFE
                and not (method in ("auto", "small-model")
                         and model.is_instance_query(q))):
            k = self.resolved_k
        return model.certain_answers(q, self.tbox, self.abox, k=k,
                                     method=method, max_steps=self.max_steps,
                                     bound_budget=self.bound_budget,
                                     skip_consistency=True)

    def entailed_concept_instances(self, concept: str) -> frozenset[str]:
        key = ("concept", concept)
        if key not in self._instance_cache:
            q = ConjunctiveQuery(("x",), frozenset({ConceptAtom(concept, Variable("x"))}))
            answers = self.certain(q)
            self._instance_cache[key] = frozenset(t[0] for t in answers.tuples)
        return self._instance_cache[key]

    def entailed_role_pairs(self, role: str) -> frozenset[tuple[str, str]]:
        key = ("role", role)
        if key not in self._instance_cache:
            q = ConjunctiveQuery(("x", "y"), frozenset(
                {RoleAtom(role, Variable("x"), Variable("y"))}))
            answers = self.certain(q)
            self._instance_cache[key] = frozenset((t[0], t[1]) for t in answers.tuples)
        return self._instance_cache[key]
