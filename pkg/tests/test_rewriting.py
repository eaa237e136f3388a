import random

import pytest

from obdax import (ABox, CapExceededError, ConceptInc, Cri, Exists, Named,
                   RecursiveTBoxError, Role, RoleInc, TBox, TBoxKind,
                   canonicalize, classify, k_rewrite, k_unfold, normalize,
                   queries_equivalent, rewrite)

from conftest import load_query
from kbgen import random_abox, random_query, random_tbox


def test_rewrite_cultur_event(events_doc):
    q = load_query("q(?x) :- CulturEvent(?x).")
    result = rewrite(q, normalize(events_doc.tbox))
    expected = {canonicalize(load_query(f"q(?x) :- {concept}(?x)."))
                for concept in ("CulturEvent", "Exhibition", "Concert")}
    assert result.queries == frozenset(expected)


def test_rewrite_empty_tbox_is_identity():
    q = load_query("q(?x) :- A(?x), r(?x,?y).")
    result = rewrite(q, TBox())
    # Only variable unification applies; the seed is always present.
    assert canonicalize(q) in result.queries
    assert all(len(d.atoms) <= len(q.atoms) for d in result.queries)


def test_rewrite_existential_expansion():
    tbox = TBox((ConceptInc(Exists(Role("r")), Named("A")),))
    q = load_query("q(?x) :- A(?x).")
    result = rewrite(q, tbox)
    expanded = load_query("q(?x) :- r(?x,?z).")
    assert any(queries_equivalent(d, expanded) for d in result.queries)


def test_rewrite_seed_membership():
    rng = random.Random(3)
    for _ in range(15):
        tbox = normalize(random_tbox(rng, "non-recursive"))
        abox = random_abox(rng, tbox)
        q = random_query(rng, tbox, abox)
        assert canonicalize(q) in rewrite(q, tbox).queries


def test_rewrite_absorption_blocked_by_equality_occurrence():
    tbox = TBox((ConceptInc(Named("A"), Exists(Role("r"))),))
    absorbed = canonicalize(load_query("q(?x) :- A(?x)."))
    free = load_query("q(?x) :- r(?x,?y).")
    assert absorbed in rewrite(free, tbox).queries
    pinned = load_query("q(?x) :- r(?x,?y), ?y = Vienna.")
    assert absorbed not in rewrite(pinned, tbox).queries


def test_rewrite_inverse_existential_absorption():
    tbox = TBox((ConceptInc(Named("A"), Exists(Role("r", inverted=True))),))
    q = load_query("q(?x) :- r(?y,?x).")
    absorbed = canonicalize(load_query("q(?x) :- A(?x)."))
    assert absorbed in rewrite(q, tbox).queries


def test_rewrite_merges_answer_variables_for_completeness():
    tbox = TBox((ConceptInc(Named("A"), Exists(Role("r"))),))
    q = load_query("q(?x1,?x2) :- r(?x1,?y), r(?x2,?y).")
    result = rewrite(q, tbox)
    merged = [d for d in result.queries if d.answer_vars[0] == d.answer_vars[1]]
    assert any(str(a) == f"A(?{d.answer_vars[0]})"
               for d in merged for a in d.atoms)


def test_rewrite_rejects_recursive_tbox(events_cri_doc):
    q = load_query("q(?x) :- CulturEvent(?x).")
    with pytest.raises(RecursiveTBoxError):
        rewrite(q, normalize(events_cri_doc.tbox))


def test_rewrite_step_cap():
    tbox = TBox((ConceptInc(Named("A1"), Named("A2")),
                 ConceptInc(Named("A2"), Named("A3"))))
    q = load_query("q(?x) :- A3(?x).")
    with pytest.raises(CapExceededError):
        rewrite(q, tbox, max_steps=1)


def test_rewrite_order_independent(events_doc):
    tbox = normalize(events_doc.tbox)
    q = load_query("q(?x) :- Event(?x), occursIn(?x,?y), City(?y).")
    baseline = rewrite(q, tbox).queries
    rng = random.Random(5)
    for _ in range(4):
        axioms = list(tbox.axioms)
        rng.shuffle(axioms)
        shuffled = TBox(tuple(axioms), tbox.simple_roles)
        assert rewrite(q, shuffled).queries == baseline


def test_rewrite_handles_top_inclusions():
    from obdax import TOP, certain_answers
    tbox = TBox((ConceptInc(TOP, Named("A")),))
    abox = ABox(frozenset({("B", "b")}), frozenset())
    q = load_query("q(?x) :- A(?x).")
    answers = certain_answers(q, tbox, abox)
    assert answers.tuples == frozenset({("b",)})


def test_unfold_event_cri_schema(events_cri_doc):
    tbox = normalize(events_cri_doc.tbox)
    unfolded, renaming = k_unfold(tbox, 2)
    assert set(renaming) == {"occursIn"}
    hat = renaming["occursIn"]
    cris = [ax for ax in unfolded.axioms if isinstance(ax, Cri)]
    assert len(cris) == 2
    assert all(ax.guard.name == "locatedIn" for ax in cris)
    levels = {ax.left.name for ax in cris} | {ax.target.name for ax in cris}
    assert len(levels) == 3
    role_incs = [ax for ax in unfolded.axioms if isinstance(ax, RoleInc)]
    into_hat = [ax for ax in role_incs if ax.rhs.name == hat]
    assert len(into_hat) == 3  # levels 0..2
    base = [ax for ax in role_incs if ax.lhs.name == "occursIn"]
    assert len(base) == 1
    assert classify(unfolded).kind is TBoxKind.NON_RECURSIVE


def test_unfold_at_zero(events_cri_doc):
    tbox = normalize(events_cri_doc.tbox)
    unfolded, renaming = k_unfold(tbox, 0)
    cris = [ax for ax in unfolded.axioms if isinstance(ax, Cri)]
    assert not cris
    hat = renaming["occursIn"]
    role_incs = [ax for ax in unfolded.axioms if isinstance(ax, RoleInc)]
    assert any(ax.lhs.name == "occursIn" for ax in role_incs)
    assert sum(1 for ax in role_incs if ax.rhs.name == hat) == 1


def test_unfold_non_recursive_unchanged(events_doc):
    tbox = normalize(events_doc.tbox)
    unfolded, renaming = k_unfold(tbox, 3)
    assert unfolded == tbox
    assert renaming == {}


def test_unfold_shares_stack_across_guards():
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),
                 Cri(Role("r"), Role("t"), Role("r"))),
                frozenset({"s", "t"}))
    unfolded, _ = k_unfold(tbox, 2)
    cris = [ax for ax in unfolded.axioms if isinstance(ax, Cri)]
    # Two guards on each of the two levels share one stack.
    assert len(cris) == 4
    assert len({ax.left.name for ax in cris}) == 2


def test_k_rewrite_contains_chain_disjunct(events_cri_doc):
    tbox = normalize(events_cri_doc.tbox)
    q = load_query("q(?x) :- Concert(?x), occursIn(?x,?y), ?y = Vienna.")
    result = k_rewrite(q, tbox, 2)
    chain = load_query(
        "q(?x) :- Concert(?x), occursIn(?x,?z), locatedIn(?z,?y), ?y = Vienna.")
    assert any(queries_equivalent(d, chain) for d in result.queries)


def test_k_rewrite_without_recursive_atoms_matches_plain(events_cri_doc, events_doc):
    from obdax import abox_interpretation, evaluate
    tbox = normalize(events_cri_doc.tbox)
    q = load_query("q(?x) :- Venue(?x).")
    data = abox_interpretation(events_cri_doc.abox)
    via_k = set()
    for d in k_rewrite(q, tbox, 2).queries:
        via_k |= set(evaluate(d, data))
    via_plain = set()
    for d in rewrite(q, normalize(events_doc.tbox)).queries:
        via_plain |= set(evaluate(d, data))
    assert via_k == via_plain


def test_k_rewrite_matches_reference_unfolding(events_cri_doc):
    # The chain-expansion computation must answer exactly like saturating the
    # redirected query over the literally unfolded TBox.
    from obdax import RoleAtom, abox_interpretation, evaluate
    from obdax.queries import ConjunctiveQuery
    tbox = normalize(events_cri_doc.tbox)
    data = abox_interpretation(events_cri_doc.abox)
    for text in ("q(?x) :- Concert(?x), occursIn(?x,?y), ?y = Vienna.",
                 "q(?x) :- Event(?x), occursIn(?x,?y), City(?y)."):
        q = load_query(text)
        unfolded, renaming = k_unfold(tbox, 2)
        atoms = frozenset(
            RoleAtom(renaming[a.role], a.subject, a.object)
            if isinstance(a, RoleAtom) and a.role in renaming else a
            for a in q.atoms)
        redirected = ConjunctiveQuery(q.answer_vars, atoms)
        reference = set()
        for d in rewrite(redirected, unfolded).queries:
            reference |= set(evaluate(d, data))
        fast = set()
        for d in k_rewrite(q, tbox, 2).queries:
            fast |= set(evaluate(d, data))
        assert fast == reference


def test_saturation_terminates_and_bounds_atom_growth():
    rng = random.Random(17)
    for _ in range(25):
        tbox = normalize(random_tbox(rng, "non-recursive",
                                     allow_disjointness=False))
        abox = random_abox(rng, tbox)
        q = random_query(rng, tbox, abox)
        result = rewrite(q, tbox)
        n_cris = sum(1 for ax in tbox.axioms if isinstance(ax, Cri))
        bound = len(q.atoms) * (1 + n_cris) + 1
        assert all(len(d.atoms) <= bound for d in result.queries)
        assert result.stats.steps < result.stats.cap
