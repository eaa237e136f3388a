"""Hand-crafted differential corners the random generator rarely produces:
inverse-heavy chains, boolean queries, repeated-variable heads, top axioms,
and derived disjointness violations."""

import pytest

from obdax import (ABox, ConceptInc, Cri, DisjConcepts, DisjRoles, Exists,
                   Named, Role, RoleInc, TBox, TOP, certain_answers,
                   check_consistency, normalize, oracle_certain_answers,
                   oracle_consistent)

from conftest import load_query


def _agree(q, tbox, abox, budget=500):
    tbox = normalize(tbox)
    answers = certain_answers(q, tbox, abox, skip_consistency=True)
    oracle, exact = oracle_certain_answers(q, tbox, abox, budget)
    assert exact, "oracle did not saturate; pick a smaller corner case"
    assert answers.tuples == oracle.tuples, (
        f"{sorted(answers.tuples)} != {sorted(oracle.tuples)}")
    return answers.tuples


def test_inverse_existential_feeding_a_chain():
    # Anonymous chain subjects: the derived edges exist only off named data.
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),
                 ConceptInc(Named("A"), Exists(Role("r", inverted=True))),
                 ConceptInc(Exists(Role("r", inverted=True)), Named("Reached"))),
                frozenset({"s"}))
    abox = ABox(frozenset({("A", "a")}),
                frozenset({("s", "a", "b"), ("s", "b", "c")}))
    tuples = _agree(load_query("q(?x) :- Reached(?x)."), tbox, abox)
    assert tuples == frozenset({("a",), ("b",), ("c",)})


def test_boolean_query_over_recursive_chain():
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),
                 ConceptInc(Named("End"), Named("Target"))),
                frozenset({"s"}))
    abox = ABox(frozenset({("Target", "c")}),
                frozenset({("r", "a", "b"), ("s", "b", "c")}))
    q = load_query("q() :- r(?x,?y), Target(?y).")
    assert _agree(q, tbox, abox) == frozenset({()})


def test_repeated_answer_variable_positions():
    tbox = TBox((ConceptInc(Named("A"), Exists(Role("r"))),))
    abox = ABox(frozenset({("A", "a")}), frozenset({("r", "b", "b")}))
    q = load_query("q(?x,?y) :- r(?x,?z), r(?y,?z).")
    tuples = _agree(q, tbox, abox)
    assert ("a", "a") in tuples
    assert ("b", "b") in tuples


def test_top_axiom_through_both_paths():
    tbox = TBox((ConceptInc(TOP, Named("Thing")),
                 ConceptInc(Named("Thing"), Named("Entity"))))
    abox = ABox(frozenset({("B", "b")}), frozenset({("r", "c", "d")}))
    q = load_query("q(?x) :- Entity(?x).")
    tuples = _agree(q, tbox, abox)
    assert tuples == frozenset({("b",), ("c",), ("d",)})


def test_inverse_role_hierarchy_round_trip():
    tbox = TBox((RoleInc(Role("child"), Role("parent", inverted=True)),
                 ConceptInc(Exists(Role("parent")), Named("HasParent"))))
    abox = ABox(frozenset(), frozenset({("child", "p", "c")}))
    tuples = _agree(load_query("q(?x) :- HasParent(?x)."), tbox, abox)
    assert tuples == frozenset({("c",)})


def test_derived_role_disjointness_agreement():
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),
                 DisjRoles(Role("r"), Role("q"))),
                frozenset({"s"}))
    abox = ABox(frozenset(), frozenset({("r", "a", "b"), ("s", "b", "c"),
                                        ("q", "a", "c")}))
    # r(a, c) is derived through the chain, clashing with q(a, c).
    verdict = check_consistency(normalize(tbox), abox)
    assert not verdict.consistent
    assert oracle_consistent(normalize(tbox), abox) is False


def test_derived_concept_disjointness_agreement():
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),
                 ConceptInc(Exists(Role("r")), Named("Src")),
                 ConceptInc(Exists(Role("r", inverted=True)), Named("Dst")),
                 DisjConcepts(Named("Src"), Named("Dst"))),
                frozenset({"s"}))
    consistent_data = ABox(frozenset(), frozenset({("r", "a", "b"),
                                                   ("s", "b", "c")}))
    verdict = check_consistency(normalize(tbox), consistent_data)
    assert verdict.consistent
    assert oracle_consistent(normalize(tbox), consistent_data) is True

    looped = ABox(frozenset(), frozenset({("r", "a", "b"), ("s", "b", "a")}))
    # The chain derives r(a, a), putting a into both Src and Dst.
    verdict = check_consistency(normalize(tbox), looped)
    assert not verdict.consistent
    assert oracle_consistent(normalize(tbox), looped) is False


def test_equality_between_two_variables():
    tbox = TBox((ConceptInc(Named("A"), Named("B")),))
    abox = ABox(frozenset({("A", "a"), ("B", "b")}), frozenset())
    q = load_query("q(?x) :- A(?x), B(?y), ?x = ?y.")
    assert _agree(q, tbox, abox) == frozenset({("a",)})


def test_chain_guard_with_subrole_data():
    # Guard steps asserted through a sub-role of the guard.
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),
                 RoleInc(Role("t"), Role("s")),
                 ConceptInc(Exists(Role("r", inverted=True)), Named("Hit"))),
                frozenset({"s", "t"}))
    abox = ABox(frozenset(), frozenset({("r", "a", "b"), ("t", "b", "c")}))
    tuples = _agree(load_query("q(?x) :- Hit(?x)."), tbox, abox)
    assert tuples == frozenset({("b",), ("c",)})


def test_guard_asserted_through_inverse_subrole():
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),
                 RoleInc(Role("t"), Role("s", inverted=True)),
                 ConceptInc(Exists(Role("r", inverted=True)), Named("Hit"))),
                frozenset({"s", "t"}))
    # t(c, b) reads as an s-edge from b to c.
    abox = ABox(frozenset(), frozenset({("r", "a", "b"), ("t", "c", "b")}))
    tuples = _agree(load_query("q(?x) :- Hit(?x)."), tbox, abox)
    assert tuples == frozenset({("b",), ("c",)})
