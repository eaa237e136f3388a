import random

import pytest

from obdax import (ABox, Boundedness, ConceptInc, Cri, Exists, Named, Role,
                   RoleInc, TBox, TBoxKind, UnsupportedFragmentError,
                   check_k_bounded, classify, find_chain_bound, normalize,
                   recursion_graph, simple_superroles)

from kbgen import random_tbox


def test_graph_single_concept_inclusion():
    tbox = TBox((ConceptInc(Named("A1"), Named("A2")),))
    graph = recursion_graph(tbox)
    assert (("concept", "A2"), ("concept", "A1")) in graph.edges
    assert len(graph.edges) == 1


def test_graph_empty_tbox():
    graph = recursion_graph(TBox())
    assert not graph.nodes
    assert not graph.edges


def test_graph_event_cri(events_cri_doc):
    graph = recursion_graph(normalize(events_cri_doc.tbox))
    assert (("role", "occursIn"), ("role", "occursIn")) in graph.edges
    assert (("role", "occursIn"), ("role", "locatedIn")) in graph.edges
    cls = classify(normalize(events_cri_doc.tbox))
    assert "locatedIn" not in cls.recursive_roles
    assert cls.recursive_roles == frozenset({"occursIn"})


def test_graph_edges_carry_axioms(events_cri_doc):
    graph = recursion_graph(normalize(events_cri_doc.tbox))
    axioms = graph.edges[(("role", "occursIn"), ("role", "occursIn"))]
    assert any(isinstance(ax, Cri) for ax in axioms)


def test_graph_monotone_under_axiom_addition():
    rng = random.Random(11)
    for _ in range(20):
        tbox = random_tbox(rng, "non-recursive")
        edges = set(recursion_graph(tbox).edges)
        extended = TBox(tbox.axioms + (ConceptInc(Named("C0"), Named("C7")),),
                        tbox.simple_roles)
        assert edges <= set(recursion_graph(extended).edges)


def test_classify_event_tbox_non_recursive(events_doc):
    assert classify(normalize(events_doc.tbox)).kind is TBoxKind.NON_RECURSIVE


def test_classify_event_cri_recursion_safe(events_cri_doc):
    cls = classify(normalize(events_cri_doc.tbox))
    assert cls.kind is TBoxKind.RECURSION_SAFE
    assert cls.guard_sets == {"occursIn": frozenset({"locatedIn"})}


def test_classify_existential_guard_is_general():
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),
                 ConceptInc(Named("A"), Exists(Role("s")))),
                frozenset({"s"}))
    cls = classify(tbox)
    assert cls.kind is TBoxKind.GENERAL
    assert any("existentially implied" in reason for reason in cls.reasons)


def test_classify_non_self_recursive_cri_is_general():
    # r and t sit on a two-node cycle through role inclusions.
    tbox = TBox((Cri(Role("r"), Role("s"), Role("t")),
                 RoleInc(Role("t"), Role("r")),
                 RoleInc(Role("r"), Role("t"))),
                frozenset({"s"}))
    assert classify(tbox).kind is TBoxKind.GENERAL


def test_classify_guard_reached_through_simple_closure():
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),
                 RoleInc(Role("s2"), Role("s")),
                 ConceptInc(Named("A"), Exists(Role("s2")))),
                frozenset({"s", "s2"}))
    assert classify(tbox).kind is TBoxKind.GENERAL


def test_most_specific_class_reported():
    # A non-recursive chain axiom whose guard is existentially implied is
    # still non-recursive; the safety conditions only gate recursive chains.
    tbox = TBox((Cri(Role("r"), Role("s"), Role("t")),
                 ConceptInc(Named("A"), Exists(Role("s")))),
                frozenset({"s"}))
    assert classify(tbox).kind is TBoxKind.NON_RECURSIVE


def test_simple_superroles_reflexive():
    assert simple_superroles(TBox(), Role("r")) == frozenset({Role("r")})


def test_simple_superroles_two_step_chain():
    tbox = TBox((RoleInc(Role("p"), Role("s")), RoleInc(Role("s"), Role("q"))),
                frozenset({"s", "q"}))
    assert simple_superroles(tbox, Role("p")) == frozenset(
        {Role("p"), Role("s"), Role("q")})


def test_simple_superroles_event_fixture(events_cri_doc):
    tbox = normalize(events_cri_doc.tbox)
    assert simple_superroles(tbox, Role("locatedIn")) == frozenset({Role("locatedIn")})


def test_simple_superroles_follow_inverses():
    tbox = TBox((RoleInc(Role("p"), Role("s", inverted=True)),), frozenset({"s"}))
    assert Role("s", inverted=True) in simple_superroles(tbox, Role("p"))
    assert Role("s") in simple_superroles(tbox, Role("p", inverted=True))


@pytest.fixture(scope="module")
def event_cri_tbox_small_data(events_doc, events_cri_doc):
    """The chain-axiom TBox paired with the six-individual dataset only."""
    return normalize(events_cri_doc.tbox), events_doc.abox


def test_k_bounded_event_data(event_cri_tbox_small_data):
    tbox, abox = event_cri_tbox_small_data
    assert check_k_bounded(tbox, abox, 2).status is Boundedness.BOUNDED


def test_not_k_bounded_with_witness(event_cri_tbox_small_data):
    tbox, abox = event_cri_tbox_small_data
    report = check_k_bounded(tbox, abox, 1)
    assert report.status is Boundedness.NOT_BOUNDED
    assert report.witness == ("StateOpera", "Vienna", "Austria")
    assert report.witness_role == "occursIn"


def test_k_bounded_empty_abox(event_cri_tbox_small_data):
    tbox, _ = event_cri_tbox_small_data
    assert check_k_bounded(tbox, ABox(), 1).status is Boundedness.BOUNDED


def test_k_bounded_rejects_nonpositive_k(event_cri_tbox_small_data):
    tbox, abox = event_cri_tbox_small_data
    with pytest.raises(ValueError):
        check_k_bounded(tbox, abox, 0)


def test_k_bounded_rejects_general_fragment():
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),
                 ConceptInc(Named("A"), Exists(Role("s")))),
                frozenset({"s"}))
    with pytest.raises(UnsupportedFragmentError):
        check_k_bounded(tbox, ABox(), 1)


def test_k_bounded_antitone(events_cri_doc):
    tbox = normalize(events_cri_doc.tbox)
    abox = events_cri_doc.abox
    statuses = [check_k_bounded(tbox, abox, k).status for k in range(1, 6)]
    seen_bounded = False
    for status in statuses:
        if status is Boundedness.BOUNDED:
            seen_bounded = True
        if seen_bounded:
            assert status is Boundedness.BOUNDED


def test_k_bounded_cyclic_guard_graph():
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),), frozenset({"s"}))
    abox = ABox(frozenset(), frozenset({("s", "a", "b"), ("s", "b", "a")}))
    # Walks may return to an endpoint but interior nodes stay distinct:
    # a -> b -> a has length 2.
    report = check_k_bounded(tbox, abox, 2)
    assert report.status is Boundedness.BOUNDED
    report = check_k_bounded(tbox, abox, 1)
    assert report.status is Boundedness.NOT_BOUNDED
    assert find_chain_bound(tbox, abox) == 2


def test_k_bounded_budget_overflow_reports_unknown():
    tbox = TBox((Cri(Role("r"), Role("s"), Role("r")),), frozenset({"s"}))
    edges = {("s", f"n{i}", f"n{j}") for i in range(8) for j in range(8) if i != j}
    abox = ABox(frozenset(), frozenset(edges))
    report = check_k_bounded(tbox, abox, 3, budget=50)
    assert report.status is Boundedness.UNKNOWN
    assert find_chain_bound(tbox, abox, budget=50) is None
