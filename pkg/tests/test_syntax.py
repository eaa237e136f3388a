import random

from hypothesis import given, settings
from hypothesis import strategies as st

from obdax import (ABox, ConceptInc, ConjunctiveQuery, Cri, Named, Role, TBox,
                   canonicalize, parse_kb, parse_query, serialize)
from obdax.syntax import answers_json, answers_text, query_text, serialize_kb, ucq_text
from obdax.model import AnswerMethod, AnswerSet

from conftest import load_query
from kbgen import random_abox, random_tbox


def test_parse_concept_inclusion():
    doc = parse_kb("Concert sub CulturEvent.")
    assert doc.ok
    assert doc.tbox.axioms == (ConceptInc(Named("Concert"), Named("CulturEvent")),)


def test_parse_chain_axiom():
    doc = parse_kb("occursIn o locatedIn sub occursIn.")
    assert doc.ok
    assert doc.tbox.axioms == (Cri(Role("occursIn"), Role("locatedIn"),
                                   Role("occursIn")),)


def test_parse_empty_file():
    doc = parse_kb("")
    assert doc.ok
    assert doc.tbox == TBox()
    assert doc.abox == ABox()
    assert doc.constraints == ()


def test_parse_query_with_equality():
    doc = parse_query("q(?x) :- Concert(?x), occursIn(?x,?y), ?y = Vienna.")
    assert doc.ok
    assert doc.query.arity == 1
    assert len(doc.query.atoms) == 3


def test_parse_boolean_query():
    doc = parse_query("q() :- A(?x).")
    assert doc.ok
    assert doc.query.arity == 0


def test_parse_query_empty_body_with_answer_var():
    doc = parse_query("q(?x) :- .")
    assert not doc.ok
    assert any("does not occur" in d.message for d in doc.diagnostics)


def test_parse_query_arity_mismatch():
    doc = parse_query("q(?x) :- Concert(?x, ?y).")
    assert not doc.ok


def test_parse_query_case_conventions():
    assert not parse_query("q(?x) :- concert(?x).").ok
    assert not parse_query("q(?x) :- OccursIn(?x,?y).").ok


def test_reserved_identifiers_rejected():
    assert not parse_kb("A(_anon1).").ok
    assert not parse_query("q(?x) :- A(?x), ?x = _anon0.").ok


def test_diagnostics_carry_spans():
    doc = parse_kb("Concert sub CulturEvent.\nbroken ( here.\nCity(Vienna).")
    assert len(doc.diagnostics) == 1
    assert doc.diagnostics[0].span.line == 2
    # recovery keeps the surrounding statements
    assert len(doc.tbox.axioms) == 1
    assert len(doc.abox.concept_assertions) == 1


def test_multiple_diagnostics_surface_at_once():
    doc = parse_kb("one bad statement.\nanother bad one.\n")
    assert len(doc.diagnostics) == 2


def test_diagnostics_deterministic():
    text = "b4d statement.\nCity(Vienna.\n"
    first = [str(d) for d in parse_kb(text).diagnostics]
    second = [str(d) for d in parse_kb(text).diagnostics]
    assert first == second


def test_duplicate_order_constraint_rejected():
    text = ("simple s.\nord s { A < B }.\nord s { B < C }.")
    doc = parse_kb(text)
    assert any("duplicate order constraint" in d.message for d in doc.diagnostics)


def test_cyclic_order_constraint_rejected():
    doc = parse_kb("simple s.\nord s { A < B, B < A }.")
    assert not doc.ok


def test_quoted_identifiers_round_trip():
    text = '"Cultur Event"("great hall").\nlocatedIn("great hall", Vienna).\n'
    doc = parse_kb(text)
    assert doc.ok
    assert ("Cultur Event", "great hall") in doc.abox.concept_assertions
    again = parse_kb(serialize_kb(doc.tbox, doc.abox, doc.constraints))
    assert again.ok
    assert again.abox == doc.abox


def test_round_trip_event_fixture(events_cri_doc):
    text = serialize_kb(events_cri_doc.tbox, events_cri_doc.abox,
                        events_cri_doc.constraints)
    again = parse_kb(text)
    assert again.ok
    assert again.tbox == events_cri_doc.tbox
    assert again.abox == events_cri_doc.abox
    assert again.constraints == events_cri_doc.constraints


def test_query_round_trip():
    q = load_query("q(?x,?y) :- occursIn(?x,?y), Concert(?x), ?y = Vienna.")
    again = parse_query(query_text(q))
    assert again.ok
    assert canonicalize(again.query) == canonicalize(q)


def test_answers_text_sorted():
    answers = AnswerSet(frozenset({("ex1",), ("ev1",), ("c1",)}), 1,
                        AnswerMethod.REWRITING, True)
    assert answers_text(answers) == "c1\nev1\nex1\n"


def test_answers_json_stable_fields():
    answers = AnswerSet(frozenset({("c1",)}), 1, AnswerMethod.K_REWRITING, True)
    assert answers_json(answers) == (
        '{"answers": [["c1"]], "exact": true, "method": "k-rewriting"}')


def test_ucq_serializes_one_query_per_line():
    queries = [load_query(f"q(?x) :- {c}(?x).")
               for c in ("CulturEvent", "Exhibition", "Concert")]
    text = ucq_text(queries)
    assert len(text.strip().splitlines()) == 3


def test_serialize_dispatch(events_doc):
    assert "Concert sub CulturEvent." in serialize(events_doc.tbox)
    assert "occursIn(c1, StateOpera)." in serialize(events_doc.abox)
    q = load_query("q(?x) :- Concert(?x).")
    assert serialize(q).startswith("q(?x) :- Concert(?x).")


def test_kb_round_trip_generated():
    rng = random.Random(99)
    for _ in range(30):
        tbox = random_tbox(rng, rng.choice(["non-recursive", "recursion-safe"]))
        abox = random_abox(rng, tbox)
        text = serialize_kb(tbox, abox)
        doc = parse_kb(text)
        assert doc.ok, doc.diagnostics
        assert doc.tbox == tbox
        assert doc.abox == abox


_names = st.sampled_from
_concepts = _names(["Alpha", "Beta", "Gamma"])
_roles = _names(["knows", "partOf"])
_vars = _names(["x", "y", "z"])
_inds = _names(["vienna", "Linz", "a1"])


@st.composite
def _query(draw):
    from obdax import ConceptAtom, EqAtom, Individual, RoleAtom, Variable

    def term():
        if draw(st.booleans()):
            return Variable(draw(_vars))
        return Individual(draw(_inds))

    atoms = []
    for _ in range(draw(st.integers(1, 4))):
        kind = draw(st.integers(0, 2))
        if kind == 0:
            atoms.append(ConceptAtom(draw(_concepts), term()))
        elif kind == 1:
            atoms.append(RoleAtom(draw(_roles), term(), term()))
        else:
            atoms.append(EqAtom(Variable(draw(_vars)), Individual(draw(_inds))))
    variables = sorted({v.name for a in atoms
                        for v in __import__("obdax").queries.atom_vars(a)})
    answer = tuple(v for v in variables if draw(st.booleans()))
    return ConjunctiveQuery(answer, frozenset(atoms))


@given(_query())
@settings(max_examples=120, deadline=None)
def test_query_round_trip_property(q):
    again = parse_query(query_text(q))
    assert again.ok, again.diagnostics
    assert canonicalize(again.query) == canonicalize(q)
