import pathlib

import pytest
from fastapi.testclient import TestClient

from obdax.service import create_app

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture()
def client():
    return TestClient(create_app())


@pytest.fixture()
def kb_id(client):
    text = (FIXTURES / "events_cri.dlhr").read_text()
    response = client.post("/api/kb", json={"kb_text": text})
    assert response.status_code == 200, response.text
    return response.json()["kb_id"]


Q2 = "q(?x) :- Concert(?x), occursIn(?x,?y), ?y = Vienna."


def test_load_kb_summary(client, kb_id):
    summary = client.get(f"/api/kb/{kb_id}/summary").json()
    assert summary["class"] == "recursion-safe"
    assert summary["consistent"] is True
    assert summary["admissibility"] == {"covers": True, "admissible": True}
    assert summary["ell"] == 3


def test_summary_unknown_kb_is_404(client):
    assert client.get("/api/kb/nowhere/summary").status_code == 404


def test_answers_endpoint(client, kb_id):
    response = client.post(f"/api/kb/{kb_id}/answers", json={"query": Q2})
    assert response.status_code == 200
    body = response.json()
    assert body["answers"] == [["c1"]]
    assert body["exact"] is True
    assert body["method"] == "k-rewriting"
    assert body["rewriting_size"] > 0


def test_answers_with_explicit_k(client, kb_id):
    response = client.post(f"/api/kb/{kb_id}/answers",
                           json={"query": Q2, "k": 2})
    assert response.status_code == 200
    assert response.json()["answers"] == [["c1"]]


def test_moves_endpoint_lists_subclass_step(client, kb_id):
    query = "q(?x) :- Event(?x), occursIn(?x,?y), City(?y)."
    response = client.post(f"/api/kb/{kb_id}/moves",
                           json={"query": query, "direction": "restrain",
                                 "data_driven": False})
    assert response.status_code == 200
    moves = response.json()["moves"]
    s1 = [m for m in moves if m["rule"] == "S1"
          and "CulturEvent sub Event" in m["description"]]
    assert s1
    assert "CulturEvent(?x)" in s1[0]["result_query"]


def test_apply_round_trip(client, kb_id):
    query = "q(?x) :- Event(?x), occursIn(?x,?y), City(?y)."
    moves = client.post(f"/api/kb/{kb_id}/moves",
                        json={"query": query, "direction": "restrain",
                              "data_driven": False}).json()["moves"]
    move = next(m for m in moves if m["rule"] == "S1"
                and "CulturEvent sub Event" in m["description"])
    response = client.post(f"/api/kb/{kb_id}/apply",
                           json={"query": query, "move_id": move["id"]})
    assert response.status_code == 200
    assert "CulturEvent(?x)" in response.json()["query"]


def test_apply_stale_version_is_410(client, kb_id):
    response = client.post(f"/api/kb/{kb_id}/apply",
                           json={"query": Q2, "move_id": "v999:deadbeef0000"})
    assert response.status_code == 410


def test_navigate_roll_up(client, kb_id):
    response = client.post(f"/api/kb/{kb_id}/navigate",
                           json={"query": Q2, "var": "?y", "direction": "up"})
    assert response.status_code == 200
    chains = response.json()["chains"]
    assert any("Austria" in chain["result_query"] for chain in chains)
    chain = next(c for c in chains if "Austria" in c["result_query"])
    assert [m["rule"] for m in chain["moves"]] == ["GD2", "G6"]
    assert chain["source_categories"] == ["City"]
    assert chain["target_categories"] == ["Country"]


def test_bad_query_is_400(client, kb_id):
    response = client.post(f"/api/kb/{kb_id}/answers",
                           json={"query": "q(?x :-"})
    assert response.status_code == 400
    assert "diagnostics" in response.json()["detail"]


def test_bad_kb_is_400(client):
    response = client.post("/api/kb", json={"kb_text": "complete(garbage"})
    assert response.status_code == 400


def test_inconsistent_kb_answers_is_409(client):
    text = "disjoint Concert Exhibition.\nConcert(c).\nExhibition(c).\n"
    kb = client.post("/api/kb", json={"kb_text": text}).json()["kb_id"]
    response = client.post(f"/api/kb/{kb}/answers",
                           json={"query": "q(?x) :- Concert(?x)."})
    assert response.status_code == 409


def test_unsupported_fragment_is_422(client):
    text = "simple s.\nr o s sub r.\nA sub exists s.\nA(a).\nr(a,a).\n"
    kb = client.post("/api/kb", json={"kb_text": text}).json()["kb_id"]
    response = client.post(f"/api/kb/{kb}/answers",
                           json={"query": "q(?x) :- A(?x)."})
    assert response.status_code == 422


def test_answers_order_independent(client, kb_id):
    first = client.post(f"/api/kb/{kb_id}/answers", json={"query": Q2}).json()
    other = client.post(f"/api/kb/{kb_id}/answers",
                        json={"query": "q(?x) :- Venue(?x)."}).json()
    again = client.post(f"/api/kb/{kb_id}/answers", json={"query": Q2}).json()
    assert first == again
    assert other["answers"] == [["GarnierOpera"], ["StateOpera"], ["VolksTheater"]]
