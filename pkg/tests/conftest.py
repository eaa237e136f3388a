import pathlib

import pytest

from obdax import KBContext, syntax

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def load_kb(name: str):
    doc = syntax.parse_kb((FIXTURES / name).read_text())
    assert doc.ok, doc.diagnostics
    return doc


def load_query(text: str):
    doc = syntax.parse_query(text)
    assert doc.ok, doc.diagnostics
    return doc.query


@pytest.fixture(scope="session")
def events_doc():
    return load_kb("events.dlhr")


@pytest.fixture(scope="session")
def events_cri_doc():
    return load_kb("events_cri.dlhr")


@pytest.fixture(scope="session")
def events_ctx(events_doc):
    return KBContext(events_doc.tbox, events_doc.abox, events_doc.constraints)


@pytest.fixture(scope="session")
def events_cri_ctx(events_cri_doc):
    return KBContext(events_cri_doc.tbox, events_cri_doc.abox,
                     events_cri_doc.constraints)
