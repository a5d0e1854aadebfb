from __future__ import annotations

import pytest

from riskscope import packs
from riskscope.questionnaire import new_session, record_answer


@pytest.fixture(scope="session")
def bundle():
    return packs.load_bundled()


@pytest.fixture(scope="session")
def pack(bundle):
    return bundle.pack


@pytest.fixture(scope="session")
def questionnaires(bundle):
    return bundle.questionnaires


@pytest.fixture(scope="session")
def rules(bundle):
    return bundle.rules


TOURIST_ANSWERS = [
    ("A0", "yes"),
    ("A1", "Answer common tourist questions at the visitor center of a local attraction."),
    ("A2", "Tourists visiting the attraction and the visitor-center staff assisting them."),
    ("A3", "Visitors acting on the agent's directions and staff fielding follow-up complaints."),
    ("A4", "The agent runs standalone on a kiosk; answers are shown directly to visitors."),
    ("A5", "Free-form questions typed or dictated by visitors, plus an internal FAQ document."),
    ("A6", "yes"),
    ("A7", "yes"),
    ("A8", "yes"),
    ("B1", "Not found in the documentation."),
    ("C1", "yes"),
]


def build_tourist_session(bundle, session_id="tourist-center", timestamp=None):
    session = new_session("Visitor-center Q&A agent", bundle.pack.content_hash, session_id)
    for qid, value in TOURIST_ANSWERS:
        role = bundle.questionnaires.find(qid)[0].role
        session = record_answer(session, bundle.questionnaires, qid, value, role, timestamp=timestamp)
    return session


@pytest.fixture()
def tourist_session(bundle):
    return build_tourist_session(bundle)
