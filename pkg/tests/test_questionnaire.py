"""Questionnaire loading, gating, sessions, and replay."""

from __future__ import annotations

import json
import random

import pytest

from riskscope.questionnaire import (
    UNKNOWN_LABEL,
    IneligibleQuestionError,
    KindMismatchError,
    Purpose,
    QuestionKind,
    QuestionnaireValidationError,
    UnknownQuestionError,
    active_answers,
    active_bindings,
    completeness,
    load_questionnaires,
    new_session,
    next_questions,
    record_answer,
    record_answers,
    session_from_json,
    session_to_json,
)


@pytest.fixture()
def use_questionnaire(questionnaires):
    return questionnaires.questionnaire("use")


@pytest.fixture()
def onboarding(questionnaires):
    return questionnaires.questionnaire("model-onboarding")


@pytest.fixture()
def session(pack):
    return new_session("Some use", pack.content_hash)


class TestBundledStructure:
    def test_three_questionnaires_with_expected_questions(self, questionnaires):
        ids = {qn.id: [q.id for q in qn.questions] for qn in questionnaires.questionnaires}
        assert ids == {
            "use": ["A0", "A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8"],
            "model-onboarding": ["B1", "B2", "B3", "B4", "B5"],
            "use-and-model": ["C1"],
        }

    def test_stage_and_role_bindings(self, questionnaires):
        use = questionnaires.questionnaire("use")
        assert (use.stage, use.role) == ("use-definition", "product-owner")
        onboarding = questionnaires.questionnaire("model-onboarding")
        assert (onboarding.stage, onboarding.role) == ("model-procurement", "data-scientist")
        final = questionnaires.questionnaire("use-and-model")
        assert (final.stage, final.role) == ("implementation", "data-scientist")

    def test_kinds_and_purposes(self, questionnaires):
        kinds = {q.id: q.kind for qn in questionnaires.questionnaires for q in qn.questions}
        assert kinds["A0"] is QuestionKind.BOOLEAN
        assert all(kinds[qid] is QuestionKind.FREE_TEXT for qid in ["A1", "A2", "A3", "A4", "A5", "B4"])
        assert all(kinds[qid] is QuestionKind.BOOLEAN for qid in ["A6", "A7", "A8"])
        assert all(kinds[qid] is QuestionKind.TRI_STATE for qid in ["B1", "B2", "B3", "B5", "C1"])
        purposes = {q.id: q.purpose for qn in questionnaires.questionnaires for q in qn.questions}
        assert all(purposes[qid] is Purpose.CONTEXT for qid in ["A1", "A2", "A3", "A4", "A5", "B4"])
        assert all(
            purposes[qid] is Purpose.EVIDENCE for qid in ["A0", "A6", "A7", "A8", "B1", "B2", "B3", "B5", "C1"]
        )

    def test_gates(self, questionnaires):
        gates = {q.id: q.gate_text for qn in questionnaires.questionnaires for q in qn.questions}
        assert gates["A8"] == "A7 == yes"
        assert gates["B2"] == "B1 == yes"
        assert gates["B3"] == "B2 == yes"
        assert gates["B4"] == "B3 == yes"
        assert gates["A7"] is None


class TestLoadValidation:
    def _wrap(self, questions, pack):
        document = {
            "version": "0.0.1",
            "questionnaires": [
                {
                    "id": "t",
                    "title": "T",
                    "stage": pack.stages[0].id,
                    "role": pack.roles[0].id,
                    "questions": questions,
                }
            ],
        }
        return json.dumps(document)

    def test_forward_gate_rejected(self, pack):
        questions = [
            {"id": "Q1", "prompt": "p", "kind": "boolean", "purpose": "evidence", "gate": "Q2 == yes"},
            {"id": "Q2", "prompt": "p", "kind": "boolean", "purpose": "evidence"},
        ]
        with pytest.raises(QuestionnaireValidationError) as info:
            load_questionnaires(self._wrap(questions, pack), pack)
        assert "Q2" in str(info.value)

    def test_self_gate_rejected(self, pack):
        questions = [{"id": "Q1", "prompt": "p", "kind": "boolean", "purpose": "evidence", "gate": "Q1 == yes"}]
        with pytest.raises(QuestionnaireValidationError):
            load_questionnaires(self._wrap(questions, pack), pack)

    def test_gate_on_free_text_rejected(self, pack):
        questions = [
            {"id": "Q1", "prompt": "p", "kind": "free-text", "purpose": "context"},
            {"id": "Q2", "prompt": "p", "kind": "boolean", "purpose": "evidence", "gate": "Q1 == yes"},
        ]
        with pytest.raises(QuestionnaireValidationError):
            load_questionnaires(self._wrap(questions, pack), pack)

    def test_context_question_must_be_open_form(self, pack):
        questions = [{"id": "Q1", "prompt": "p", "kind": "boolean", "purpose": "context"}]
        with pytest.raises(QuestionnaireValidationError):
            load_questionnaires(self._wrap(questions, pack), pack)

    def test_unknown_stage_rejected(self, pack):
        document = {
            "version": "0.0.1",
            "questionnaires": [{"id": "t", "stage": "nope", "role": pack.roles[0].id, "questions": []}],
        }
        with pytest.raises(QuestionnaireValidationError):
            load_questionnaires(json.dumps(document), pack)

    def test_reserved_keyword_id_rejected(self, pack):
        questions = [{"id": "unknown", "prompt": "p", "kind": "boolean", "purpose": "evidence"}]
        with pytest.raises(QuestionnaireValidationError):
            load_questionnaires(self._wrap(questions, pack), pack)

    def test_duplicate_ids_across_questionnaires_rejected(self, pack):
        document = {
            "version": "0.0.1",
            "questionnaires": [
                {
                    "id": "t1",
                    "stage": pack.stages[0].id,
                    "role": pack.roles[0].id,
                    "questions": [{"id": "Q1", "prompt": "p", "kind": "boolean", "purpose": "evidence"}],
                },
                {
                    "id": "t2",
                    "stage": pack.stages[0].id,
                    "role": pack.roles[0].id,
                    "questions": [{"id": "Q1", "prompt": "p", "kind": "boolean", "purpose": "evidence"}],
                },
            ],
        }
        with pytest.raises(QuestionnaireValidationError):
            load_questionnaires(json.dumps(document), pack)


class TestNextQuestions:
    def test_empty_session_withholds_a8(self, use_questionnaire, session):
        eligible = [q.id for q in next_questions(use_questionnaire, session)]
        assert eligible == ["A0", "A1", "A2", "A3", "A4", "A5", "A6", "A7"]

    def test_b1_no_completes_onboarding_evidence_chain(self, onboarding, questionnaires, session):
        session = record_answer(session, questionnaires, "B1", "no", "data-scientist")
        eligible = [q.id for q in next_questions(onboarding, session)]
        assert eligible == ["B5"]

    def test_all_answered_yields_empty(self, questionnaires, session):
        final = questionnaires.questionnaire("use-and-model")
        session = record_answer(session, questionnaires, "C1", "yes", "data-scientist")
        assert next_questions(final, session) == []

    def test_gate_chain_opens_one_step_at_a_time(self, onboarding, questionnaires, session):
        session = record_answer(session, questionnaires, "B1", "yes", "data-scientist")
        assert [q.id for q in next_questions(onboarding, session)] == ["B2", "B5"]
        session = record_answer(session, questionnaires, "B2", "yes", "data-scientist")
        assert [q.id for q in next_questions(onboarding, session)] == ["B3", "B5"]


class TestRecordAnswer:
    def test_a7_then_a8(self, questionnaires, session):
        session = record_answer(session, questionnaires, "A7", "yes", "product-owner")
        session = record_answer(session, questionnaires, "A8", "yes", "product-owner")
        active = active_answers(session, questionnaires)
        assert active["A7"].value == "yes"
        assert active["A8"].value == "yes"

    def test_reanswer_invalidates_dependents_but_keeps_history(self, questionnaires, session):
        session = record_answers(
            session,
            questionnaires,
            [("B1", "yes", "ds"), ("B2", "yes", "ds"), ("B3", "no", "ds")],
        )
        session = record_answer(session, questionnaires, "B1", "no", "ds")
        bindings = active_bindings(session, questionnaires)
        assert dict(bindings.values) == {"B1": "no"}
        assert {e.question_id for e in session.history} == {"B1", "B2", "B3"}
        assert session.recorded_answers()["B2"].value == "yes"  # retained, inactive

    def test_dependents_reactivate_when_gate_is_restored(self, questionnaires, session):
        session = record_answers(
            session, questionnaires, [("B1", "yes", "ds"), ("B2", "no", "ds"), ("B1", "no", "ds")]
        )
        assert dict(active_bindings(session, questionnaires).values) == {"B1": "no"}
        session = record_answer(session, questionnaires, "B1", "yes", "ds")
        assert dict(active_bindings(session, questionnaires).values) == {"B1": "yes", "B2": "no"}

    def test_free_text_stored_verbatim(self, questionnaires, session):
        text = "  Visitor-center Q&A agent. \n"
        session = record_answer(session, questionnaires, "A1", text, "product-owner")
        assert active_answers(session, questionnaires)["A1"].value == text

    def test_unknown_question(self, questionnaires, session):
        with pytest.raises(UnknownQuestionError):
            record_answer(session, questionnaires, "Z9", "yes", "r")

    def test_kind_mismatch(self, questionnaires, session):
        with pytest.raises(KindMismatchError):
            record_answer(session, questionnaires, "A7", "maybe", "r")

    def test_ineligible_gated_question(self, questionnaires, session):
        with pytest.raises(IneligibleQuestionError):
            record_answer(session, questionnaires, "A8", "yes", "r")

    def test_inactive_question_is_ineligible(self, questionnaires, session):
        session = record_answers(session, questionnaires, [("B1", "yes", "ds"), ("B2", "yes", "ds")])
        session = record_answer(session, questionnaires, "B1", "no", "ds")
        with pytest.raises(IneligibleQuestionError):
            record_answer(session, questionnaires, "B2", "no", "ds")

    def test_tri_state_accepts_display_label(self, questionnaires, session):
        session = record_answer(session, questionnaires, "B1", UNKNOWN_LABEL, "ds")
        assert active_answers(session, questionnaires)["B1"].value == "unknown"

    def test_boolean_canonicalizes_case(self, questionnaires, session):
        session = record_answer(session, questionnaires, "A7", " Yes ", "po")
        assert active_answers(session, questionnaires)["A7"].value == "yes"

    def test_free_text_size_limit(self, questionnaires, session):
        with pytest.raises(KindMismatchError):
            record_answer(session, questionnaires, "A1", "x" * (64 * 1024 + 1), "po")


class TestCompleteness:
    def test_empty_use_session_partition(self, use_questionnaire, session):
        report = completeness(use_questionnaire, session)
        assert report.answered == ()
        assert report.eligible_unanswered == ("A0", "A1", "A2", "A3", "A4", "A5", "A6", "A7")
        assert report.withheld == ("A8",)

    def test_fully_answered_final_questionnaire(self, questionnaires, session):
        final = questionnaires.questionnaire("use-and-model")
        session = record_answer(session, questionnaires, "C1", "no", "ds")
        report = completeness(final, session)
        assert report.answered == ("C1",)
        assert report.eligible_unanswered == ()
        assert report.withheld == ()

    def test_unknown_gate_withholds(self, onboarding, questionnaires, session):
        session = record_answer(session, questionnaires, "B1", "unknown", "ds")
        report = completeness(onboarding, session)
        assert report.answered == ("B1",)
        assert report.eligible_unanswered == ("B5",)
        assert report.withheld == ("B2", "B3", "B4")

    def test_partition_property_random_sequences(self, questionnaires, pack):
        rng = random.Random(37)
        all_questions = {qn.id: [q.id for q in qn.questions] for qn in questionnaires.questionnaires}
        for _ in range(50):
            session = new_session("rand", pack.content_hash)
            for _ in range(rng.randrange(0, 12)):
                questionnaire = questionnaires.questionnaires[rng.randrange(3)]
                eligible = next_questions(questionnaire, session)
                if not eligible:
                    continue
                question = rng.choice(eligible)
                value = _random_value(rng, question)
                session = record_answer(session, questionnaires, question.id, value, "r")
                for qn in questionnaires.questionnaires:
                    report = completeness(qn, session)
                    combined = list(report.answered) + list(report.eligible_unanswered) + list(report.withheld)
                    assert sorted(combined) == sorted(all_questions[qn.id])
                    assert len(set(combined)) == len(combined)


def _random_value(rng, question):
    if question.kind is QuestionKind.FREE_TEXT:
        return f"text-{rng.randrange(1000)}"
    if question.kind is QuestionKind.BOOLEAN:
        return rng.choice(["yes", "no"])
    if question.kind is QuestionKind.TRI_STATE:
        return rng.choice(["yes", "no", "unknown"])
    return rng.choice(list(question.options))


class TestPersistence:
    def test_json_round_trip(self, questionnaires, session):
        session = record_answers(
            session, questionnaires, [("A7", "yes", "po"), ("A8", "no", "po"), ("B1", "unknown", "ds")]
        )
        again = session_from_json(session_to_json(session))
        assert again == session

    def test_replay_reproduces_active_bindings(self, questionnaires, session):
        session = record_answers(
            session,
            questionnaires,
            [("B1", "yes", "ds"), ("B2", "yes", "ds"), ("B3", "no", "ds"), ("B1", "no", "ds")],
        )
        replayed = session_from_json(session_to_json(session))
        assert active_bindings(replayed, questionnaires) == active_bindings(session, questionnaires)

    def test_timestamps_are_rfc3339_utc(self, questionnaires, session):
        session = record_answer(session, questionnaires, "A7", "yes", "po")
        stamp = session.history[0].timestamp
        assert stamp.endswith("Z")
        assert "T" in stamp
