"""Stage- and role-bound questionnaires with gated questions and answer sessions.

Questions carry guidance text for answerers, a kind that constrains valid
answers, and an optional gate: a condition over earlier questions in the
same questionnaire that decides whether the question is asked at all.
Sessions are event-sourced; the answer map and the set of active answers
are derived by replaying the history, so re-answering a question upstream
of a gate deactivates dependents without erasing the audit trail.
"""

from __future__ import annotations

import json
import os
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import IO, Any, Iterable, Mapping, Union

from riskscope import condexpr
from riskscope.condexpr import UNKNOWN_MARKER, AnswerBindings, ConditionExpr, TruthValue
from riskscope.errors import RiskscopeError
from riskscope.taxonomy import TaxonomyPack

#: Display label for the unknown marker on tri-state questions.
UNKNOWN_LABEL = "Not found in the documentation."

FREE_TEXT_LIMIT = 64 * 1024  # bytes of UTF-8


class QuestionnaireValidationError(RiskscopeError):
    code = "validation-error"


class QuestionnaireParseError(RiskscopeError):
    code = "parse-error"


class UnknownQuestionError(RiskscopeError):
    code = "unknown-question"


class KindMismatchError(RiskscopeError):
    code = "kind-mismatch"


class IneligibleQuestionError(RiskscopeError):
    code = "ineligible-question"


class QuestionKind(str, Enum):
    FREE_TEXT = "free-text"
    BOOLEAN = "boolean"
    TRI_STATE = "tri-state"
    SINGLE_CHOICE = "single-choice"


class Purpose(str, Enum):
    CONTEXT = "context"  # open-ended, feeds the reviewer dossier only
    EVIDENCE = "evidence"  # closed-form, may feed risk rules


@dataclass(frozen=True)
class Question:
    id: str
    prompt: str
    kind: QuestionKind
    purpose: Purpose
    guidance: str | None = None
    options: tuple[str, ...] = ()
    gate: ConditionExpr | None = None
    gate_text: str | None = None
    notes: str | None = None


@dataclass(frozen=True)
class Questionnaire:
    id: str
    title: str
    stage: str
    role: str
    questions: tuple[Question, ...]

    def question(self, question_id: str) -> Question | None:
        for question in self.questions:
            if question.id == question_id:
                return question
        return None


@dataclass(frozen=True)
class QuestionnaireSet:
    """All questionnaires of a pack; question ids are unique across the set."""

    version: str
    questionnaires: tuple[Questionnaire, ...]

    def find(self, question_id: str) -> tuple[Questionnaire, Question]:
        for questionnaire in self.questionnaires:
            question = questionnaire.question(question_id)
            if question is not None:
                return questionnaire, question
        raise UnknownQuestionError(f"no question with id {question_id!r}")

    def question(self, question_id: str) -> Question:
        return self.find(question_id)[1]

    def questionnaire(self, questionnaire_id: str) -> Questionnaire | None:
        for questionnaire in self.questionnaires:
            if questionnaire.id == questionnaire_id:
                return questionnaire
        return None

    def for_stage(self, stage_id: str) -> list[Questionnaire]:
        return [q for q in self.questionnaires if q.stage == stage_id]

    def evidence_question_ids(self) -> frozenset[str]:
        return frozenset(
            q.id for qn in self.questionnaires for q in qn.questions if q.purpose is Purpose.EVIDENCE
        )


# --- Loading -----------------------------------------------------------------


def _read_source(source: Any) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    if isinstance(source, os.PathLike):
        with open(source, "r", encoding="utf-8") as handle:
            return handle.read()
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    raise TypeError(f"cannot read questionnaire source of type {type(source).__name__}")


def load_questionnaires(source: str | bytes | os.PathLike | IO, pack: TaxonomyPack) -> QuestionnaireSet:
    """Parse and cross-validate a questionnaire pack against the taxonomy.

    Enforces: stage/role ids resolve; question ids are unique across all
    questionnaires, match the condition-language identifier syntax, and do
    not collide with its keywords; gates reference only earlier, closed-form
    questions in the same questionnaire (so gating is acyclic by
    construction); context questions are free-text or single-choice.
    """
    text = _read_source(source)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise QuestionnaireParseError(
            f"malformed questionnaire JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})"
        ) from exc

    if not isinstance(raw, dict) or "questionnaires" not in raw:
        raise QuestionnaireValidationError("questionnaire pack: expected object with 'questionnaires'")
    version = raw.get("version", "0.0.0")

    questionnaires: list[Questionnaire] = []
    seen_question_ids: set[str] = set()
    seen_questionnaire_ids: set[str] = set()
    for qn_raw in raw["questionnaires"]:
        if not isinstance(qn_raw, dict):
            raise QuestionnaireValidationError("questionnaire entry: expected an object")
        qn_id = qn_raw.get("id")
        if not isinstance(qn_id, str) or not qn_id:
            raise QuestionnaireValidationError("questionnaire entry: missing id")
        if qn_id in seen_questionnaire_ids:
            raise QuestionnaireValidationError(f"duplicate questionnaire id {qn_id!r}")
        seen_questionnaire_ids.add(qn_id)

        stage = qn_raw.get("stage")
        if not any(s.id == stage for s in pack.stages):
            raise QuestionnaireValidationError(f"questionnaire {qn_id!r}: unknown stage {stage!r}")
        role = qn_raw.get("role")
        if pack.role(role) is None:
            raise QuestionnaireValidationError(f"questionnaire {qn_id!r}: unknown role {role!r}")
        title = qn_raw.get("title", qn_id)

        questions: list[Question] = []
        earlier: dict[str, Question] = {}
        for q_raw in qn_raw.get("questions", []):
            question = _load_question(q_raw, qn_id, earlier)
            if question.id in seen_question_ids:
                raise QuestionnaireValidationError(f"duplicate question id {question.id!r} across questionnaires")
            seen_question_ids.add(question.id)
            earlier[question.id] = question
            questions.append(question)

        questionnaires.append(
            Questionnaire(id=qn_id, title=title, stage=stage, role=role, questions=tuple(questions))
        )

    return QuestionnaireSet(version=version, questionnaires=tuple(questionnaires))


def _load_question(q_raw: Any, qn_id: str, earlier: Mapping[str, Question]) -> Question:
    if not isinstance(q_raw, dict):
        raise QuestionnaireValidationError(f"questionnaire {qn_id!r}: question entry must be an object")
    qid = q_raw.get("id")
    if not isinstance(qid, str) or not condexpr.QUESTION_ID_RE.fullmatch(qid):
        raise QuestionnaireValidationError(f"questionnaire {qn_id!r}: invalid question id {qid!r}")
    if qid in condexpr.KEYWORDS:
        raise QuestionnaireValidationError(f"question id {qid!r} is a reserved condition-language keyword")

    prompt = q_raw.get("prompt")
    if not isinstance(prompt, str) or not prompt:
        raise QuestionnaireValidationError(f"question {qid!r}: missing prompt")

    try:
        kind = QuestionKind(q_raw.get("kind"))
    except ValueError:
        raise QuestionnaireValidationError(f"question {qid!r}: unknown kind {q_raw.get('kind')!r}") from None
    try:
        purpose = Purpose(q_raw.get("purpose"))
    except ValueError:
        raise QuestionnaireValidationError(f"question {qid!r}: unknown purpose {q_raw.get('purpose')!r}") from None

    if purpose is Purpose.CONTEXT and kind not in (QuestionKind.FREE_TEXT, QuestionKind.SINGLE_CHOICE):
        raise QuestionnaireValidationError(f"question {qid!r}: context questions must be free-text or single-choice")

    options = tuple(q_raw.get("options", ()))
    if kind is QuestionKind.SINGLE_CHOICE:
        if not options or len(set(options)) != len(options):
            raise QuestionnaireValidationError(f"question {qid!r}: single-choice requires distinct options")
        if UNKNOWN_MARKER in options:
            raise QuestionnaireValidationError(f"question {qid!r}: {UNKNOWN_MARKER!r} is reserved and cannot be an option")
    elif options:
        raise QuestionnaireValidationError(f"question {qid!r}: options are only valid for single-choice")

    gate_text = q_raw.get("gate")
    gate = None
    if gate_text is not None:
        try:
            gate = condexpr.parse(gate_text)
        except condexpr.ConditionParseError as exc:
            raise QuestionnaireValidationError(f"question {qid!r}: bad gate: {exc}") from exc
        for ref in condexpr.referenced_questions(gate):
            if ref not in earlier:
                raise QuestionnaireValidationError(
                    f"question {qid!r}: gate references {ref!r}, which is not an earlier question"
                )
            if earlier[ref].kind is QuestionKind.FREE_TEXT:
                raise QuestionnaireValidationError(
                    f"question {qid!r}: gate references free-text question {ref!r}"
                )

    guidance = q_raw.get("guidance")
    if guidance is not None and not isinstance(guidance, str):
        raise QuestionnaireValidationError(f"question {qid!r}: guidance must be a string")
    notes = q_raw.get("notes")

    return Question(
        id=qid,
        prompt=prompt,
        kind=kind,
        purpose=purpose,
        guidance=guidance,
        options=options,
        gate=gate,
        gate_text=gate_text,
        notes=notes,
    )


# --- Sessions ----------------------------------------------------------------


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds").replace("+00:00", "Z")


@dataclass(frozen=True)
class AnswerEvent:
    timestamp: str
    question_id: str
    value: str
    actor: str


@dataclass(frozen=True)
class AttachEvent:
    """Records a profile attachment, embedding the merged answers.

    Embedding keeps session files self-contained: replay does not need the
    profile store the answers originally came from.
    """

    timestamp: str
    entity_kind: str
    entity_id: str
    profile_hash: str
    actor: str
    answers: Mapping[str, str] = field(default_factory=dict)


SessionEvent = Union[AnswerEvent, AttachEvent]


@dataclass(frozen=True)
class AnswerRecord:
    value: str
    actor: str
    provenance: str  # "answered" | "reused"
    timestamp: str


@dataclass(frozen=True)
class ProfileRef:
    entity_kind: str
    entity_id: str
    profile_hash: str


@dataclass(frozen=True)
class AssessmentSession:
    """A use's answer state across all stages; history is the source of truth."""

    session_id: str
    use_title: str
    pack_hash: str
    history: tuple[SessionEvent, ...] = ()

    def recorded_answers(self) -> dict[str, AnswerRecord]:
        """Latest recorded value per question, regardless of gate state."""
        records: dict[str, AnswerRecord] = {}
        for event in self.history:
            if isinstance(event, AnswerEvent):
                records[event.question_id] = AnswerRecord(
                    value=event.value, actor=event.actor, provenance="answered", timestamp=event.timestamp
                )
            else:
                for qid, value in event.answers.items():
                    records[qid] = AnswerRecord(
                        value=value, actor=event.actor, provenance="reused", timestamp=event.timestamp
                    )
        return records

    def attached_profiles(self) -> tuple[ProfileRef, ...]:
        return tuple(
            ProfileRef(e.entity_kind, e.entity_id, e.profile_hash)
            for e in self.history
            if isinstance(e, AttachEvent)
        )


def new_session(use_title: str, pack_hash: str, session_id: str | None = None) -> AssessmentSession:
    return AssessmentSession(
        session_id=session_id or uuid.uuid4().hex,
        use_title=use_title,
        pack_hash=pack_hash,
    )


def _local_active(questionnaire: Questionnaire, records: Mapping[str, AnswerRecord]) -> dict[str, AnswerRecord]:
    """Gate-filtered answers of one questionnaire, in declaration order.

    Gates only reference earlier questions of the same questionnaire, so one
    pass suffices. An answer whose gate currently evaluates to no or unknown
    is inactive: kept in history but excluded from evaluation.
    """
    active: dict[str, AnswerRecord] = {}
    for question in questionnaire.questions:
        record = records.get(question.id)
        if record is None:
            continue
        if question.gate is not None:
            gate_value = condexpr.evaluate(question.gate, AnswerBindings({q: r.value for q, r in active.items()}))
            if gate_value is not TruthValue.YES:
                continue
        active[question.id] = record
    return active


def active_answers(session: AssessmentSession, questionnaires: QuestionnaireSet) -> dict[str, AnswerRecord]:
    """All active answers across questionnaires, declaration order preserved."""
    records = session.recorded_answers()
    active: dict[str, AnswerRecord] = {}
    for questionnaire in questionnaires.questionnaires:
        active.update(_local_active(questionnaire, records))
    return active


def active_bindings(session: AssessmentSession, questionnaires: QuestionnaireSet) -> AnswerBindings:
    active = active_answers(session, questionnaires)
    kinds = {qid: questionnaires.question(qid).kind.value for qid in active}
    return AnswerBindings(values={qid: record.value for qid, record in active.items()}, kinds=kinds)


def next_questions(questionnaire: Questionnaire, session: AssessmentSession) -> list[Question]:
    """Unanswered questions currently worth asking, in declaration order.

    Ungated questions are always eligible; a gated question is eligible only
    when its gate evaluates to yes, and is withheld while the gate is no or
    still unknown.
    """
    records = session.recorded_answers()
    active = _local_active(questionnaire, records)
    eligible: list[Question] = []
    for question in questionnaire.questions:
        if question.id in active:
            continue
        if question.gate is not None:
            gate_value = condexpr.evaluate(question.gate, AnswerBindings({q: r.value for q, r in active.items()}))
            if gate_value is not TruthValue.YES:
                continue
        eligible.append(question)
    return eligible


@dataclass(frozen=True)
class CompletenessReport:
    answered: tuple[str, ...]
    eligible_unanswered: tuple[str, ...]
    withheld: tuple[str, ...]


def completeness(questionnaire: Questionnaire, session: AssessmentSession) -> CompletenessReport:
    """Partition the questionnaire's questions into answered / eligible / withheld."""
    active = _local_active(questionnaire, session.recorded_answers())
    eligible = {q.id for q in next_questions(questionnaire, session)}
    answered: list[str] = []
    eligible_unanswered: list[str] = []
    withheld: list[str] = []
    for question in questionnaire.questions:
        if question.id in active:
            answered.append(question.id)
        elif question.id in eligible:
            eligible_unanswered.append(question.id)
        else:
            withheld.append(question.id)
    return CompletenessReport(tuple(answered), tuple(eligible_unanswered), tuple(withheld))


def canonical_value(question: Question, value: str) -> str:
    """Normalize and validate an answer against the question's kind.

    Closed kinds are matched case-insensitively; the tri-state unknown
    marker also accepts its display label. Free text is stored verbatim.
    """
    if question.kind is QuestionKind.FREE_TEXT:
        if len(value.encode("utf-8")) > FREE_TEXT_LIMIT:
            raise KindMismatchError(f"question {question.id!r}: free-text answer exceeds {FREE_TEXT_LIMIT} bytes")
        return value
    folded = value.strip().casefold()
    if question.kind is QuestionKind.BOOLEAN:
        if folded in ("yes", "no"):
            return folded
        raise KindMismatchError(f"question {question.id!r} is boolean; expected yes or no, got {value!r}")
    if question.kind is QuestionKind.TRI_STATE:
        if folded in ("yes", "no", UNKNOWN_MARKER):
            return folded
        if folded == UNKNOWN_LABEL.casefold():
            return UNKNOWN_MARKER
        raise KindMismatchError(
            f"question {question.id!r} is tri-state; expected yes, no, or {UNKNOWN_LABEL!r}, got {value!r}"
        )
    for option in question.options:
        if folded == option.casefold():
            return option
    raise KindMismatchError(
        f"question {question.id!r}: {value!r} is not one of the declared options {list(question.options)}"
    )


def record_answer(
    session: AssessmentSession,
    questionnaires: QuestionnaireSet,
    question_id: str,
    value: str,
    actor: str,
    *,
    timestamp: str | None = None,
) -> AssessmentSession:
    """Record (or re-record) an answer, returning the updated session.

    The question must either be eligible right now or already actively
    answered (re-answering is allowed and may deactivate dependents, which
    stay in history). Raises UnknownQuestionError, KindMismatchError, or
    IneligibleQuestionError.
    """
    questionnaire, question = questionnaires.find(question_id)
    canonical = canonical_value(question, value)

    active = _local_active(questionnaire, session.recorded_answers())
    if question_id not in active and question_id not in {q.id for q in next_questions(questionnaire, session)}:
        raise IneligibleQuestionError(
            f"question {question_id!r} is not eligible: its gate ({question.gate_text}) is not satisfied"
        )

    event = AnswerEvent(
        timestamp=timestamp or utc_now(),
        question_id=question_id,
        value=canonical,
        actor=actor,
    )
    return replace(session, history=session.history + (event,))


def append_attach_event(
    session: AssessmentSession,
    *,
    entity_kind: str,
    entity_id: str,
    profile_hash: str,
    actor: str,
    answers: Mapping[str, str],
    timestamp: str | None = None,
) -> AssessmentSession:
    """Low-level history append used by the profiles module."""
    event = AttachEvent(
        timestamp=timestamp or utc_now(),
        entity_kind=entity_kind,
        entity_id=entity_id,
        profile_hash=profile_hash,
        actor=actor,
        answers=dict(answers),
    )
    return replace(session, history=session.history + (event,))


def replay(session: AssessmentSession) -> AssessmentSession:
    """Rebuild the session from its own history (event-sourced consistency check)."""
    rebuilt = AssessmentSession(
        session_id=session.session_id, use_title=session.use_title, pack_hash=session.pack_hash
    )
    for event in session.history:
        rebuilt = replace(rebuilt, history=rebuilt.history + (event,))
    return rebuilt


# --- Session persistence -----------------------------------------------------


def session_to_dict(session: AssessmentSession) -> dict:
    history = []
    for event in session.history:
        if isinstance(event, AnswerEvent):
            history.append(
                {
                    "type": "answer",
                    "timestamp": event.timestamp,
                    "question_id": event.question_id,
                    "value": event.value,
                    "actor": event.actor,
                }
            )
        else:
            history.append(
                {
                    "type": "attach-profile",
                    "timestamp": event.timestamp,
                    "entity_kind": event.entity_kind,
                    "entity_id": event.entity_id,
                    "profile_hash": event.profile_hash,
                    "actor": event.actor,
                    "answers": dict(event.answers),
                }
            )
    return {
        "session_id": session.session_id,
        "use_title": session.use_title,
        "pack_hash": session.pack_hash,
        "history": history,
    }


def session_to_json(session: AssessmentSession) -> str:
    return json.dumps(session_to_dict(session), indent=2, ensure_ascii=False) + "\n"


def session_from_dict(data: Mapping[str, Any]) -> AssessmentSession:
    events: list[SessionEvent] = []
    for item in data.get("history", []):
        if item.get("type") == "answer":
            events.append(
                AnswerEvent(
                    timestamp=item["timestamp"],
                    question_id=item["question_id"],
                    value=item["value"],
                    actor=item["actor"],
                )
            )
        elif item.get("type") == "attach-profile":
            events.append(
                AttachEvent(
                    timestamp=item["timestamp"],
                    entity_kind=item["entity_kind"],
                    entity_id=item["entity_id"],
                    profile_hash=item["profile_hash"],
                    actor=item["actor"],
                    answers=dict(item.get("answers", {})),
                )
            )
        else:
            raise QuestionnaireParseError(f"session history: unknown event type {item.get('type')!r}")
    return AssessmentSession(
        session_id=data["session_id"],
        use_title=data["use_title"],
        pack_hash=data["pack_hash"],
        history=tuple(events),
    )


def session_from_json(text: str) -> AssessmentSession:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise QuestionnaireParseError(f"malformed session JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise QuestionnaireParseError("session JSON: expected an object")
    for key in ("session_id", "use_title", "pack_hash"):
        if not isinstance(data.get(key), str):
            raise QuestionnaireParseError(f"session JSON: missing {key}")
    return session_from_dict(data)


def record_answers(
    session: AssessmentSession,
    questionnaires: QuestionnaireSet,
    answers: Iterable[tuple[str, str, str]],
    *,
    timestamp: str | None = None,
) -> AssessmentSession:
    """Record (question_id, value, actor) triples in order."""
    for question_id, value, actor in answers:
        session = record_answer(session, questionnaires, question_id, value, actor, timestamp=timestamp)
    return session
