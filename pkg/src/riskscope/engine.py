"""Risk rule evaluation and potential-risk reporting.

A rule binds a risk to a condition over evidence answers. Evaluating a
session runs every rule against the session's active bindings and maps
the three-valued outcomes to a per-risk status:

* ``flagged`` — some rule's condition held;
* ``not-flagged`` — every rule's condition failed;
* ``indeterminate-flagged`` / ``indeterminate-unflagged`` — no rule held,
  at least one could not be decided (or the risk has no rules yet), and
  the unknown-handling policy chose whether to surface it.

Flagging on unknown is deliberately a policy knob: whether "no evidence to
the contrary" should surface a risk is an organizational risk-tolerance
decision, not a property of the data.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import IO, Any, Mapping, Sequence

from riskscope import condexpr
from riskscope.condexpr import AnswerBindings, ConditionExpr, TruthValue
from riskscope.errors import RiskscopeError
from riskscope.questionnaire import (
    AssessmentSession,
    Purpose,
    QuestionnaireSet,
    active_answers,
    active_bindings,
    utc_now,
)
from riskscope.taxonomy import TaxonomyPack


class RuleParseError(RiskscopeError):
    code = "parse-error"


class CrossReferenceError(RiskscopeError):
    code = "cross-reference-error"


class StalePackError(RiskscopeError):
    code = "stale-pack"


class UnknownRiskError(RiskscopeError):
    code = "unknown-risk"


RISK_STATUSES = ("flagged", "not-flagged", "indeterminate-flagged", "indeterminate-unflagged")


@dataclass(frozen=True)
class RiskRule:
    id: str
    risk_id: str
    condition: ConditionExpr
    condition_text: str
    rationale: str
    unknown_flags: bool | None = None  # per-rule override of the policy default


@dataclass(frozen=True)
class EngineConfig:
    unknown_flags_default: bool = True
    pack_hash: str | None = None
    rules_hash: str | None = None


@dataclass(frozen=True)
class RuleAnswer:
    question_id: str
    prompt: str
    answer: str | None  # None = unanswered


@dataclass(frozen=True)
class RuleFiring:
    rule_id: str
    condition_text: str
    rationale: str
    truth: TruthValue
    answers: tuple[RuleAnswer, ...]  # exact bindings the condition read
    unknown_flags: bool | None = None


@dataclass(frozen=True)
class RiskEntry:
    risk_id: str
    name: str
    status: str
    entities: tuple[str, ...]
    stages: tuple[str, ...]
    fired_rules: tuple[RuleFiring, ...]


@dataclass(frozen=True)
class DossierEntry:
    question_id: str
    prompt: str
    answer: str
    provenance: str  # "answered" | "reused"


@dataclass(frozen=True)
class ProfileSummary:
    entity_kind: str
    entity_id: str
    profile_hash: str
    summary: str


@dataclass(frozen=True)
class ContextDossier:
    use_title: str
    entries: tuple[DossierEntry, ...]
    profiles: tuple[ProfileSummary, ...] = ()


@dataclass(frozen=True)
class PotentialRiskReport:
    session_id: str
    use_title: str
    pack_hash: str
    generated_at: str
    unknown_flags_default: bool
    risks: tuple[RiskEntry, ...]
    dossier: ContextDossier

    def entry(self, risk_id: str) -> RiskEntry:
        for entry in self.risks:
            if entry.risk_id == risk_id:
                return entry
        raise UnknownRiskError(f"risk {risk_id!r} is not in this report")


# --- Rule loading ------------------------------------------------------------


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
    raise TypeError(f"cannot read rules source of type {type(source).__name__}")


def load_rules(
    source: str | bytes | os.PathLike | IO,
    pack: TaxonomyPack,
    questionnaires: QuestionnaireSet,
) -> tuple[RiskRule, ...]:
    """Parse and cross-validate a rule set.

    Each rule's risk must exist; its condition may only read evidence
    questions, and only from questionnaires whose stage is listed on the
    risk (the stage mapping is what says when enough information exists).
    """
    text = _read_source(source)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RuleParseError(f"malformed rules JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from exc
    if not isinstance(raw, dict) or not isinstance(raw.get("rules"), list):
        raise RuleParseError("rules file: expected object with a 'rules' list")

    evidence_ids = questionnaires.evidence_question_ids()
    rules: list[RiskRule] = []
    seen_ids: set[str] = set()
    for index, item in enumerate(raw["rules"]):
        if not isinstance(item, dict):
            raise RuleParseError(f"rules[{index}]: expected an object")
        risk_id = item.get("risk_id")
        risk = pack.risk(risk_id) if isinstance(risk_id, str) else None
        if risk is None:
            raise CrossReferenceError(f"rules[{index}]: unknown risk id {risk_id!r}")

        condition_text = item.get("condition")
        if not isinstance(condition_text, str):
            raise RuleParseError(f"rule for {risk_id!r}: missing condition text")
        try:
            condition = condexpr.parse(condition_text)
        except condexpr.ConditionParseError as exc:
            raise RuleParseError(f"rule for {risk_id!r}: {exc}") from exc

        rule_id = item.get("id") or f"{risk_id}-rule-{index}"
        if rule_id in seen_ids:
            raise CrossReferenceError(f"duplicate rule id {rule_id!r}")
        seen_ids.add(rule_id)

        for qid in sorted(condexpr.referenced_questions(condition)):
            if qid not in evidence_ids:
                raise CrossReferenceError(
                    f"rule {rule_id!r}: condition reads {qid!r}, which is not an evidence question"
                )
            questionnaire, _ = questionnaires.find(qid)
            if questionnaire.stage not in risk.stages:
                raise CrossReferenceError(
                    f"rule {rule_id!r}: question {qid!r} belongs to stage {questionnaire.stage!r}, "
                    f"which is not mapped to risk {risk_id!r}"
                )

        unknown_flags = item.get("unknown_flags")
        if unknown_flags is not None and not isinstance(unknown_flags, bool):
            raise RuleParseError(f"rule {rule_id!r}: unknown_flags must be a boolean")

        rationale = item.get("rationale")
        if not isinstance(rationale, str) or not rationale:
            raise RuleParseError(f"rule {rule_id!r}: missing rationale")

        rules.append(
            RiskRule(
                id=rule_id,
                risk_id=risk_id,
                condition=condition,
                condition_text=condexpr.serialize(condition),
                rationale=rationale,
                unknown_flags=unknown_flags,
            )
        )
    return tuple(rules)


def rules_hash(rules: Sequence[RiskRule]) -> str:
    canonical = json.dumps(
        [
            {
                "id": r.id,
                "risk_id": r.risk_id,
                "condition": r.condition_text,
                "rationale": r.rationale,
                "unknown_flags": r.unknown_flags,
            }
            for r in rules
        ],
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256((canonical + "\n").encode("utf-8")).hexdigest()


# --- Evaluation --------------------------------------------------------------


def _rule_firing(rule: RiskRule, bindings: AnswerBindings, questionnaires: QuestionnaireSet | None) -> RuleFiring:
    truth = condexpr.evaluate(rule.condition, bindings)
    answers = []
    for qid in sorted(condexpr.referenced_questions(rule.condition)):
        prompt = ""
        if questionnaires is not None:
            try:
                prompt = questionnaires.question(qid).prompt
            except Exception:
                prompt = ""
        answers.append(RuleAnswer(question_id=qid, prompt=prompt, answer=bindings.get(qid)))
    return RuleFiring(
        rule_id=rule.id,
        condition_text=rule.condition_text,
        rationale=rule.rationale,
        truth=truth,
        answers=tuple(answers),
        unknown_flags=rule.unknown_flags,
    )


def _status(firings: Sequence[RuleFiring], default_policy: bool) -> str:
    truths = [f.truth for f in firings]
    if any(t is TruthValue.YES for t in truths):
        return "flagged"
    if not firings:
        # No rules for this risk yet: no evidence either way, so the
        # unknown-handling policy decides, exactly as for an undecided rule.
        return "indeterminate-flagged" if default_policy else "indeterminate-unflagged"
    if any(t is TruthValue.UNKNOWN for t in truths):
        effective = any(
            (f.unknown_flags if f.unknown_flags is not None else default_policy)
            for f in firings
            if f.truth is TruthValue.UNKNOWN
        )
        return "indeterminate-flagged" if effective else "indeterminate-unflagged"
    return "not-flagged"


def evaluate_bindings(
    pack: TaxonomyPack,
    rules: Sequence[RiskRule],
    bindings: AnswerBindings | Mapping[str, str],
    config: EngineConfig = EngineConfig(),
    questionnaires: QuestionnaireSet | None = None,
) -> tuple[RiskEntry, ...]:
    """Per-risk statuses for a fixed set of answer bindings.

    This is the policy-mapping core used by :func:`evaluate_session`; it is
    also callable directly with hand-built bindings (no gate filtering).
    Every risk in the pack appears exactly once, in declaration order.
    """
    if not isinstance(bindings, AnswerBindings):
        bindings = AnswerBindings(values=bindings)
    entries: list[RiskEntry] = []
    for risk in pack.risks:
        firings = tuple(
            _rule_firing(rule, bindings, questionnaires) for rule in rules if rule.risk_id == risk.id
        )
        entries.append(
            RiskEntry(
                risk_id=risk.id,
                name=risk.name,
                status=_status(firings, config.unknown_flags_default),
                entities=tuple(kind.value for kind in risk.entities),
                stages=risk.stages,
                fired_rules=firings,
            )
        )
    return tuple(entries)


def assemble_dossier(session: AssessmentSession, questionnaires: QuestionnaireSet) -> ContextDossier:
    """Collect every active context answer, ordered by questionnaire then declaration.

    Reviewers deciding whether a flagged risk is actually relevant read
    this instead of the raw session history.
    """
    active = active_answers(session, questionnaires)
    entries: list[DossierEntry] = []
    for questionnaire in questionnaires.questionnaires:
        for question in questionnaire.questions:
            if question.purpose is not Purpose.CONTEXT:
                continue
            record = active.get(question.id)
            if record is None:
                continue
            entries.append(
                DossierEntry(
                    question_id=question.id,
                    prompt=question.prompt,
                    answer=record.value,
                    provenance=record.provenance,
                )
            )

    profiles: list[ProfileSummary] = []
    for ref in session.attached_profiles():
        remediation: list[str] = []
        profile_answers = _attach_answers(session, ref.profile_hash)
        for questionnaire in questionnaires.questionnaires:
            for question in questionnaire.questions:
                if question.purpose is Purpose.CONTEXT and question.id in profile_answers:
                    remediation.append(f"{question.id}: {profile_answers[question.id]}")
        summary = f"{ref.entity_kind} {ref.entity_id} (profile {ref.profile_hash[:12]})"
        if remediation:
            summary += "; " + "; ".join(remediation)
        profiles.append(
            ProfileSummary(
                entity_kind=ref.entity_kind,
                entity_id=ref.entity_id,
                profile_hash=ref.profile_hash,
                summary=summary,
            )
        )
    return ContextDossier(use_title=session.use_title, entries=tuple(entries), profiles=tuple(profiles))


def _attach_answers(session: AssessmentSession, profile_hash: str) -> Mapping[str, str]:
    for event in session.history:
        if getattr(event, "profile_hash", None) == profile_hash:
            return event.answers
    return {}


def evaluate_session(
    session: AssessmentSession,
    pack: TaxonomyPack,
    questionnaires: QuestionnaireSet,
    rules: Sequence[RiskRule],
    config: EngineConfig = EngineConfig(),
    *,
    generated_at: str | None = None,
) -> PotentialRiskReport:
    """Evaluate all rules against the session's active answers and build the report."""
    if session.pack_hash != pack.content_hash:
        raise StalePackError(
            f"session {session.session_id} was created against pack {session.pack_hash[:12]}..., "
            f"loaded pack is {pack.content_hash[:12]}..."
        )
    if config.pack_hash is not None and config.pack_hash != pack.content_hash:
        raise StalePackError("engine config references a different pack")
    bindings = active_bindings(session, questionnaires)
    entries = evaluate_bindings(pack, rules, bindings, config, questionnaires)
    return PotentialRiskReport(
        session_id=session.session_id,
        use_title=session.use_title,
        pack_hash=pack.content_hash,
        generated_at=generated_at or utc_now(),
        unknown_flags_default=config.unknown_flags_default,
        risks=entries,
        dossier=assemble_dossier(session, questionnaires),
    )


# --- Explanation -------------------------------------------------------------


def _flatten(expr: ConditionExpr, op: type) -> list[ConditionExpr]:
    if isinstance(expr, op):
        return _flatten(expr.left, op) + [expr.right]
    return [expr]


def _firing_bindings(firing: RuleFiring) -> AnswerBindings:
    return AnswerBindings(values={a.question_id: a.answer for a in firing.answers if a.answer is not None})


def explain(report: PotentialRiskReport, risk_id: str) -> str:
    """Human-readable rationale for one risk's status in a report.

    Cites each rule's expert condition, the referenced question prompts with
    their answers, and, for undecided or failed conditions, which parts
    blocked or failed.
    """
    entry = report.entry(risk_id)
    lines = [f"{entry.name} [{entry.risk_id}]: {entry.status}"]
    if not entry.fired_rules:
        lines.append(
            "  No rules are defined for this risk; it is reported per the unknown-handling policy."
        )
    for firing in entry.fired_rules:
        lines.append(f"  Rule {firing.rule_id} evaluated {firing.truth.value}: {firing.rationale}")
        lines.append(f"    condition: {firing.condition_text}")
        for answer in firing.answers:
            shown = answer.answer if answer.answer is not None else "(unanswered)"
            prompt = f" {answer.prompt!r}" if answer.prompt else ""
            lines.append(f"    {answer.question_id}{prompt}: {shown}")
        if firing.truth is TruthValue.NO:
            lines.extend(_failed_parts(firing))
        elif firing.truth is TruthValue.UNKNOWN:
            blockers = [
                a.question_id
                for a in firing.answers
                if a.answer is None or a.answer == condexpr.UNKNOWN_MARKER
            ]
            if blockers:
                lines.append(f"    undecided because of: {', '.join(blockers)}")
    return "\n".join(lines)


def _failed_parts(firing: RuleFiring) -> list[str]:
    expr = condexpr.parse(firing.condition_text)
    bindings = _firing_bindings(firing)
    parts = _flatten(expr, condexpr.And) if isinstance(expr, condexpr.And) else _flatten(expr, condexpr.Or)
    label = "conjunct" if isinstance(expr, condexpr.And) else "alternative"
    out = []
    for part in parts:
        truth = condexpr.evaluate(part, bindings)
        if truth is TruthValue.NO:
            out.append(f"    failed {label}: {condexpr.serialize(part)}")
    return out


# --- Report rendering --------------------------------------------------------


def report_to_dict(report: PotentialRiskReport) -> dict:
    return {
        "session_id": report.session_id,
        "use_title": report.use_title,
        "pack_hash": report.pack_hash,
        "generated_at": report.generated_at,
        "policy": {"unknown_flags_default": report.unknown_flags_default},
        "risks": [
            {
                "risk_id": entry.risk_id,
                "name": entry.name,
                "status": entry.status,
                "entities": list(entry.entities),
                "stages": list(entry.stages),
                "fired_rules": [
                    {
                        "rule_id": firing.rule_id,
                        "condition": firing.condition_text,
                        "rationale": firing.rationale,
                        "truth": firing.truth.value,
                        "answers": [
                            {"question_id": a.question_id, "prompt": a.prompt, "answer": a.answer}
                            for a in firing.answers
                        ],
                    }
                    for firing in entry.fired_rules
                ],
                "explanation": explain(report, entry.risk_id),
            }
            for entry in report.risks
        ],
        "dossier": {
            "use_title": report.dossier.use_title,
            "entries": [
                {
                    "question_id": e.question_id,
                    "prompt": e.prompt,
                    "answer": e.answer,
                    "provenance": e.provenance,
                }
                for e in report.dossier.entries
            ],
            "profiles": [
                {
                    "entity_kind": p.entity_kind,
                    "entity_id": p.entity_id,
                    "profile_hash": p.profile_hash,
                    "summary": p.summary,
                }
                for p in report.dossier.profiles
            ],
        },
    }


def report_to_json(report: PotentialRiskReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n"


def render_markdown(report: PotentialRiskReport) -> str:
    lines = [
        "# Potential risk report",
        "",
        f"- Use: {report.use_title}",
        f"- Session: `{report.session_id}`",
        f"- Pack: `{report.pack_hash}`",
        f"- Generated: {report.generated_at}",
        f"- Flag undecided risks: {'yes' if report.unknown_flags_default else 'no'}",
        "",
        "## Summary",
        "",
        "| Risk | Status | Entities | Stages |",
        "| --- | --- | --- | --- |",
    ]
    for entry in report.risks:
        lines.append(
            f"| {entry.name} | {entry.status} | {', '.join(entry.entities)} | {', '.join(entry.stages)} |"
        )
    lines += ["", "## Per-risk rationale", ""]
    for entry in report.risks:
        lines.append(f"### {entry.name} - {entry.status}")
        lines.append("")
        lines.append("```")
        lines.append(explain(report, entry.risk_id))
        lines.append("```")
        lines.append("")
    lines += ["## Context dossier", ""]
    if not report.dossier.entries and not report.dossier.profiles:
        lines.append("_No context answers were collected._")
    for entry in report.dossier.entries:
        suffix = " _(reused)_" if entry.provenance == "reused" else ""
        lines.append(f"- **{entry.question_id}. {entry.prompt}**{suffix}")
        lines.append(f"  {entry.answer}")
    if report.dossier.profiles:
        lines.append("")
        lines.append("### Attached profiles")
        lines.append("")
        for profile in report.dossier.profiles:
            lines.append(f"- {profile.summary}")
    lines.append("")
    return "\n".join(lines)
