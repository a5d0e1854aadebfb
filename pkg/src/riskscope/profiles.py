"""Reusable per-entity risk profiles.

Once an entity (typically a procured model) has been assessed, its answers
stay true of that entity no matter which use it is later selected for, so
they are extracted into an immutable, content-addressed profile that other
sessions attach instead of re-answering the questionnaire.

Store layout: ``profiles/<entity_kind>/<sanitized entity_id>/<hash>.json``
plus ``profiles/index.json`` mapping each entity to its latest profile.
Writes are temp-file-then-rename; writers serialize on an advisory lock.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from riskscope.errors import RiskscopeError
from riskscope.questionnaire import (
    AssessmentSession,
    QuestionnaireSet,
    active_answers,
    append_attach_event,
    utc_now,
)
from riskscope.taxonomy import EntityKind, TaxonomyPack


class NoExtractableAnswersError(RiskscopeError):
    code = "no-extractable-answers"


class PackMismatchError(RiskscopeError):
    code = "pack-mismatch"


class ProfileConflictError(RiskscopeError):
    code = "conflict"


class ProfileIoError(RiskscopeError):
    code = "io-failure"


class UnknownProfileError(RiskscopeError):
    code = "unknown-profile"


_SAFE_CHAR = re.compile(r"[A-Za-z0-9._-]")


def sanitize_entity_id(entity_id: str) -> str:
    """Percent-encode every byte outside ``[A-Za-z0-9._-]`` for use as a path segment."""
    out: list[str] = []
    for ch in entity_id:
        if _SAFE_CHAR.fullmatch(ch):
            out.append(ch)
        else:
            out.extend(f"%{byte:02X}" for byte in ch.encode("utf-8"))
    return "".join(out)


@dataclass(frozen=True)
class EntityProfile:
    """An entity's extracted answers plus provenance.

    ``profile_hash`` covers the content (entity identity, pack, answers) but
    not the provenance timestamps, so re-saving identical content yields the
    same address.
    """

    entity_kind: EntityKind
    entity_id: str
    pack_hash: str
    answers: Mapping[str, str]
    created_at: str
    actor: str
    profile_hash: str


def _content_hash(entity_kind: EntityKind, entity_id: str, pack_hash: str, answers: Mapping[str, str]) -> str:
    canonical = json.dumps(
        {
            "entity_kind": entity_kind.value,
            "entity_id": entity_id,
            "pack_hash": pack_hash,
            "answers": dict(answers),
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256((canonical + "\n").encode("utf-8")).hexdigest()


def build_profile(
    entity_kind: EntityKind,
    entity_id: str,
    pack_hash: str,
    answers: Mapping[str, str],
    *,
    actor: str,
    created_at: str | None = None,
) -> EntityProfile:
    return EntityProfile(
        entity_kind=entity_kind,
        entity_id=entity_id,
        pack_hash=pack_hash,
        answers=dict(answers),
        created_at=created_at or utc_now(),
        actor=actor,
        profile_hash=_content_hash(entity_kind, entity_id, pack_hash, answers),
    )


def profile_to_dict(profile: EntityProfile) -> dict:
    return {
        "entity_kind": profile.entity_kind.value,
        "entity_id": profile.entity_id,
        "pack_hash": profile.pack_hash,
        "answers": dict(profile.answers),
        "created_at": profile.created_at,
        "actor": profile.actor,
        "profile_hash": profile.profile_hash,
    }


def profile_from_dict(data: Mapping[str, object]) -> EntityProfile:
    try:
        kind = EntityKind(data["entity_kind"])
        profile = EntityProfile(
            entity_kind=kind,
            entity_id=str(data["entity_id"]),
            pack_hash=str(data["pack_hash"]),
            answers=dict(data["answers"]),  # type: ignore[arg-type]
            created_at=str(data["created_at"]),
            actor=str(data["actor"]),
            profile_hash=str(data["profile_hash"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ProfileIoError(f"malformed profile record: {exc}") from exc
    expected = _content_hash(profile.entity_kind, profile.entity_id, profile.pack_hash, profile.answers)
    if expected != profile.profile_hash:
        raise ProfileIoError(
            f"profile {profile.profile_hash[:12]}... failed hash verification (content hashes to {expected[:12]}...)"
        )
    return profile


class ProfileStore:
    """Directory-backed collection of profiles with a latest-per-entity index."""

    def __init__(self, root: Path):
        self.root = Path(root)

    # -- paths --

    def _entity_dir(self, entity_kind: EntityKind, entity_id: str) -> Path:
        return self.root / entity_kind.value / sanitize_entity_id(entity_id)

    def _profile_path(self, profile: EntityProfile) -> Path:
        return self._entity_dir(profile.entity_kind, profile.entity_id) / f"{profile.profile_hash}.json"

    @property
    def _index_path(self) -> Path:
        return self.root / "index.json"

    # -- index --

    def _read_index(self) -> dict:
        if not self._index_path.exists():
            return {"version": 1, "entries": {}}
        try:
            return json.loads(self._index_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ProfileIoError(f"cannot read profile index: {exc}") from exc

    def _atomic_write(self, path: Path, text: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_text(text, encoding="utf-8")
            # rename is the commit point; a crash before it leaves the old file intact
            tmp.replace(path)
        except OSError as exc:
            try:
                tmp.unlink(missing_ok=True)
            except OSError:
                pass
            raise ProfileIoError(f"cannot write {path.name}: {exc}") from exc

    def save(self, profile: EntityProfile) -> None:
        """Persist the profile and point the index at it (atomic, serialized)."""
        self.root.mkdir(parents=True, exist_ok=True)
        lock_path = self.root / ".lock"
        with open(lock_path, "w") as lock:
            fcntl.flock(lock, fcntl.LOCK_EX)
            try:
                path = self._profile_path(profile)
                if not path.exists():  # content-addressed: identical content is a single object
                    self._atomic_write(path, json.dumps(profile_to_dict(profile), indent=2, ensure_ascii=False) + "\n")
                index = self._read_index()
                key = f"{profile.entity_kind.value}/{sanitize_entity_id(profile.entity_id)}"
                entry = index["entries"].get(
                    key,
                    {"entity_kind": profile.entity_kind.value, "entity_id": profile.entity_id, "profiles": []},
                )
                if profile.profile_hash not in entry["profiles"]:
                    entry["profiles"].append(profile.profile_hash)
                entry["latest"] = profile.profile_hash
                index["entries"][key] = entry
                self._atomic_write(self._index_path, json.dumps(index, indent=2, ensure_ascii=False, sort_keys=True) + "\n")
            finally:
                fcntl.flock(lock, fcntl.LOCK_UN)

    def load(self, entity_kind: EntityKind, entity_id: str, profile_hash: str) -> EntityProfile:
        path = self._entity_dir(entity_kind, entity_id) / f"{profile_hash}.json"
        if not path.exists():
            raise UnknownProfileError(f"no stored profile {profile_hash[:12]}... for {entity_kind.value} {entity_id!r}")
        return profile_from_dict(json.loads(path.read_text(encoding="utf-8")))

    def latest(self, entity_kind: EntityKind, entity_id: str) -> EntityProfile | None:
        index = self._read_index()
        entry = index["entries"].get(f"{entity_kind.value}/{sanitize_entity_id(entity_id)}")
        if entry is None:
            return None
        return self.load(entity_kind, entity_id, entry["latest"])

    def list_entries(self) -> list[dict]:
        index = self._read_index()
        return [index["entries"][key] | {"key": key} for key in sorted(index["entries"])]


# --- Operations --------------------------------------------------------------


def extractable_question_ids(
    pack: TaxonomyPack, questionnaires: QuestionnaireSet, entity_kind: EntityKind
) -> list[str]:
    """Question ids whose stage is bound to this entity kind for profile reuse."""
    stage_ids = {stage.id for stage in pack.stages if stage.entity is entity_kind}
    return [
        question.id
        for questionnaire in questionnaires.questionnaires
        if questionnaire.stage in stage_ids
        for question in questionnaire.questions
    ]


def save_profile(
    store: ProfileStore,
    session: AssessmentSession,
    pack: TaxonomyPack,
    questionnaires: QuestionnaireSet,
    entity_kind: EntityKind,
    entity_id: str,
    *,
    actor: str = "",
    created_at: str | None = None,
) -> EntityProfile:
    """Extract the entity's stage answers from a session into a stored profile."""
    if session.pack_hash != pack.content_hash:
        raise PackMismatchError("session and pack hashes differ; refusing to extract a profile")
    eligible = extractable_question_ids(pack, questionnaires, entity_kind)
    active = active_answers(session, questionnaires)
    answers = {qid: active[qid].value for qid in eligible if qid in active}
    if not answers:
        raise NoExtractableAnswersError(
            f"session has no active answers for any stage bound to entity kind {entity_kind.value!r}"
        )
    profile = build_profile(
        entity_kind,
        entity_id,
        session.pack_hash,
        answers,
        actor=actor,
        created_at=created_at,
    )
    store.save(profile)
    return profile


def attach_profile(
    session: AssessmentSession,
    profile: EntityProfile,
    questionnaires: QuestionnaireSet,
    *,
    actor: str = "",
    timestamp: str | None = None,
) -> AssessmentSession:
    """Merge a profile's answers into the session, marked as reused.

    Attachment is all-or-nothing: any active answer that differs from the
    profile rejects the whole attach, so reuse can never silently change an
    auditor-visible answer. Re-attaching the same profile is a no-op.
    """
    if profile.pack_hash != session.pack_hash:
        raise PackMismatchError(
            f"profile was assessed against pack {profile.pack_hash[:12]}..., "
            f"session uses {session.pack_hash[:12]}..."
        )
    if any(ref.profile_hash == profile.profile_hash for ref in session.attached_profiles()):
        return session

    active = active_answers(session, questionnaires)
    conflicts = [
        qid
        for qid, value in profile.answers.items()
        if qid in active and active[qid].value != value
    ]
    if conflicts:
        raise ProfileConflictError(
            f"profile answers conflict with session answers for: {', '.join(sorted(conflicts))}",
            detail={"questions": sorted(conflicts)},
        )
    return append_attach_event(
        session,
        entity_kind=profile.entity_kind.value,
        entity_id=profile.entity_id,
        profile_hash=profile.profile_hash,
        actor=actor or profile.actor,
        answers=profile.answers,
        timestamp=timestamp,
    )
