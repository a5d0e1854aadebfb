"""Profile extraction, content-addressed storage, attachment, and reuse equivalence."""

from __future__ import annotations

import json

import pytest

from riskscope.engine import evaluate_session
from riskscope.profiles import (
    NoExtractableAnswersError,
    PackMismatchError,
    ProfileConflictError,
    ProfileIoError,
    ProfileStore,
    UnknownProfileError,
    attach_profile,
    build_profile,
    sanitize_entity_id,
    save_profile,
)
from riskscope.questionnaire import new_session, record_answer, record_answers
from riskscope.taxonomy import EntityKind


@pytest.fixture()
def store(tmp_path):
    return ProfileStore(tmp_path / "profiles")


@pytest.fixture()
def onboarded_session(bundle, pack):
    session = new_session("donor use", pack.content_hash)
    return record_answers(
        session,
        bundle.questionnaires,
        [
            ("B1", "yes", "data-scientist"),
            ("B2", "yes", "data-scientist"),
            ("B3", "yes", "data-scientist"),
            ("B4", "Rows matching a toxicity classifier were dropped; see the data card.", "data-scientist"),
        ],
    )


class TestSanitize:
    def test_safe_characters_pass_through(self):
        assert sanitize_entity_id("granite-3.1_8b") == "granite-3.1_8b"

    def test_unsafe_bytes_percent_encoded(self):
        assert sanitize_entity_id("a/b c") == "a%2Fb%20c"
        assert sanitize_entity_id("näme") == "n%C3%A4me"
        assert sanitize_entity_id("x~y") == "x%7Ey"


class TestSaveProfile:
    def test_extracts_model_stage_answers(self, store, bundle, pack, onboarded_session):
        profile = save_profile(
            store, onboarded_session, pack, bundle.questionnaires, EntityKind.MODEL, "granite-3.1",
            actor="data-scientist",
        )
        assert set(profile.answers) == {"B1", "B2", "B3", "B4"}
        assert profile.entity_kind is EntityKind.MODEL
        assert profile.pack_hash == pack.content_hash
        assert len(profile.profile_hash) == 64

    def test_use_only_answers_not_extractable_for_model(self, store, bundle, pack):
        session = new_session("a-only", pack.content_hash)
        session = record_answer(session, bundle.questionnaires, "A7", "yes", "po")
        with pytest.raises(NoExtractableAnswersError):
            save_profile(store, session, pack, bundle.questionnaires, EntityKind.MODEL, "m")

    def test_identical_content_same_hash_single_object(self, store, bundle, pack, onboarded_session):
        first = save_profile(
            store, onboarded_session, pack, bundle.questionnaires, EntityKind.MODEL, "granite-3.1"
        )
        second = save_profile(
            store, onboarded_session, pack, bundle.questionnaires, EntityKind.MODEL, "granite-3.1"
        )
        assert first.profile_hash == second.profile_hash
        stored = list((store.root / "model" / "granite-3.1").glob("*.json"))
        assert len(stored) == 1

    def test_round_trip_including_hash(self, store, bundle, pack, onboarded_session):
        saved = save_profile(
            store, onboarded_session, pack, bundle.questionnaires, EntityKind.MODEL, "granite-3.1",
            actor="data-scientist",
        )
        loaded = store.load(EntityKind.MODEL, "granite-3.1", saved.profile_hash)
        assert loaded == saved

    def test_corrupt_profile_fails_verification(self, store, bundle, pack, onboarded_session):
        saved = save_profile(store, onboarded_session, pack, bundle.questionnaires, EntityKind.MODEL, "m1")
        path = store.root / "model" / "m1" / f"{saved.profile_hash}.json"
        data = json.loads(path.read_text())
        data["answers"]["B1"] = "no"
        path.write_text(json.dumps(data))
        with pytest.raises(ProfileIoError):
            store.load(EntityKind.MODEL, "m1", saved.profile_hash)

    def test_latest_points_at_most_recent_save(self, store, bundle, pack, onboarded_session):
        first = save_profile(store, onboarded_session, pack, bundle.questionnaires, EntityKind.MODEL, "m")
        changed = record_answer(onboarded_session, bundle.questionnaires, "B3", "no", "ds")
        second = save_profile(store, changed, pack, bundle.questionnaires, EntityKind.MODEL, "m")
        assert store.latest(EntityKind.MODEL, "m").profile_hash == second.profile_hash
        assert first.profile_hash != second.profile_hash
        entry = store.list_entries()[0]
        assert entry["profiles"] == [first.profile_hash, second.profile_hash]

    def test_unknown_profile_load(self, store):
        with pytest.raises(UnknownProfileError):
            store.load(EntityKind.MODEL, "m", "0" * 64)


class TestAttach:
    def test_attach_merges_as_reused(self, store, bundle, pack, onboarded_session):
        profile = save_profile(store, onboarded_session, pack, bundle.questionnaires, EntityKind.MODEL, "m")
        target = new_session("fresh use", pack.content_hash)
        target = attach_profile(target, profile, bundle.questionnaires)
        from riskscope.questionnaire import active_answers

        active = active_answers(target, bundle.questionnaires)
        assert active["B1"].provenance == "reused"
        assert active["B1"].value == "yes"
        assert target.attached_profiles()[0].profile_hash == profile.profile_hash

    def test_attach_twice_is_noop(self, store, bundle, pack, onboarded_session):
        profile = save_profile(store, onboarded_session, pack, bundle.questionnaires, EntityKind.MODEL, "m")
        target = new_session("fresh", pack.content_hash)
        once = attach_profile(target, profile, bundle.questionnaires)
        twice = attach_profile(once, profile, bundle.questionnaires)
        assert twice == once

    def test_conflicting_answer_rejected_wholesale(self, store, bundle, pack, onboarded_session):
        profile = save_profile(store, onboarded_session, pack, bundle.questionnaires, EntityKind.MODEL, "m")
        target = new_session("fresh", pack.content_hash)
        target = record_answer(target, bundle.questionnaires, "B1", "no", "ds")
        with pytest.raises(ProfileConflictError):
            attach_profile(target, profile, bundle.questionnaires)
        assert target.attached_profiles() == ()

    def test_pack_mismatch_rejected(self, bundle, pack):
        profile = build_profile(EntityKind.MODEL, "m", "f" * 64, {"B1": "yes"}, actor="ds")
        target = new_session("fresh", pack.content_hash)
        with pytest.raises(PackMismatchError):
            attach_profile(target, profile, bundle.questionnaires)

    def test_reuse_equivalence_tourist_toxic_status(self, store, bundle, pack):
        donor = new_session("donor", pack.content_hash)
        donor = record_answer(donor, bundle.questionnaires, "B1", "unknown", "ds")
        profile = save_profile(store, donor, pack, bundle.questionnaires, EntityKind.MODEL, "granite")

        attached = attach_profile(new_session("u", pack.content_hash, "same-id"), profile, bundle.questionnaires)
        manual = record_answer(
            new_session("u", pack.content_hash, "same-id"), bundle.questionnaires, "B1", "unknown", "ds"
        )
        report_a = evaluate_session(attached, pack, bundle.questionnaires, bundle.rules, generated_at="t")
        report_m = evaluate_session(manual, pack, bundle.questionnaires, bundle.rules, generated_at="t")
        assert report_a.entry("toxic-output").status == "indeterminate-flagged"
        assert [(e.risk_id, e.status) for e in report_a.risks] == [
            (e.risk_id, e.status) for e in report_m.risks
        ]
        assert [e.fired_rules for e in report_a.risks] == [e.fired_rules for e in report_m.risks]


class TestAtomicity:
    def test_crashed_index_write_leaves_old_index_valid(self, store, bundle, pack, onboarded_session, monkeypatch):
        first = save_profile(store, onboarded_session, pack, bundle.questionnaires, EntityKind.MODEL, "m")

        import pathlib

        original_replace = pathlib.Path.replace
        calls = {"n": 0}

        def failing_replace(self, target):
            # let the profile blob commit, fail the index commit
            if str(target).endswith("index.json"):
                calls["n"] += 1
                raise OSError("injected failure")
            return original_replace(self, target)

        monkeypatch.setattr(pathlib.Path, "replace", failing_replace)
        changed = record_answer(onboarded_session, bundle.questionnaires, "B3", "no", "ds")
        with pytest.raises(ProfileIoError):
            save_profile(store, changed, pack, bundle.questionnaires, EntityKind.MODEL, "m")
        monkeypatch.setattr(pathlib.Path, "replace", original_replace)
        assert calls["n"] == 1

        # index still resolves to the previously committed profile
        assert store.latest(EntityKind.MODEL, "m").profile_hash == first.profile_hash
        assert not list(store.root.rglob("*.tmp"))

    def test_every_index_entry_resolves(self, store, bundle, pack, onboarded_session):
        save_profile(store, onboarded_session, pack, bundle.questionnaires, EntityKind.MODEL, "m one")
        changed = record_answer(onboarded_session, bundle.questionnaires, "B2", "no", "ds")
        save_profile(store, changed, pack, bundle.questionnaires, EntityKind.MODEL, "m one")
        for entry in store.list_entries():
            for profile_hash in entry["profiles"]:
                loaded = store.load(EntityKind(entry["entity_kind"]), entry["entity_id"], profile_hash)
                assert loaded.profile_hash == profile_hash
