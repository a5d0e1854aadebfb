"""Risk taxonomy: governance entities, lifecycle stages, roles, and risk definitions.

A taxonomy pack is a JSON document declaring the stages, answering roles,
and risks of interest, with each risk mapped to the entities that
contribute it and the lifecycle stages at which it can be identified.
Packs are immutable after load and addressed by a content hash over their
canonical serialization.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from dataclasses import dataclass
from enum import Enum
from typing import IO, Any

from riskscope.errors import RiskscopeError

SEMVER_PARTS = 3


class PackParseError(RiskscopeError):
    """Pack source is not well-formed JSON."""

    code = "parse-error"


class PackValidationError(RiskscopeError):
    """Pack violates a structural invariant; names the offending id."""

    code = "validation-error"


class UnknownStageError(RiskscopeError):
    code = "unknown-stage"


class EntityKind(str, Enum):
    """The six components of an AI solution to which risks attach.

    The set is closed: extending it would change what "covering all
    entities" means and silently weaken downstream checks.
    """

    USE_CASE = "use-case"
    USE = "use"
    CONTEXT = "context"
    DATA = "data"
    MODEL = "model"
    PROMPT = "prompt"


@dataclass(frozen=True)
class Stage:
    """A point in the model lifecycle at which a questionnaire is answered.

    ``entity`` optionally names the single entity kind whose reusable risk
    profile this stage's answers describe; stages whose answers entangle
    several entities leave it unset and are not profile-extractable.
    """

    id: str
    display_name: str
    description: str
    entity: EntityKind | None = None


@dataclass(frozen=True)
class Role:
    id: str
    display_name: str
    description: str


@dataclass(frozen=True)
class RiskDefinition:
    """A taxonomy node: a named risk with its entity and stage mappings."""

    id: str
    name: str
    description: str
    entities: tuple[EntityKind, ...]
    stages: tuple[str, ...]
    source: str
    notes: str | None = None


@dataclass(frozen=True)
class TaxonomyPack:
    version: str
    stages: tuple[Stage, ...]
    roles: tuple[Role, ...]
    risks: tuple[RiskDefinition, ...]
    content_hash: str

    def stage(self, stage_id: str) -> Stage:
        for stage in self.stages:
            if stage.id == stage_id:
                return stage
        raise UnknownStageError(f"stage {stage_id!r} is not declared in the pack")

    def role(self, role_id: str) -> Role | None:
        for role in self.roles:
            if role.id == role_id:
                return role
        return None

    def risk(self, risk_id: str) -> RiskDefinition | None:
        for risk in self.risks:
            if risk.id == risk_id:
                return risk
        return None


# --- Loading -----------------------------------------------------------------


def _read_source(source: Any) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    if isinstance(source, (os.PathLike,)):
        with open(source, "r", encoding="utf-8") as handle:
            return handle.read()
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    raise TypeError(f"cannot read pack source of type {type(source).__name__}")


def _expect_object(value: Any, where: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(value, dict):
        raise PackValidationError(f"{where}: expected an object, got {type(value).__name__}")
    missing = sorted(required - value.keys())
    if missing:
        raise PackValidationError(f"{where}: missing fields {missing}")
    unknown = sorted(value.keys() - required - optional)
    if unknown:
        raise PackValidationError(f"{where}: unexpected fields {unknown}")
    return value


def _expect_str(value: Any, where: str, *, allow_empty: bool = False) -> str:
    if not isinstance(value, str) or (not allow_empty and not value):
        raise PackValidationError(f"{where}: expected a non-empty string")
    return value


def load_pack(source: str | bytes | os.PathLike | IO) -> TaxonomyPack:
    """Parse and validate a taxonomy pack, computing its content hash.

    Validation is total: the source either yields a fully valid pack or a
    diagnostic error naming the offending element; no partially-loaded
    state is observable.
    """
    text = _read_source(source)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PackParseError(
            f"malformed pack JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})",
            detail={"line": exc.lineno, "column": exc.colno},
        ) from exc

    top = _expect_object(raw, "pack", {"version", "stages", "roles", "risks"})
    version = _expect_str(top["version"], "pack.version")
    if len(version.split(".")) != SEMVER_PARTS or not all(p.isdigit() for p in version.split(".")):
        raise PackValidationError(f"pack.version: {version!r} is not a semantic version")

    entity_values = {kind.value: kind for kind in EntityKind}

    stages: list[Stage] = []
    seen_stage_ids: set[str] = set()
    for item in _expect_list(top["stages"], "pack.stages"):
        obj = _expect_object(item, "stage", {"id", "display_name", "description"}, {"entity"})
        stage_id = _expect_str(obj["id"], "stage.id")
        if stage_id in seen_stage_ids:
            raise PackValidationError(f"duplicate stage id {stage_id!r}")
        seen_stage_ids.add(stage_id)
        entity = obj.get("entity")
        if entity is not None and entity not in entity_values:
            raise PackValidationError(f"stage {stage_id!r}: unknown entity kind {entity!r}")
        stages.append(
            Stage(
                id=stage_id,
                display_name=_expect_str(obj["display_name"], f"stage {stage_id!r}.display_name"),
                description=_expect_str(obj["description"], f"stage {stage_id!r}.description"),
                entity=entity_values[entity] if entity is not None else None,
            )
        )

    roles: list[Role] = []
    seen_role_ids: set[str] = set()
    for item in _expect_list(top["roles"], "pack.roles"):
        obj = _expect_object(item, "role", {"id", "display_name", "description"})
        role_id = _expect_str(obj["id"], "role.id")
        if role_id in seen_role_ids:
            raise PackValidationError(f"duplicate role id {role_id!r}")
        seen_role_ids.add(role_id)
        roles.append(
            Role(
                id=role_id,
                display_name=_expect_str(obj["display_name"], f"role {role_id!r}.display_name"),
                description=_expect_str(obj["description"], f"role {role_id!r}.description"),
            )
        )

    risks: list[RiskDefinition] = []
    seen_risk_ids: set[str] = set()
    for item in _expect_list(top["risks"], "pack.risks"):
        obj = _expect_object(
            item, "risk", {"id", "name", "description", "entities", "stages", "source"}, {"notes"}
        )
        risk_id = _expect_str(obj["id"], "risk.id")
        if risk_id in seen_risk_ids:
            raise PackValidationError(f"duplicate risk id {risk_id!r}")
        seen_risk_ids.add(risk_id)

        entities: list[EntityKind] = []
        for value in _expect_list(obj["entities"], f"risk {risk_id!r}.entities"):
            if value not in entity_values:
                raise PackValidationError(f"risk {risk_id!r}: unknown entity kind {value!r}")
            kind = entity_values[value]
            if kind in entities:
                raise PackValidationError(f"risk {risk_id!r}: duplicate entity {value!r}")
            entities.append(kind)
        if not entities:
            raise PackValidationError(f"risk {risk_id!r}: entity set is empty")

        stage_ids: list[str] = []
        for value in _expect_list(obj["stages"], f"risk {risk_id!r}.stages"):
            if value not in seen_stage_ids:
                raise PackValidationError(f"risk {risk_id!r}: references undeclared stage {value!r}")
            if value in stage_ids:
                raise PackValidationError(f"risk {risk_id!r}: duplicate stage {value!r}")
            stage_ids.append(value)
        if not stage_ids:
            raise PackValidationError(f"risk {risk_id!r}: stage set is empty")

        notes = obj.get("notes")
        if notes is not None:
            notes = _expect_str(notes, f"risk {risk_id!r}.notes")
        risks.append(
            RiskDefinition(
                id=risk_id,
                name=_expect_str(obj["name"], f"risk {risk_id!r}.name"),
                description=_expect_str(obj["description"], f"risk {risk_id!r}.description"),
                entities=tuple(entities),
                stages=tuple(stage_ids),
                source=_expect_str(obj["source"], f"risk {risk_id!r}.source"),
                notes=notes,
            )
        )

    canonical = _canonical_text(version, stages, roles, risks)
    content_hash = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    return TaxonomyPack(
        version=version,
        stages=tuple(stages),
        roles=tuple(roles),
        risks=tuple(risks),
        content_hash=content_hash,
    )


def _expect_list(value: Any, where: str) -> list:
    if not isinstance(value, list):
        raise PackValidationError(f"{where}: expected a list, got {type(value).__name__}")
    return value


# --- Serialization -----------------------------------------------------------


def _stage_dict(stage: Stage) -> dict:
    data: dict[str, Any] = {
        "id": stage.id,
        "display_name": stage.display_name,
        "description": stage.description,
    }
    if stage.entity is not None:
        data["entity"] = stage.entity.value
    return data


def _risk_dict(risk: RiskDefinition) -> dict:
    data: dict[str, Any] = {
        "id": risk.id,
        "name": risk.name,
        "description": risk.description,
        "entities": [kind.value for kind in risk.entities],
        "stages": list(risk.stages),
        "source": risk.source,
    }
    if risk.notes is not None:
        data["notes"] = risk.notes
    return data


def _canonical_text(version: str, stages: list[Stage], roles: list[Role], risks: list[RiskDefinition]) -> str:
    document = {
        "version": version,
        "stages": [_stage_dict(s) for s in stages],
        "roles": [{"id": r.id, "display_name": r.display_name, "description": r.description} for r in roles],
        "risks": [_risk_dict(r) for r in risks],
    }
    return json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def serialize(pack: TaxonomyPack) -> str:
    """Canonical text form: sorted keys, no insignificant whitespace, LF ending.

    ``load_pack(serialize(pack))`` reproduces the pack, including its hash.
    """
    return _canonical_text(pack.version, list(pack.stages), list(pack.roles), list(pack.risks))


# --- Queries -----------------------------------------------------------------


def risks_for_entity(pack: TaxonomyPack, entity: EntityKind) -> list[RiskDefinition]:
    """Risks whose entity set contains ``entity``, in pack declaration order."""
    return [risk for risk in pack.risks if entity in risk.entities]


def risks_for_stage(pack: TaxonomyPack, stage_id: str) -> list[RiskDefinition]:
    """Risks identifiable at ``stage_id``, in pack declaration order."""
    pack.stage(stage_id)  # raises UnknownStageError for undeclared ids
    return [risk for risk in pack.risks if stage_id in risk.stages]
