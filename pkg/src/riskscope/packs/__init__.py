"""Bundled data packs and loaders.

The subset pack ships five risks across three lifecycle stages, the three
stage questionnaires, and the rule set tying them together. The engine is
pack-agnostic: any taxonomy can be dropped in using the same file formats.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from riskscope.engine import RiskRule, load_rules
from riskscope.questionnaire import QuestionnaireSet, load_questionnaires
from riskscope.taxonomy import TaxonomyPack, load_pack

PACK_FILE = "atlas-subset.json"
QUESTIONNAIRES_FILE = "atlas-subset.questionnaires.json"
RULES_FILE = "atlas-subset.rules.json"


def path(name: str) -> Path:
    return Path(str(resources.files(__package__) / name))


def pack_path() -> Path:
    return path(PACK_FILE)


def questionnaires_path() -> Path:
    return path(QUESTIONNAIRES_FILE)


def rules_path() -> Path:
    return path(RULES_FILE)


@dataclass(frozen=True)
class BundledData:
    pack: TaxonomyPack
    questionnaires: QuestionnaireSet
    rules: tuple[RiskRule, ...]


def load_bundled(
    pack_file: Path | None = None,
    questionnaires_file: Path | None = None,
    rules_file: Path | None = None,
) -> BundledData:
    """Load the bundled packs, or overrides following the same formats."""
    pack = load_pack(pack_file or pack_path())
    questionnaires = load_questionnaires(questionnaires_file or questionnaires_path(), pack)
    rules = load_rules(rules_file or rules_path(), pack, questionnaires)
    return BundledData(pack=pack, questionnaires=questionnaires, rules=rules)
