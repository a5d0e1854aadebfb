"""Use-based AI risk identification.

Stage- and role-specific questionnaires collect evidence and context about
a foundation-model use; expert conditions over the answers flag potential
risks with three-valued logic; per-entity profiles make an assessment
reusable across uses; reports give reviewers the flagged risks with their
rationale and a context dossier.
"""

__version__ = "0.1.0"
