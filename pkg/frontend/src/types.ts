// Shapes of the service's JSON responses. The UI never derives risk logic
// itself: everything displayed comes verbatim from these payloads.

export type QuestionKind = 'free-text' | 'boolean' | 'tri-state' | 'single-choice';

export interface QuestionView {
  id: string;
  prompt: string;
  guidance: string | null;
  kind: QuestionKind;
  options: string[];
  purpose: 'context' | 'evidence';
}

export interface CompletenessView {
  answered: string[];
  eligible_unanswered: string[];
  withheld: string[];
}

export interface QuestionnaireView {
  id: string;
  title: string;
  stage: string;
  role: string;
  completeness: CompletenessView;
  eligible_questions: QuestionView[];
}

export interface AnswerView {
  value: string;
  provenance: string;
  actor: string;
}

export interface RiskSummary {
  risk_id: string;
  name: string;
  status: string;
}

export interface ApiSessionView {
  session_id: string;
  use_title: string;
  pack_hash: string;
  questionnaires: QuestionnaireView[];
  answers: Record<string, AnswerView>;
  attached_profiles: { entity_kind: string; entity_id: string; profile_hash: string }[];
  report_summary: RiskSummary[];
}

export interface RuleAnswerJson {
  question_id: string;
  prompt: string;
  answer: string | null;
}

export interface RuleFiringJson {
  rule_id: string;
  condition: string;
  rationale: string;
  truth: string;
  answers: RuleAnswerJson[];
}

export interface RiskEntryJson {
  risk_id: string;
  name: string;
  status: string;
  entities: string[];
  stages: string[];
  fired_rules: RuleFiringJson[];
  explanation: string;
}

export interface DossierEntryJson {
  question_id: string;
  prompt: string;
  answer: string;
  provenance: string;
}

export interface ReportJson {
  session_id: string;
  use_title: string;
  pack_hash: string;
  generated_at: string;
  policy: { unknown_flags_default: boolean };
  risks: RiskEntryJson[];
  dossier: {
    use_title: string;
    entries: DossierEntryJson[];
    profiles: { entity_kind: string; entity_id: string; profile_hash: string; summary: string }[];
  };
}

export interface ApiError {
  code: string;
  message: string;
  detail?: unknown;
}
