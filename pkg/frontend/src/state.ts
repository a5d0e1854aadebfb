// Session state: a mirror of the server's view plus local drafts.
//
// Drafts hold unsubmitted input only. Risk badges and eligibility always
// come from the last reconciled server view, so typing never changes a
// displayed status until the answer is submitted and the server responds.

import type { ApiError, ApiSessionView, QuestionView, RiskSummary } from './types.js';

export interface UiSessionState {
  view: ApiSessionView | null;
  drafts: Record<string, string>;
  lastError: ApiError | null;
}

export function initialState(): UiSessionState {
  return { view: null, drafts: {}, lastError: null };
}

export function reconcile(state: UiSessionState, view: ApiSessionView): UiSessionState {
  // The server view is authoritative; drop drafts for questions it now answers.
  const drafts: Record<string, string> = {};
  for (const [questionId, value] of Object.entries(state.drafts)) {
    if (!(questionId in view.answers)) {
      drafts[questionId] = value;
    }
  }
  return { view, drafts, lastError: null };
}

export function setDraft(state: UiSessionState, questionId: string, value: string): UiSessionState {
  return { ...state, drafts: { ...state.drafts, [questionId]: value } };
}

export function clearDraft(state: UiSessionState, questionId: string): UiSessionState {
  const drafts = { ...state.drafts };
  delete drafts[questionId];
  return { ...state, drafts };
}

export function setError(state: UiSessionState, error: ApiError): UiSessionState {
  return { ...state, lastError: error };
}

export function badgeStatuses(state: UiSessionState): RiskSummary[] {
  return state.view ? state.view.report_summary : [];
}

export function eligibleQuestions(view: ApiSessionView): QuestionView[] {
  return view.questionnaires.flatMap((questionnaire) => questionnaire.eligible_questions);
}

export function eligibleQuestionIds(view: ApiSessionView): string[] {
  return eligibleQuestions(view).map((question) => question.id);
}

export function isComplete(view: ApiSessionView): boolean {
  return view.questionnaires.every(
    (questionnaire) => questionnaire.completeness.eligible_unanswered.length === 0,
  );
}
