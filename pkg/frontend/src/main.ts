// Browser bootstrap: wires the API client, state store, and renderers to
// the page. Badges refresh after each submitted answer, never per keystroke.

import { ApiClient, ApiRequestError } from './api.js';
import {
  badgeStatuses,
  initialState,
  reconcile,
  setDraft,
  setError,
  type UiSessionState,
} from './state.js';
import { renderBadges, renderError, renderQuestionnaire, renderReport } from './render.js';
import type { ApiSessionView } from './types.js';

const api = new ApiClient('');
let state: UiSessionState = initialState();

function element(id: string): HTMLElement {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing #${id}`);
  }
  return found;
}

function paint(): void {
  element('badges').innerHTML = renderBadges(badgeStatuses(state));
  element('form-root').innerHTML = renderQuestionnaire(state.view, state.drafts);
  element('error-root').innerHTML = state.lastError ? renderError(state.lastError) : '';
  wireForm();
}

function wireForm(): void {
  const root = element('form-root');
  root.querySelectorAll<HTMLElement>('[data-control]').forEach((control) => {
    control.addEventListener('input', () => {
      const questionId = control.getAttribute('data-control')!;
      const value = (control as HTMLInputElement | HTMLTextAreaElement | HTMLSelectElement).value;
      state = setDraft(state, questionId, value);
    });
  });
  root.querySelectorAll<HTMLElement>('[data-submit]').forEach((button) => {
    button.addEventListener('click', () => {
      const questionId = button.getAttribute('data-submit')!;
      void submitAnswer(questionId);
    });
  });
  root.querySelectorAll<HTMLElement>('[data-report-link]').forEach((link) => {
    link.addEventListener('click', (event) => {
      event.preventDefault();
      void showReport();
    });
  });
}

function selectedValue(questionId: string): string | undefined {
  if (questionId in state.drafts) {
    return state.drafts[questionId];
  }
  const checked = document.querySelector<HTMLInputElement>(`input[name="${questionId}"]:checked`);
  if (checked) {
    return checked.value;
  }
  const control = document.querySelector<HTMLTextAreaElement | HTMLSelectElement>(
    `[data-control="${questionId}"]`,
  );
  return control?.value || undefined;
}

async function submitAnswer(questionId: string): Promise<void> {
  if (!state.view) {
    return;
  }
  const value = selectedValue(questionId);
  if (value === undefined || value === '') {
    return;
  }
  try {
    const view = await api.submitAnswer(state.view.session_id, questionId, value);
    state = reconcile(state, view);
  } catch (error) {
    if (error instanceof ApiRequestError) {
      state = setError(state, error.error);
    } else {
      throw error;
    }
  }
  paint();
}

async function showReport(): Promise<void> {
  if (!state.view) {
    return;
  }
  const report = await api.getReport(state.view.session_id);
  element('form-root').innerHTML = renderReport(report);
}

async function bootstrap(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get('session');
  let view: ApiSessionView;
  if (sessionId) {
    view = await api.getSession(sessionId);
  } else {
    const title = params.get('use') ?? 'Untitled use';
    view = await api.createSession(title);
    params.set('session', view.session_id);
    window.history.replaceState(null, '', `?${params.toString()}`);
  }
  state = reconcile(state, view);
  element('use-title').textContent = view.use_title;
  paint();
}

void bootstrap();
