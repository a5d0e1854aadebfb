// HTML rendering. Pure functions from server payloads to markup strings;
// the tests replay recorded API transcripts through these and compare the
// rendered question set against the server's eligible set.

import type { ApiError, ApiSessionView, QuestionView, ReportJson, RiskSummary } from './types.js';
import { eligibleQuestions, isComplete } from './state.js';

export const UNKNOWN_VALUE = 'unknown';
export const UNKNOWN_OPTION_LABEL = 'Not found in the documentation.';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function isWellFormed(view: ApiSessionView | null | undefined): view is ApiSessionView {
  return (
    !!view &&
    typeof view.session_id === 'string' &&
    Array.isArray(view.questionnaires) &&
    Array.isArray(view.report_summary)
  );
}

export function renderBadges(summary: RiskSummary[]): string {
  const badges = summary
    .map(
      (risk) =>
        `<span class="badge status-${escapeHtml(risk.status)}" data-risk-id="${escapeHtml(risk.risk_id)}" ` +
        `data-status="${escapeHtml(risk.status)}">${escapeHtml(risk.name)}: ${escapeHtml(risk.status)}</span>`,
    )
    .join('\n');
  return `<div class="badges">\n${badges}\n</div>`;
}

function renderControl(question: QuestionView, draft: string | undefined): string {
  const name = escapeHtml(question.id);
  const value = draft ?? '';
  switch (question.kind) {
    case 'free-text':
      return `<textarea name="${name}" data-control="${name}" rows="3">${escapeHtml(value)}</textarea>`;
    case 'boolean':
      return renderRadios(name, ['yes', 'no'], value);
    case 'tri-state':
      return renderRadios(name, ['yes', 'no', UNKNOWN_VALUE], value);
    case 'single-choice': {
      const options = question.options
        .map(
          (option) =>
            `<option value="${escapeHtml(option)}"${option === value ? ' selected' : ''}>${escapeHtml(option)}</option>`,
        )
        .join('');
      return `<select name="${name}" data-control="${name}"><option value=""></option>${options}</select>`;
    }
  }
}

function renderRadios(name: string, values: string[], current: string): string {
  return values
    .map((option) => {
      const label = option === UNKNOWN_VALUE ? UNKNOWN_OPTION_LABEL : option;
      const checked = option === current ? ' checked' : '';
      return (
        `<label><input type="radio" name="${name}" data-control="${name}" ` +
        `value="${escapeHtml(option)}"${checked}> ${escapeHtml(label)}</label>`
      );
    })
    .join('\n');
}

function renderQuestion(question: QuestionView, draft: string | undefined): string {
  const guidance = question.guidance
    ? `<details class="guidance"><summary>More about this question</summary><p>${escapeHtml(
        question.guidance,
      )}</p></details>`
    : '';
  return [
    `<fieldset class="question" data-question-id="${escapeHtml(question.id)}">`,
    `<legend>${escapeHtml(question.id)}. ${escapeHtml(question.prompt)}</legend>`,
    guidance,
    renderControl(question, draft),
    `<button type="button" data-submit="${escapeHtml(question.id)}">Save answer</button>`,
    `</fieldset>`,
  ]
    .filter(Boolean)
    .join('\n');
}

export function renderQuestionnaire(
  view: ApiSessionView | null | undefined,
  drafts: Record<string, string> = {},
): string {
  if (!isWellFormed(view)) {
    return '';
  }
  if (isComplete(view) && eligibleQuestions(view).length === 0) {
    return [
      `<section class="complete">`,
      `<p>All questionnaires are complete.</p>`,
      `<a href="#report" data-report-link="${escapeHtml(view.session_id)}">View the potential risk report</a>`,
      `</section>`,
    ].join('\n');
  }
  const sections = view.questionnaires
    .filter((questionnaire) => questionnaire.eligible_questions.length > 0)
    .map((questionnaire) => {
      const questions = questionnaire.eligible_questions
        .map((question) => renderQuestion(question, drafts[question.id]))
        .join('\n');
      return [
        `<section class="questionnaire" data-questionnaire-id="${escapeHtml(questionnaire.id)}">`,
        `<h2>${escapeHtml(questionnaire.title)}</h2>`,
        `<p class="stage-role">Stage: ${escapeHtml(questionnaire.stage)} &middot; Role: ${escapeHtml(
          questionnaire.role,
        )}</p>`,
        questions,
        `</section>`,
      ].join('\n');
    });
  return sections.join('\n');
}

export function renderError(error: ApiError): string {
  const detail = error.detail === undefined ? '' : `<pre>${escapeHtml(JSON.stringify(error.detail))}</pre>`;
  return (
    `<div class="error-banner" data-error-code="${escapeHtml(error.code)}">` +
    `<strong>${escapeHtml(error.code)}</strong>: ${escapeHtml(error.message)}${detail}</div>`
  );
}

export function renderReport(report: ReportJson): string {
  const rows = report.risks
    .map(
      (risk) =>
        `<tr data-risk-id="${escapeHtml(risk.risk_id)}"><td>${escapeHtml(risk.name)}</td>` +
        `<td><span class="badge status-${escapeHtml(risk.status)}" data-status="${escapeHtml(
          risk.status,
        )}">${escapeHtml(risk.status)}</span></td>` +
        `<td>${escapeHtml(risk.entities.join(', '))}</td>` +
        `<td>${escapeHtml(risk.stages.join(', '))}</td></tr>`,
    )
    .join('\n');

  const rationale = report.risks
    .map(
      (risk) =>
        `<details class="rationale" data-risk-id="${escapeHtml(risk.risk_id)}">` +
        `<summary>${escapeHtml(risk.name)} &mdash; ${escapeHtml(risk.status)}</summary>` +
        `<pre>${escapeHtml(risk.explanation)}</pre></details>`,
    )
    .join('\n');

  const dossierEntries = report.dossier.entries
    .map((entry) => {
      const reused = entry.provenance === 'reused' ? ' <em class="provenance" data-provenance="reused">(reused)</em>' : '';
      return (
        `<li data-question-id="${escapeHtml(entry.question_id)}"><strong>${escapeHtml(
          entry.question_id,
        )}. ${escapeHtml(entry.prompt)}</strong>${reused}<br>${escapeHtml(entry.answer)}</li>`
      );
    })
    .join('\n');

  const profiles = report.dossier.profiles
    .map((profile) => `<li data-profile-hash="${escapeHtml(profile.profile_hash)}">${escapeHtml(profile.summary)}</li>`)
    .join('\n');

  const allIndeterminate =
    report.risks.length > 0 && report.risks.every((risk) => risk.status.startsWith('indeterminate'));
  const banner = allIndeterminate
    ? `<div class="notice" data-notice="incomplete">No risk could be decided yet; complete the questionnaires to firm up the report.</div>`
    : '';

  return [
    `<article class="report" data-session-id="${escapeHtml(report.session_id)}">`,
    `<h1>Potential risk report: ${escapeHtml(report.use_title)}</h1>`,
    banner,
    `<table class="summary"><thead><tr><th>Risk</th><th>Status</th><th>Entities</th><th>Stages</th></tr></thead>`,
    `<tbody>${rows}</tbody></table>`,
    `<h2>Why</h2>`,
    rationale,
    `<h2>Context dossier</h2>`,
    `<ul class="dossier">${dossierEntries}</ul>`,
    profiles ? `<h3>Attached profiles</h3><ul class="profiles">${profiles}</ul>` : '',
    `</article>`,
  ]
    .filter(Boolean)
    .join('\n');
}

export function renderedQuestionIds(html: string): string[] {
  const ids: string[] = [];
  const pattern = /data-question-id="([^"]+)"/g;
  let match: RegExpExecArray | null;
  while ((match = pattern.exec(html)) !== null) {
    ids.push(match[1]);
  }
  return ids;
}

export function renderedBadgeStatuses(html: string): string[] {
  const statuses: string[] = [];
  const pattern = /data-status="([^"]+)"/g;
  let match: RegExpExecArray | null;
  while ((match = pattern.exec(html)) !== null) {
    statuses.push(match[1]);
  }
  return statuses;
}
