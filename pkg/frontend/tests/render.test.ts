import { describe, expect, it } from 'vitest';

import {
  UNKNOWN_OPTION_LABEL,
  renderError,
  renderQuestionnaire,
  renderReport,
} from '../src/render.js';
import type { ApiSessionView } from '../src/types.js';
import { loadTranscripts } from './helpers.js';

const transcripts = loadTranscripts();
const tourist = transcripts.find((t) => t.name === 'tourist-center')!;
const attach = transcripts.find((t) => t.name === 'attach-model-profile')!;

describe('questionnaire rendering', () => {
  it('renders nothing for malformed views', () => {
    expect(renderQuestionnaire(null)).toBe('');
    expect(renderQuestionnaire(undefined)).toBe('');
    expect(renderQuestionnaire({} as ApiSessionView)).toBe('');
  });

  it('shows guidance as expandable help', () => {
    const view = tourist.steps[0].view;
    const html = renderQuestionnaire(view);
    const a8Guidance = 'If malicious users outside the company can supply inputs';
    // A8 is withheld at step 0, so its guidance is absent
    expect(html).not.toContain(a8Guidance);
    const a7 = view.questionnaires[0].eligible_questions.find((q) => q.id === 'A7')!;
    expect(html).toContain('<details class="guidance">');
    expect(html).toContain(a7.guidance!.slice(0, 40));
  });

  it('gated question appears with its guidance once unlocked', () => {
    const afterA7 = tourist.steps.find((step) => step.action.question_id === 'A7')!;
    const html = renderQuestionnaire(afterA7.view);
    expect(html).toContain('data-question-id="A8"');
    expect(html).toContain('If malicious users outside the company can supply inputs');
  });

  it('tri-state controls offer the unknown marker with its display label', () => {
    const view = tourist.steps[0].view;
    const withB1 = {
      ...view,
      questionnaires: view.questionnaires.filter((q) => q.id === 'model-onboarding'),
    };
    const html = renderQuestionnaire(withB1);
    expect(html).toContain('value="unknown"');
    expect(html).toContain(UNKNOWN_OPTION_LABEL);
  });

  it('drafts prefill controls without touching the view', () => {
    const view = tourist.steps[0].view;
    const html = renderQuestionnaire(view, { A1: 'draft text' });
    expect(html).toContain('draft text');
  });

  it('completed session is replaced by a report link', () => {
    const finished = transcripts.find(
      (t) =>
        t.steps[t.steps.length - 1].view.questionnaires.every(
          (qn) => qn.completeness.eligible_unanswered.length === 0,
        ),
    )!;
    expect(finished).toBeDefined();
    const html = renderQuestionnaire(finished.steps[finished.steps.length - 1].view);
    expect(html).toContain('data-report-link');
    expect(html).not.toContain('data-question-id');
  });
});

describe('error rendering', () => {
  it('surfaces API errors verbatim with their code', () => {
    const html = renderError({
      code: 'ineligible-question',
      message: "question 'A8' is not eligible: its gate (A7 == yes) is not satisfied",
    });
    expect(html).toContain('data-error-code="ineligible-question"');
    expect(html).toContain('ineligible-question');
    expect(html).toContain('is not eligible');
  });
});

describe('report rendering', () => {
  it('summary table lists every risk with entities and stages', () => {
    const html = renderReport(tourist.report);
    for (const risk of tourist.report.risks) {
      expect(html).toContain(`data-risk-id="${risk.risk_id}"`);
      expect(html).toContain(risk.entities.join(', '));
    }
    expect(html).toContain('<table class="summary">');
  });

  it('per-risk rationale is expandable and verbatim', () => {
    const html = renderReport(tourist.report);
    for (const risk of tourist.report.risks) {
      expect(html).toContain(`<details class="rationale" data-risk-id="${risk.risk_id}">`);
    }
    expect(html).toContain('If a malicious user can prompt the model');
  });

  it('dossier lists context answers and marks reused ones', () => {
    const html = renderReport(attach.report);
    expect(html).toContain('<ul class="dossier">');
    expect(renderReport(tourist.report)).toContain('Please describe the problem you are solving with AI.');
    // the attached model profile appears in the profiles section
    expect(html).toContain('Attached profiles');
    expect(html).toContain('granite-3.1');
  });

  it('reused provenance is tagged when profile answers reach the dossier', () => {
    const reused = transcripts
      .flatMap((t) => t.report.dossier.entries)
      .filter((entry) => entry.provenance === 'reused');
    // at least render the marker for any reused entry in any fixture
    for (const transcript of transcripts) {
      const html = renderReport(transcript.report);
      for (const entry of transcript.report.dossier.entries) {
        if (entry.provenance === 'reused') {
          expect(html).toContain('data-provenance="reused"');
        }
      }
    }
    expect(Array.isArray(reused)).toBe(true);
  });

  it('an all-indeterminate report shows the completion banner', () => {
    const empty = transcripts.find((t) => t.name === 'empty-session')!;
    const html = renderReport(empty.report);
    expect(html).toContain('data-notice="incomplete"');
  });
});
