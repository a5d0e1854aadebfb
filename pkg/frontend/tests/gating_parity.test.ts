// Replaying recorded API transcripts, the set of questions the UI renders
// must equal the server's eligible set at every step, and withheld
// questions must never appear.

import { describe, expect, it } from 'vitest';

import { renderQuestionnaire, renderedQuestionIds } from '../src/render.js';
import { eligibleQuestionIds } from '../src/state.js';
import { loadTranscripts } from './helpers.js';

const transcripts = loadTranscripts();

describe('gating parity across recorded transcripts', () => {
  it('has the expected number of recorded transcripts', () => {
    expect(transcripts.length).toBe(20);
  });

  for (const transcript of transcripts) {
    it(`renders exactly the eligible set at every step of ${transcript.name}`, () => {
      for (const step of transcript.steps) {
        const html = renderQuestionnaire(step.view, {});
        const rendered = renderedQuestionIds(html).sort();
        const eligible = [...eligibleQuestionIds(step.view)].sort();
        expect(rendered).toEqual(eligible);

        const withheld = step.view.questionnaires.flatMap(
          (questionnaire) => questionnaire.completeness.withheld,
        );
        for (const questionId of withheld) {
          expect(rendered).not.toContain(questionId);
          expect(html).not.toContain(`data-question-id="${questionId}"`);
        }
      }
    });
  }
});
