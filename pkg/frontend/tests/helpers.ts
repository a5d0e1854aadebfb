import { readFileSync, readdirSync } from 'node:fs';
import { fileURLToPath } from 'node:url';
import { join } from 'node:path';

import type { ApiSessionView, ReportJson } from '../src/types.js';

export interface TranscriptStep {
  action: { type: string; question_id?: string; value?: string };
  view: ApiSessionView;
}

export interface Transcript {
  name: string;
  steps: TranscriptStep[];
  report: ReportJson;
}

const FIXTURES_DIR = fileURLToPath(new URL('../fixtures/transcripts', import.meta.url));

export function loadTranscripts(): Transcript[] {
  return readdirSync(FIXTURES_DIR)
    .filter((name) => name.endsWith('.json'))
    .sort()
    .map((name) => JSON.parse(readFileSync(join(FIXTURES_DIR, name), 'utf-8')) as Transcript);
}
