import type { ApiError, ApiSessionView, ReportJson } from './types.js';

export class ApiRequestError extends Error {
  constructor(public readonly error: ApiError, public readonly status: number) {
    super(error.message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`, {
      headers: { 'content-type': 'application/json' },
      ...init,
    });
    const body = await response.json();
    if (!response.ok) {
      const error: ApiError =
        body && typeof body.code === 'string'
          ? body
          : { code: 'unexpected-error', message: `request failed with status ${response.status}` };
      throw new ApiRequestError(error, response.status);
    }
    return body as T;
  }

  getPacks(): Promise<unknown> {
    return this.request('/packs');
  }

  createSession(useTitle: string): Promise<ApiSessionView> {
    return this.request('/sessions', { method: 'POST', body: JSON.stringify({ use_title: useTitle }) });
  }

  getSession(sessionId: string): Promise<ApiSessionView> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  submitAnswer(sessionId: string, questionId: string, value: string): Promise<ApiSessionView> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/answers`, {
      method: 'POST',
      body: JSON.stringify({ question_id: questionId, value }),
    });
  }

  attachProfile(sessionId: string, entityKind: string, entityId: string): Promise<ApiSessionView> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/profiles`, {
      method: 'POST',
      body: JSON.stringify({ entity_kind: entityKind, entity_id: entityId }),
    });
  }

  getReport(sessionId: string): Promise<ReportJson> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/report?format=json`);
  }
}
