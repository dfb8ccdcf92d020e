/** Thin fetch client for the session API plus the stage-polling loop. */

import type {
  MetricsResponse,
  RefinementActionPayload,
  SessionSummary,
  StudyConfigPayload,
  ThemeSetPayload,
} from './types';

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail?: unknown,
  ) {
    super(message);
  }
}

interface TranscriptPayload {
  id: string;
  title: string;
  turns: { speaker: string; text: string }[];
}

export class ApiClient {
  constructor(private baseUrl: string = '') {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers: body !== undefined ? { 'Content-Type': 'application/json' } : {},
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const data = await resp.json();
    if (!resp.ok) {
      throw new ApiError(
        resp.status,
        data.code ?? 'error',
        data.message ?? resp.statusText,
        data.detail,
      );
    }
    return data as T;
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.request('GET', '/api/sessions');
  }

  createSession(
    config: StudyConfigPayload,
    transcripts: TranscriptPayload[],
    sessionId?: string,
  ): Promise<SessionSummary> {
    return this.request('POST', '/api/sessions', {
      config,
      transcripts,
      session_id: sessionId,
    });
  }

  getSession(sid: string): Promise<SessionSummary> {
    return this.request('GET', `/api/sessions/${sid}`);
  }

  advance(sid: string): Promise<{ accepted: boolean }> {
    return this.request('POST', `/api/sessions/${sid}/advance`);
  }

  decision(
    sid: string,
    kind: string,
    payload?: unknown,
    note = '',
  ): Promise<SessionSummary> {
    return this.request('POST', `/api/sessions/${sid}/decision`, {
      kind,
      payload: payload ?? null,
      note,
    });
  }

  metrics(
    sid: string,
    reference: ThemeSetPayload,
    theta = 0.6,
    basis = 'first_sentence',
  ): Promise<MetricsResponse> {
    return this.request('POST', `/api/sessions/${sid}/metrics`, {
      reference,
      theta,
      basis,
    });
  }

  themes(sid: string, version: number): Promise<ThemeSetPayload> {
    return this.request('GET', `/api/sessions/${sid}/themes/${version}`);
  }

  actions(
    sid: string,
  ): Promise<{ iteration: number; actions: RefinementActionPayload[] }[]> {
    return this.request('GET', `/api/sessions/${sid}/actions`);
  }

  feedback(sid: string): Promise<{ iteration: number; feedback: unknown[] }[]> {
    return this.request('GET', `/api/sessions/${sid}/feedback`);
  }
}

/** Poll a session every `intervalMs` until its running stage finishes.
 * Resolves with the fresh summary; rejects if the stage recorded an error.
 */
export function pollUntilIdle(
  client: ApiClient,
  sid: string,
  intervalMs = 2000,
  timeoutMs = 10 * 60 * 1000,
): Promise<SessionSummary> {
  const deadline = Date.now() + timeoutMs;
  return new Promise((resolve, reject) => {
    const tick = async () => {
      try {
        const summary = await client.getSession(sid);
        if (!summary.running) {
          if (summary.last_error) {
            reject(new Error(summary.last_error));
          } else {
            resolve(summary);
          }
          return;
        }
        if (Date.now() > deadline) {
          reject(new Error(`stage still running after ${timeoutMs} ms`));
          return;
        }
        setTimeout(tick, intervalMs);
      } catch (err) {
        reject(err);
      }
    };
    tick();
  });
}
