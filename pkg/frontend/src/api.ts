/** Thin fetch client for the session service. */

import type { SessionSummary, TracePage } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let message = `HTTP ${resp.status}`;
    try {
      const body = (await resp.json()) as { error?: string };
      if (body.error) message = body.error;
    } catch {
      /* non-JSON error body: keep the status line */
    }
    throw new ApiError(resp.status, message);
  }
  return (await resp.json()) as T;
}

export interface SpecInput {
  method?: string;
  alpha?: number;
  transform?: string;
  a?: number;
  alpha_i?: number | null;
  x?: number;
  gamma_n?: number;
  boosting?: boolean;
  boost_delta?: number | null;
}

export class SessionApi {
  constructor(private readonly base: string) {}

  createSession(spec: SpecInput, requestToken?: string): Promise<SessionSummary> {
    const body: Record<string, unknown> = { spec };
    if (requestToken) body.request_token = requestToken;
    return request(`${this.base}/sessions`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return request(`${this.base}/sessions`);
  }

  submitEvidence(
    id: string,
    evidence: Record<string, unknown>,
  ): Promise<Record<string, unknown>> {
    return request(`${this.base}/sessions/${id}/evidence`, {
      method: "POST",
      body: JSON.stringify(evidence),
    });
  }

  decide(id: string, include: boolean): Promise<Record<string, unknown>> {
    return request(`${this.base}/sessions/${id}/decision`, {
      method: "POST",
      body: JSON.stringify({ include }),
    });
  }

  whatIf(id: string, subset: number[]): Promise<{ d: number }> {
    return request(`${this.base}/sessions/${id}/whatif`, {
      method: "POST",
      body: JSON.stringify({ subset }),
    });
  }

  trace(id: string, since = 0): Promise<TracePage> {
    return request(`${this.base}/sessions/${id}/trace?since=${since}`);
  }

  async exportCsv(id: string): Promise<string> {
    const resp = await fetch(`${this.base}/sessions/${id}/export.csv`);
    if (!resp.ok) throw new ApiError(resp.status, `HTTP ${resp.status}`);
    return resp.text();
  }
}
