/** Typed client over the placement-service HTTP API.
 *
 * The console never mutates state except through the decisions endpoint;
 * every state change waits for the server acknowledgment (placements are
 * irrevocable, so optimistic UI is off by design).
 */

import type {
  SessionEvent,
  SessionMetrics,
  StateSnapshot,
  SuggestionPayload,
  Verdict,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ConflictError extends ApiError {}

async function asJson(res: Response): Promise<any> {
  const body = await res.text();
  let detail = body;
  try {
    detail = JSON.parse(body).detail ?? body;
  } catch {
    /* plain text */
  }
  if (!res.ok) {
    if (res.status === 409) throw new ConflictError(res.status, String(detail));
    throw new ApiError(res.status, String(detail));
  }
  return JSON.parse(body);
}

export interface DecisionRequest {
  suggestion_id: string;
  verdict: Verdict;
  reason?: string;
  reason_text?: string;
  placement?: { row: string; groups: Record<string, number> };
}

export class PlacementClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async post(path: string, body: unknown): Promise<any> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson(res);
  }

  private async get(path: string): Promise<any> {
    return asJson(await this.fetchImpl(`${this.baseUrl}${path}`));
  }

  async reasons(): Promise<string[]> {
    return (await this.get("/reasons")).reasons;
  }

  async createSession(
    topology: "simulated" | object = "simulated",
    config: object = {},
    idempotencyKey?: string,
  ): Promise<string> {
    const doc = await this.post("/sessions", {
      topology,
      config,
      idempotency_key: idempotencyKey,
    });
    return doc.id;
  }

  async submitBatch(
    sessionId: string,
    requests: { id?: string; racks: number; power: number; cooling?: number }[],
  ): Promise<SuggestionPayload[]> {
    const doc = await this.post(`/sessions/${sessionId}/batches`, { requests });
    return doc.suggestions;
  }

  async suggestions(sessionId: string): Promise<SuggestionPayload[]> {
    return (await this.get(`/sessions/${sessionId}/suggestions`)).suggestions;
  }

  async decide(sessionId: string, decision: DecisionRequest): Promise<StateSnapshot> {
    const doc = await this.post(`/sessions/${sessionId}/decisions`, decision);
    return doc.state;
  }

  async state(sessionId: string): Promise<StateSnapshot> {
    return this.get(`/sessions/${sessionId}/state`);
  }

  async metrics(sessionId: string): Promise<SessionMetrics> {
    return this.get(`/sessions/${sessionId}/metrics`);
  }

  /** One-shot read of the event stream (server closes unless follow=true). */
  async events(sessionId: string, fromSeq = 0): Promise<SessionEvent[]> {
    const res = await this.fetchImpl(
      `${this.baseUrl}/sessions/${sessionId}/events?from_seq=${fromSeq}`,
    );
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return parseSse(await res.text());
  }
}

/** Parses a text/event-stream body into session events. */
export function parseSse(text: string): SessionEvent[] {
  const events: SessionEvent[] = [];
  for (const chunk of text.split("\n\n")) {
    for (const line of chunk.split("\n")) {
      if (line.startsWith("data: ")) {
        events.push(JSON.parse(line.slice(6)) as SessionEvent);
      }
    }
  }
  return events;
}
