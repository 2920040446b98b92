/** Typed client for the rating-collection HTTP API.
 *
 * Every non-2xx response becomes an ApiError carrying the status code and
 * the server's `detail` string verbatim, so screens can show the server's
 * reason without rephrasing it. Transport failures (fetch rejecting)
 * propagate as-is for the caller's retry affordance.
 */

import type {
  CreatedSession,
  NextItem,
  RankingSubmission,
  RatingScale,
  RatingSubmission,
  SessionDescriptor,
  SessionExport,
  Stage,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export interface CreateSessionRequest {
  roster: { participant_id: string; groups: string[]; facilitator?: boolean }[];
  point_ids: string[];
  seed?: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(
    method: string,
    path: string,
    opts: { token?: string; body?: unknown } = {},
  ): Promise<Response> {
    const headers: Record<string, string> = {};
    if (opts.token !== undefined) headers["X-Session-Token"] = opts.token;
    let body: string | undefined;
    if (opts.body !== undefined) {
      headers["Content-Type"] = "application/json";
      body = JSON.stringify(opts.body);
    }
    const response = await this.fetchFn(this.baseUrl + path, { method, headers, body });
    if (!response.ok) {
      let detail = response.statusText || `request failed with status ${response.status}`;
      try {
        const parsed = (await response.json()) as { detail?: unknown };
        if (typeof parsed.detail === "string") detail = parsed.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  async createSession(body: CreateSessionRequest): Promise<CreatedSession> {
    const response = await this.request("POST", "/sessions", { body });
    return (await response.json()) as CreatedSession;
  }

  async descriptor(sessionId: string, token: string): Promise<SessionDescriptor> {
    const response = await this.request("GET", `/sessions/${sessionId}`, { token });
    return (await response.json()) as SessionDescriptor;
  }

  /** The participant's next unrated item, or null when the stage is exhausted. */
  async nextItem(sessionId: string, token: string, participantId: string): Promise<NextItem | null> {
    const query = new URLSearchParams({ participant_id: participantId });
    const response = await this.request("GET", `/sessions/${sessionId}/next?${query}`, { token });
    if (response.status === 204) return null;
    return (await response.json()) as NextItem;
  }

  async submitRating(sessionId: string, token: string, body: RatingSubmission): Promise<void> {
    await this.request("POST", `/sessions/${sessionId}/ratings`, { token, body });
  }

  async submitRanking(sessionId: string, token: string, body: RankingSubmission): Promise<void> {
    await this.request("POST", `/sessions/${sessionId}/rankings`, { token, body });
  }

  async advance(sessionId: string, token: string): Promise<Stage> {
    const response = await this.request("POST", `/sessions/${sessionId}/advance`, { token });
    const parsed = (await response.json()) as { stage: Stage };
    return parsed.stage;
  }

  async exportSession(sessionId: string, token: string): Promise<SessionExport> {
    const response = await this.request("GET", `/sessions/${sessionId}/export`, { token });
    return (await response.json()) as SessionExport;
  }

  async scale(): Promise<RatingScale> {
    const response = await this.request("GET", "/scale");
    return (await response.json()) as RatingScale;
  }
}
