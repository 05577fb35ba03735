// Session client: polls the API for the pending query and submits choices.
// The server is the source of truth; refreshing mid-session just re-polls.

import type { Choice, QueryDTO, SessionState } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type ClientPhase =
  | "idle"
  | "waiting" // 202 from /query: server is optimizing or finishing
  | "query_ready"
  | "submitting"
  | "complete"
  | "error";

export class SessionClient {
  phase: ClientPhase = "idle";
  query: QueryDTO | null = null;
  state: SessionState | null = null;
  lastError: string | null = null;

  constructor(
    private baseUrl: string,
    public sessionId: string,
    private fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  static async create(
    baseUrl: string,
    nQueries: number,
    seed: number,
    fetchFn: FetchLike = (u, i) => fetch(u, i),
  ): Promise<SessionClient> {
    const res = await fetchFn(`${baseUrl}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ n_queries: nQueries, seed }),
    });
    if (!res.ok) throw new Error(`session create failed: ${res.status}`);
    const body = await res.json();
    return new SessionClient(baseUrl, body.session_id, fetchFn);
  }

  async refreshState(): Promise<SessionState> {
    const res = await this.fetchFn(
      `${this.baseUrl}/sessions/${this.sessionId}/state`,
    );
    if (!res.ok) throw new Error(`state failed: ${res.status}`);
    this.state = (await res.json()) as SessionState;
    if (this.state.phase === "complete") this.phase = "complete";
    return this.state;
  }

  /** One poll step; returns the query when one is pending. */
  async pollQuery(): Promise<QueryDTO | null> {
    let res: Response;
    try {
      res = await this.fetchFn(`${this.baseUrl}/sessions/${this.sessionId}/query`);
    } catch (e) {
      this.phase = "error";
      this.lastError = String(e);
      return null;
    }
    if (res.status === 202) {
      const body = await res.json();
      this.phase = body.status === "complete" ? "complete" : "waiting";
      return null;
    }
    if (!res.ok) {
      this.phase = "error";
      this.lastError = `query failed: ${res.status}`;
      return null;
    }
    this.query = (await res.json()) as QueryDTO;
    this.phase = "query_ready";
    return this.query;
  }

  /** Poll until a query is pending or the session completes. */
  async waitForQuery(intervalMs = 1000, maxPolls = 600): Promise<QueryDTO | null> {
    for (let i = 0; i < maxPolls; i++) {
      const q = await this.pollQuery();
      if (q !== null) return q;
      if (this.phase === "complete" || this.phase === "error") return null;
      await new Promise((r) => setTimeout(r, intervalMs));
    }
    this.phase = "error";
    this.lastError = "timed out waiting for a query";
    return null;
  }

  /** Submit the choice for the current query. A second submission of the
   * same query is rejected by the server (409) and treated as a no-op so a
   * double click cannot create two records. */
  async submitChoice(choice: Choice): Promise<boolean> {
    if (this.query === null || this.phase !== "query_ready") return false;
    this.phase = "submitting";
    const res = await this.fetchFn(
      `${this.baseUrl}/sessions/${this.sessionId}/response`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ query_id: this.query.query_id, choice }),
      },
    );
    if (res.ok || res.status === 409) {
      this.query = null;
      this.phase = "waiting";
      return res.ok;
    }
    this.phase = "error";
    this.lastError = `submit failed: ${res.status}`;
    return false;
  }
}
