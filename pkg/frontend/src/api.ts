/**
 * Thin typed client over the gateway wire protocol.
 *
 * Error mapping matters here: HTTP 409 on a decision means another
 * operator (or the expiry sweep) won the race, so the caller must surface
 * a conflict, never pretend success.
 */

import type {
  ApgGraph,
  ContainmentLevel,
  ContainmentRecord,
  DecisionResponse,
  RuntimeConfig,
  SessionStatus,
  Ticket,
  VerificationReport,
  Verdict,
} from "./types.js";

export class GatewayError extends Error {
  constructor(
    public readonly status: number,
    public readonly kind: string,
    detail: string,
  ) {
    super(detail);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  constructor(
    private readonly config: RuntimeConfig,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.config.bearerToken) {
      headers["authorization"] = `Bearer ${this.config.bearerToken}`;
    }
    return headers;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.config.baseUrl}${path}`, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let kind = "HttpError";
      let detail = text;
      try {
        const parsed = JSON.parse(text);
        kind = parsed.error ?? kind;
        detail = parsed.detail ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new GatewayError(response.status, kind, detail);
    }
    return JSON.parse(text) as T;
  }

  listPendingTickets(): Promise<{ tickets: Ticket[] }> {
    return this.request("GET", "/v1/escalations?status=pending");
  }

  getTicket(escalationId: string): Promise<Ticket> {
    return this.request("GET", `/v1/escalations/${escalationId}`);
  }

  submitDecision(
    escalationId: string,
    verdict: Verdict,
    operatorId: string,
    modifiedArgs?: Record<string, unknown>,
  ): Promise<DecisionResponse> {
    return this.request("POST", `/v1/escalations/${escalationId}/decision`, {
      verdict,
      operator_id: operatorId,
      modified_args: modifiedArgs,
    });
  }

  listSessions(): Promise<{ sessions: SessionStatus[] }> {
    return this.request("GET", "/v1/sessions");
  }

  getSession(sessionId: string): Promise<SessionStatus> {
    return this.request("GET", `/v1/sessions/${sessionId}`);
  }

  applyContainment(sessionId: string, level: ContainmentLevel, cause: string): Promise<ContainmentRecord> {
    return this.request("POST", `/v1/sessions/${sessionId}/containment`, { level, cause });
  }

  verifyLedger(): Promise<VerificationReport> {
    return this.request("GET", "/v1/ledger/verify");
  }

  fetchApg(sessionId: string): Promise<ApgGraph> {
    return this.request("GET", `/v1/sessions/${sessionId}/apg?format=json`);
  }
}

export async function loadRuntimeConfig(fetchImpl: FetchLike = (u, i) => fetch(u, i)): Promise<RuntimeConfig> {
  try {
    const response = await fetchImpl("config.json");
    if (response.ok) {
      const raw = (await response.json()) as Partial<RuntimeConfig>;
      return { baseUrl: raw.baseUrl ?? "", bearerToken: raw.bearerToken ?? null };
    }
  } catch {
    /* fall through to same-origin default */
  }
  return { baseUrl: "", bearerToken: null };
}
