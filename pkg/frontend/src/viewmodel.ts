/**
 * Console state machine. All governance state is re-fetched from the
 * gateway on every poll, so a refresh (or a second operator) can never
 * diverge from the server: the console displays, it does not own.
 *
 * Polling runs at most every POLL_INTERVAL_MS (1s) and backs off
 * exponentially while the gateway is unreachable.
 */

import { GatewayClient, GatewayError } from "./api.js";
import type {
  ApgGraph,
  ContainmentLevel,
  SessionStatus,
  Ticket,
  VerificationReport,
  Verdict,
} from "./types.js";

export const POLL_INTERVAL_MS = 1000;
const MAX_BACKOFF_MS = 8000;

export const LADDER: ContainmentLevel[] = ["monitor", "throttle", "pause", "isolate", "kill"];

export interface Notice {
  level: "info" | "error" | "conflict";
  text: string;
}

export interface ConsoleState {
  operatorId: string;
  tickets: Ticket[];
  sessions: SessionStatus[];
  selectedApg: ApgGraph | null;
  ledger: VerificationReport | null;
  connectionOk: boolean;
  nextPollMs: number;
  notices: Notice[];
}

/** Containment moves the console may offer: strictly upward, plus the
 * operator release pause -> monitor. Kill is terminal, so a killed
 * session offers nothing. */
export function offeredLevels(current: ContainmentLevel): ContainmentLevel[] {
  if (current === "kill") return [];
  const idx = LADDER.indexOf(current);
  const upward = LADDER.slice(idx + 1);
  return current === "pause" ? ["monitor", ...upward] : upward;
}

export function requiresConfirmation(level: ContainmentLevel): boolean {
  return level === "isolate" || level === "kill";
}

export function confirmationLabel(level: ContainmentLevel): string {
  return level === "kill"
    ? "Kill is NON-RECOVERABLE: the session is sealed and cannot be resumed. Proceed?"
    : "Isolate cuts the agent off from sensitive resources. Proceed?";
}

export class ConsoleViewModel {
  state: ConsoleState;

  constructor(
    private readonly client: GatewayClient,
    operatorId: string,
  ) {
    this.state = {
      operatorId,
      tickets: [],
      sessions: [],
      selectedApg: null,
      ledger: null,
      connectionOk: true,
      nextPollMs: POLL_INTERVAL_MS,
      notices: [],
    };
  }

  private notify(level: Notice["level"], text: string): void {
    this.state.notices = [...this.state.notices.slice(-4), { level, text }];
  }

  /** One poll round: pending tickets plus session snapshots. */
  async poll(): Promise<void> {
    try {
      const [pending, sessions] = await Promise.all([
        this.client.listPendingTickets(),
        this.client.listSessions(),
      ]);
      this.state.tickets = pending.tickets;
      this.state.sessions = sessions.sessions;
      if (!this.state.connectionOk) {
        this.notify("info", "gateway connection restored");
      }
      this.state.connectionOk = true;
      this.state.nextPollMs = POLL_INTERVAL_MS;
    } catch (err) {
      this.state.connectionOk = false;
      this.state.nextPollMs = Math.min(this.state.nextPollMs * 2, MAX_BACKOFF_MS);
      this.notify("error", `gateway unreachable: ${(err as Error).message}`);
    }
  }

  /**
   * Resolve a ticket. A 409 means the ticket reached a terminal state
   * elsewhere first; the conflict is surfaced and local state refreshed,
   * never silently swallowed.
   */
  async submitDecision(
    escalationId: string,
    verdict: Verdict,
    modifiedArgs?: Record<string, unknown>,
  ): Promise<boolean> {
    try {
      const response = await this.client.submitDecision(
        escalationId,
        verdict,
        this.state.operatorId,
        modifiedArgs,
      );
      this.state.tickets = this.state.tickets.filter((t) => t.escalation_id !== escalationId);
      const resolution = response.resolution ? ` -> ${response.resolution.status}` : "";
      this.notify("info", `${verdict} ${escalationId}${resolution}`);
      return true;
    } catch (err) {
      if (err instanceof GatewayError && err.isConflict) {
        this.notify("conflict", `ticket ${escalationId} was already decided elsewhere`);
        await this.poll();
        return false;
      }
      this.notify("error", `decision failed: ${(err as Error).message}`);
      return false;
    }
  }

  async applyContainment(sessionId: string, level: ContainmentLevel, cause: string): Promise<boolean> {
    try {
      await this.client.applyContainment(sessionId, level, cause);
      const session = await this.client.getSession(sessionId);
      this.state.sessions = this.state.sessions.map((s) =>
        s.session_id === sessionId ? session : s,
      );
      this.notify("info", `${sessionId} -> ${level}`);
      return true;
    } catch (err) {
      if (err instanceof GatewayError && err.isConflict) {
        this.notify("conflict", `containment race on ${sessionId}: ${(err as Error).message}`);
        await this.poll();
        return false;
      }
      this.notify("error", `containment failed: ${(err as Error).message}`);
      return false;
    }
  }

  async selectApg(sessionId: string): Promise<void> {
    try {
      this.state.selectedApg = await this.client.fetchApg(sessionId);
    } catch (err) {
      this.state.selectedApg = null;
      this.notify("error", `provenance graph unavailable: ${(err as Error).message}`);
    }
  }

  async refreshLedger(): Promise<void> {
    try {
      this.state.ledger = await this.client.verifyLedger();
    } catch (err) {
      this.notify("error", `ledger verification failed: ${(err as Error).message}`);
    }
  }
}
