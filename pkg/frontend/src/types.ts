/** Wire types mirrored from the gateway's HTTP protocol. */

export type ContainmentLevel = "monitor" | "throttle" | "pause" | "isolate" | "kill";

export type TicketStatus = "pending" | "approved" | "modified" | "denied" | "expired";

export type Verdict = "approve" | "modify" | "deny";

export interface TicketRequest {
  tool: string;
  action: string;
  args: Record<string, unknown>;
  resource: string | null;
  intent: string;
}

export interface Ticket {
  escalation_id: string;
  session_id: string;
  request: TicketRequest;
  rationale: string;
  projected_impact: string;
  risk_ids: string[];
  status: TicketStatus;
  requested_at: number;
  decided_at: number | null;
  operator_id: string | null;
  modified_args: Record<string, unknown> | null;
}

export interface SessionStatus {
  session_id: string;
  agent_id: string;
  level: ContainmentLevel;
  mode: string;
  throttle_factor: number;
  counts: { allowed: number; denied: number; escalated: number; contained: number };
  last_drift_score: number | null;
  opened_at: number;
  closed_at: number | null;
  pending_escalations: number;
}

export interface DecisionResponse {
  decision: {
    escalation_id: string;
    verdict: string;
    operator_id: string | null;
    decided_at: number;
    modified_args: Record<string, unknown> | null;
  };
  resolution: { status: string; reason: string } | null;
}

export interface ContainmentRecord {
  session_id: string;
  level: ContainmentLevel;
  cause: string;
  source: string;
  halt_latency_ms: number;
  seq: number;
  applied_at: number;
}

export interface VerificationReport {
  valid: boolean;
  first_bad_seq: number | null;
  failure: string | null;
  records_checked: number;
}

export interface ApgNode {
  node_id: string;
  node_type: string;
  record_seq: number;
}

export interface ApgEdge {
  from: string;
  to: string;
  edge_type: string;
}

export interface ApgGraph {
  session_id: string;
  nodes: ApgNode[];
  edges: ApgEdge[];
}

export interface RuntimeConfig {
  baseUrl: string;
  bearerToken: string | null;
}
