import { describe, expect, it } from "vitest";

import { layoutGraph, renderSvg } from "../src/apg.js";
import { renderQueue, renderSession, renderTicket } from "../src/render.js";
import type { ApgGraph, SessionStatus, Ticket } from "../src/types.js";
import type { ConsoleState } from "../src/viewmodel.js";

const TICKET: Ticket = {
  escalation_id: "esc-9",
  session_id: "s1",
  request: {
    tool: "treatment",
    action: "update",
    args: { dose: "10mg", route: "oral" },
    resource: null,
    intent: "reduce dosage after labs",
  },
  rationale: "reduce dosage after labs",
  projected_impact: "treatment plan changes need clinician approval; risks: Unsupervised Treatment Change",
  risk_ids: ["R-TREATMENT"],
  status: "pending",
  requested_at: 0,
  decided_at: null,
  operator_id: null,
  modified_args: null,
};

function state(partial: Partial<ConsoleState>): ConsoleState {
  return {
    operatorId: "op",
    tickets: [],
    sessions: [],
    selectedApg: null,
    ledger: null,
    connectionOk: true,
    nextPollMs: 1000,
    notices: [],
    ...partial,
  };
}

describe("ticket rendering", () => {
  it("shows action, rationale, projected impact, and risk names", () => {
    const html = renderTicket(TICKET);
    expect(html).toContain("treatment.update");
    expect(html).toContain("reduce dosage after labs");
    expect(html).toContain("clinician approval");
    expect(html).toContain("R-TREATMENT");
  });

  it("argument editor exposes exactly the original keys", () => {
    const html = renderTicket(TICKET);
    const keys = [...html.matchAll(/data-arg="([^"]+)"/g)].map((m) => m[1]);
    expect(keys.sort()).toEqual(["dose", "route"]);
  });

  it("offers approve, modify, and deny", () => {
    const html = renderTicket(TICKET);
    for (const verdict of ["approve", "modify", "deny"]) {
      expect(html).toContain(`data-verdict="${verdict}"`);
    }
  });

  it("escapes hostile text", () => {
    const hostile = { ...TICKET, rationale: `<script>alert(1)</script>` };
    expect(renderTicket(hostile)).not.toContain("<script>");
  });

  it("empty queue renders the empty state", () => {
    expect(renderQueue(state({}))).toContain("no pending escalations");
  });
});

describe("session rendering", () => {
  const base: SessionStatus = {
    session_id: "s1",
    agent_id: "agent",
    level: "monitor",
    mode: "normal",
    throttle_factor: 1,
    counts: { allowed: 3, denied: 1, escalated: 0, contained: 0 },
    last_drift_score: 0.42,
    opened_at: 0,
    closed_at: null,
    pending_escalations: 0,
  };

  it("shows the containment badge and counters", () => {
    const html = renderSession(base);
    expect(html).toContain("level-monitor");
    expect(html).toContain("allowed 3");
    expect(html).toContain("drift 0.420");
  });

  it("offers no downward moves except the pause release", () => {
    const paused = renderSession({ ...base, level: "pause" });
    expect(paused).toContain('data-containment="monitor"');
    expect(paused).not.toContain('data-containment="throttle"');
    const isolated = renderSession({ ...base, level: "isolate" });
    expect(isolated).not.toContain('data-containment="monitor"');
    expect(isolated).not.toContain('data-containment="pause"');
    expect(isolated).toContain('data-containment="kill"');
  });

  it("killed sessions show terminal state with no controls", () => {
    const html = renderSession({ ...base, level: "kill", closed_at: 99 });
    expect(html).toContain("terminal");
    expect(html).not.toContain("data-containment=");
  });
});

describe("apg layout", () => {
  const graph: ApgGraph = {
    session_id: "s1",
    nodes: [
      { node_id: "n000000", node_type: "Prompt", record_seq: 0 },
      { node_id: "n000001", node_type: "Goal", record_seq: 1 },
      { node_id: "n000002", node_type: "ToolCall", record_seq: 2 },
      { node_id: "n000003", node_type: "Decision", record_seq: 3 },
      { node_id: "n000004", node_type: "Observation", record_seq: 4 },
    ],
    edges: [
      { from: "n000001", to: "n000000", edge_type: "derives-from" },
      { from: "n000002", to: "n000003", edge_type: "authorized-by" },
      { from: "n000002", to: "n000004", edge_type: "produced" },
    ],
  };

  it("derives-from sources sit left of their derived nodes", () => {
    const layout = layoutGraph(graph);
    const byId = new Map(layout.nodes.map((n) => [n.nodeId, n]));
    expect(byId.get("n000000")!.x).toBeLessThan(byId.get("n000001")!.x);
    expect(byId.get("n000002")!.x).toBeLessThan(byId.get("n000004")!.x);
  });

  it("layout is deterministic", () => {
    expect(layoutGraph(graph)).toEqual(layoutGraph(graph));
  });

  it("renders one svg group per node and labels edges", () => {
    const svg = renderSvg(graph);
    expect([...svg.matchAll(/data-node-id=/g)]).toHaveLength(5);
    expect(svg).toContain("authorized-by");
    expect(svg).toContain("ToolCall#2");
  });
});
