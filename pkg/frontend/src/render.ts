/**
 * Pure state -> HTML renderers. Keeping these free of DOM access makes
 * the whole visible surface testable in node; main.ts only wires the
 * strings into the page and attaches handlers by data attributes.
 */

import { renderSvg } from "./apg.js";
import type { ConsoleState } from "./viewmodel.js";
import { offeredLevels } from "./viewmodel.js";
import type { SessionStatus, Ticket } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderNotices(state: ConsoleState): string {
  const banner = state.connectionOk
    ? ""
    : `<div class="banner error">gateway unreachable, retrying in ${state.nextPollMs / 1000}s</div>`;
  const notices = state.notices
    .slice(-3)
    .map((n) => `<div class="notice ${n.level}">${escapeHtml(n.text)}</div>`)
    .join("");
  return banner + notices;
}

export function renderTicket(ticket: Ticket): string {
  const req = ticket.request;
  const argRows = Object.entries(req.args)
    .map(
      ([key, value]) =>
        `<tr><td>${escapeHtml(key)}</td><td><input data-arg="${escapeHtml(key)}" data-ticket="${ticket.escalation_id}" value="${escapeHtml(String(value))}"></td></tr>`,
    )
    .join("");
  const risks = ticket.risk_ids.map((r) => `<span class="risk">${escapeHtml(r)}</span>`).join(" ");
  return `
  <div class="ticket" data-ticket-id="${ticket.escalation_id}">
    <div class="ticket-head">
      <span class="action">${escapeHtml(req.tool)}.${escapeHtml(req.action)}</span>
      ${req.resource ? `<span class="resource">${escapeHtml(req.resource)}</span>` : ""}
      <span class="ticket-id">${ticket.escalation_id}</span>
    </div>
    <div class="rationale"><b>rationale</b> ${escapeHtml(ticket.rationale || "(none given)")}</div>
    <div class="impact"><b>projected impact</b> ${escapeHtml(ticket.projected_impact)}</div>
    <div class="risks"><b>risks</b> ${risks || "(none)"}</div>
    <details class="modify">
      <summary>arguments (editable for modify)</summary>
      <table>${argRows || "<tr><td colspan=2>(no arguments)</td></tr>"}</table>
    </details>
    <div class="verdicts">
      <button data-verdict="approve" data-ticket="${ticket.escalation_id}">approve</button>
      <button data-verdict="modify" data-ticket="${ticket.escalation_id}">modify</button>
      <button data-verdict="deny" data-ticket="${ticket.escalation_id}">deny</button>
    </div>
  </div>`;
}

export function renderQueue(state: ConsoleState): string {
  if (state.tickets.length === 0) {
    return `<div class="empty">no pending escalations</div>`;
  }
  return state.tickets.map(renderTicket).join("");
}

export function renderSession(session: SessionStatus): string {
  const controls = offeredLevels(session.level)
    .map(
      (level) =>
        `<button data-containment="${level}" data-session="${session.session_id}">${level === "monitor" ? "release to monitor" : level}</button>`,
    )
    .join("");
  const closed = session.closed_at !== null;
  const drift = session.last_drift_score === null ? "-" : session.last_drift_score.toFixed(3);
  return `
  <div class="session ${closed ? "closed" : ""}" data-session-id="${session.session_id}">
    <div class="session-head">
      <span class="badge level-${session.level}">${session.level}</span>
      <span class="sid">${escapeHtml(session.session_id)}</span>
      <span class="agent">${escapeHtml(session.agent_id)}</span>
      ${closed ? `<span class="badge terminal">closed</span>` : ""}
    </div>
    <div class="session-stats">
      allowed ${session.counts.allowed} / denied ${session.counts.denied} /
      escalated ${session.counts.escalated} / contained ${session.counts.contained}
      | drift ${drift} | mode ${escapeHtml(session.mode)}
    </div>
    <div class="session-controls">
      ${session.level === "kill" ? "<i>terminal</i>" : controls}
      <button data-apg="${session.session_id}">provenance graph</button>
    </div>
  </div>`;
}

export function renderSessions(state: ConsoleState): string {
  if (state.sessions.length === 0) return `<div class="empty">no sessions</div>`;
  return state.sessions.map(renderSession).join("");
}

export function renderLedgerPanel(state: ConsoleState): string {
  if (!state.ledger) return `<button data-verify-ledger>verify ledger</button>`;
  const report = state.ledger;
  const verdict = report.valid
    ? `<span class="ok">valid</span> (${report.records_checked} records)`
    : `<span class="bad">INVALID</span> at seq ${report.first_bad_seq}: ${escapeHtml(report.failure ?? "")}`;
  return `<button data-verify-ledger>re-verify</button> <span class="ledger-verdict">${verdict}</span>`;
}

export function renderApgPanel(state: ConsoleState): string {
  if (!state.selectedApg) return `<div class="empty">select a session to view its provenance graph</div>`;
  const graph = state.selectedApg;
  return `
  <div class="apg-head">${escapeHtml(graph.session_id)}: ${graph.nodes.length} nodes, ${graph.edges.length} edges</div>
  <div class="apg-canvas">${renderSvg(graph)}</div>`;
}

export function renderAll(state: ConsoleState): Record<string, string> {
  return {
    notices: renderNotices(state),
    queue: renderQueue(state),
    sessions: renderSessions(state),
    ledger: renderLedgerPanel(state),
    apg: renderApgPanel(state),
  };
}
