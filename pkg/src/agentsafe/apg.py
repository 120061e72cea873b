"""Action Provenance Graph: the typed DAG reconstructed from the ledger.

Node mapping (record kind -> node type):

    session-open  -> Prompt      goal         -> Goal
    plan          -> Plan        plan-step    -> Step
    tool-call-request -> ToolCall decision    -> Decision
    escalation-opened -> Escalation escalation-decided -> Decision
    containment   -> Containment observation  -> Observation
    session-close -> Outcome

Edge rules: Goal derives-from Prompt; Plan derives-from Goal; Step
derives-from Plan; ToolCall derives-from the most recent Step; ToolCall
authorized-by its final Decision (matched by request_id); Decision
triggered Escalation/Containment; Escalation decided-by the operator
Decision and triggered any post-resolution Decision; ToolCall produced
Observation; Outcome derives-from the final Observation.

A Prompt with no downstream semantic nodes is dropped (a session that
only opened and closed has an empty graph), and an Outcome only exists
when at least one Observation does.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownSession, UnsupportedFormat, UnverifiedLedger
from .ledger import Ledger, ProvenanceRecord, verify_chain

NODE_TYPES = (
    "Prompt",
    "Goal",
    "Plan",
    "Step",
    "ToolCall",
    "Decision",
    "Escalation",
    "Containment",
    "Observation",
    "Outcome",
)

EDGE_TYPES = ("derives-from", "authorized-by", "decided-by", "triggered", "produced")

_KIND_TO_TYPE = {
    "session-open": "Prompt",
    "goal": "Goal",
    "plan": "Plan",
    "plan-step": "Step",
    "tool-call-request": "ToolCall",
    "decision": "Decision",
    "escalation-opened": "Escalation",
    "escalation-decided": "Decision",
    "containment": "Containment",
    "observation": "Observation",
    "session-close": "Outcome",
}


@dataclass(frozen=True)
class ApgNode:
    node_id: str
    node_type: str
    record_seq: int


@dataclass(frozen=True)
class ApgEdge:
    src: str
    dst: str
    edge_type: str


@dataclass(frozen=True)
class ActionProvenanceGraph:
    session_id: str
    nodes: tuple[ApgNode, ...]
    edges: tuple[ApgEdge, ...]

    def nodes_of_type(self, node_type: str) -> list[ApgNode]:
        return [n for n in self.nodes if n.node_type == node_type]

    def out_edges(self, node_id: str, edge_type: str | None = None) -> list[ApgEdge]:
        return [e for e in self.edges if e.src == node_id and (edge_type is None or e.edge_type == edge_type)]

    def in_edges(self, node_id: str, edge_type: str | None = None) -> list[ApgEdge]:
        return [e for e in self.edges if e.dst == node_id and (edge_type is None or e.edge_type == edge_type)]

    def node(self, node_id: str) -> ApgNode:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)


def _node_id(seq: int) -> str:
    return f"n{seq:06d}"


def build_apg(ledger: Ledger | list[ProvenanceRecord], session_id: str, verified: bool = False) -> ActionProvenanceGraph:
    """Deterministic graph construction for one session's records.

    ``verified=True`` skips re-verification when the caller already holds
    a verified snapshot.
    """
    if isinstance(ledger, Ledger):
        if not verified and not verify_chain(ledger).valid:
            raise UnverifiedLedger("ledger chain does not verify")
        records = ledger.records()
    else:
        records = list(ledger)
    session_records = [r for r in records if r.session_id == session_id]
    if not session_records:
        raise UnknownSession(f"no records for session {session_id!r}")

    nodes: list[ApgNode] = []
    edges: list[ApgEdge] = []
    prompt_id: str | None = None
    last_goal: str | None = None
    last_plan: str | None = None
    last_step: str | None = None
    toolcall_by_request: dict[str, str] = {}
    final_decision_by_request: dict[str, tuple[str, dict]] = {}
    decision_node_by_seq: dict[int, str] = {}
    escalation_by_id: dict[str, str] = {}
    escalation_request: dict[str, str] = {}
    last_observation: str | None = None
    outcome_seq: int | None = None

    def add_node(record: ProvenanceRecord, node_type: str) -> str:
        nid = _node_id(record.seq)
        nodes.append(ApgNode(node_id=nid, node_type=node_type, record_seq=record.seq))
        return nid

    for record in session_records:
        node_type = _KIND_TO_TYPE.get(record.kind)
        if node_type is None:
            continue
        payload = record.payload_obj()
        if record.kind == "session-open":
            prompt_id = add_node(record, "Prompt")
        elif record.kind == "goal":
            nid = add_node(record, "Goal")
            if prompt_id is not None:
                edges.append(ApgEdge(nid, prompt_id, "derives-from"))
            last_goal = nid
        elif record.kind == "plan":
            nid = add_node(record, "Plan")
            if last_goal is not None:
                edges.append(ApgEdge(nid, last_goal, "derives-from"))
            last_plan = nid
        elif record.kind == "plan-step":
            nid = add_node(record, "Step")
            if last_plan is not None:
                edges.append(ApgEdge(nid, last_plan, "derives-from"))
            last_step = nid
        elif record.kind == "tool-call-request":
            nid = add_node(record, "ToolCall")
            if last_step is not None:
                edges.append(ApgEdge(nid, last_step, "derives-from"))
            request_id = payload.get("request_id", "")
            toolcall_by_request[request_id] = nid
        elif record.kind == "decision":
            nid = add_node(record, "Decision")
            decision_node_by_seq[record.seq] = nid
            request_id = payload.get("request_id")
            if request_id is not None:
                final_decision_by_request[request_id] = (nid, payload)
                escalation_id = payload.get("escalation_id")
                if escalation_id and escalation_id in escalation_by_id:
                    edges.append(ApgEdge(escalation_by_id[escalation_id], nid, "triggered"))
        elif record.kind == "escalation-opened":
            nid = add_node(record, "Escalation")
            escalation_id = payload.get("escalation_id", "")
            escalation_by_id[escalation_id] = nid
            request_id = payload.get("request_id", "")
            escalation_request[escalation_id] = request_id
            cause = final_decision_by_request.get(request_id)
            if cause is not None:
                edges.append(ApgEdge(cause[0], nid, "triggered"))
        elif record.kind == "escalation-decided":
            nid = add_node(record, "Decision")
            decision_node_by_seq[record.seq] = nid
            escalation_id = payload.get("escalation_id", "")
            if escalation_id in escalation_by_id:
                edges.append(ApgEdge(escalation_by_id[escalation_id], nid, "decided-by"))
        elif record.kind == "containment":
            nid = add_node(record, "Containment")
            cause_seq = payload.get("cause_seq")
            if isinstance(cause_seq, int) and cause_seq in decision_node_by_seq:
                edges.append(ApgEdge(decision_node_by_seq[cause_seq], nid, "triggered"))
        elif record.kind == "observation":
            nid = add_node(record, "Observation")
            request_id = payload.get("request_id", "")
            src = toolcall_by_request.get(request_id)
            if src is not None:
                edges.append(ApgEdge(src, nid, "produced"))
            last_observation = nid
        elif record.kind == "session-close":
            outcome_seq = record.seq

    for request_id, toolcall_id in toolcall_by_request.items():
        decision = final_decision_by_request.get(request_id)
        if decision is not None:
            edges.append(ApgEdge(toolcall_id, decision[0], "authorized-by"))

    if outcome_seq is not None and last_observation is not None:
        nid = _node_id(outcome_seq)
        nodes.append(ApgNode(node_id=nid, node_type="Outcome", record_seq=outcome_seq))
        edges.append(ApgEdge(nid, last_observation, "derives-from"))

    if len(nodes) == 1 and nodes[0].node_type == "Prompt":
        nodes = []
        edges = []

    nodes.sort(key=lambda n: n.node_id)
    edges.sort(key=lambda e: (e.src, e.dst, e.edge_type))
    graph = ActionProvenanceGraph(session_id=session_id, nodes=tuple(nodes), edges=tuple(edges))
    _assert_acyclic(graph)
    return graph


def _assert_acyclic(graph: ActionProvenanceGraph) -> None:
    adjacency: dict[str, list[str]] = {n.node_id: [] for n in graph.nodes}
    indegree = {n.node_id: 0 for n in graph.nodes}
    for e in graph.edges:
        adjacency[e.src].append(e.dst)
        indegree[e.dst] += 1
    queue = [nid for nid, deg in indegree.items() if deg == 0]
    seen = 0
    while queue:
        nid = queue.pop()
        seen += 1
        for nxt in adjacency[nid]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                queue.append(nxt)
    if seen != len(graph.nodes):
        raise ValueError("provenance graph contains a cycle")


def export_apg(graph: ActionProvenanceGraph, format: str) -> str:
    """Serialize deterministically; DOT loads in standard graph viewers."""
    if format == "json":
        from . import jsoncanon

        return jsoncanon.dumps(
            {
                "session_id": graph.session_id,
                "nodes": [
                    {"node_id": n.node_id, "node_type": n.node_type, "record_seq": n.record_seq}
                    for n in graph.nodes
                ],
                "edges": [{"from": e.src, "to": e.dst, "edge_type": e.edge_type} for e in graph.edges],
            }
        )
    if format == "dot":
        lines = ["digraph apg {"]
        for n in graph.nodes:
            lines.append(f'  {n.node_id} [label="{n.node_type}#{n.record_seq}"];')
        for e in graph.edges:
            lines.append(f'  {e.src} -> {e.dst} [label="{e.edge_type}"];')
        lines.append("}")
        return "\n".join(lines)
    raise UnsupportedFormat(f"unsupported APG export format {format!r}")
