from __future__ import annotations

import json
from pathlib import Path

import pytest

from agentsafe.apg import build_apg, export_apg
from agentsafe.errors import UnknownSession, UnsupportedFormat, UnverifiedLedger
from agentsafe.gateway import ToolCallRequest
from agentsafe.ledger import ProvenanceRecord
from agentsafe.telemetry import SemanticEvent

GOLDEN = Path(__file__).parent / "data" / "golden_apg.json"


def _event(gateway, session, kind, phase, text):
    return SemanticEvent(
        event_id=f"e-{kind}-{text[:4]}",
        session_id=session.session_id,
        phase=phase,
        kind=kind,
        text=text,
        ts=gateway.clock.now_ms(),
    )


def _call(gateway, session, tool="ehr", action="read", resource="patient/123", intent=""):
    return gateway.authorize_tool_call(
        session,
        ToolCallRequest(
            session_id=session.session_id, tool=tool, action=action, resource=resource, intent=intent
        ),
    )


@pytest.fixture
def workflow(simple_gateway):
    """1 goal, 1 plan, 2 steps, 2 allowed tool calls: the canonical session."""
    gw = simple_gateway
    s = gw.open_session("diagnostic-agent", "summarize patient record 123")
    gw.submit_event(s, _event(gw, s, "goal", "plan", "summarize patient record 123"))
    gw.submit_event(s, _event(gw, s, "plan", "plan", "read chart then summarize"))
    gw.submit_event(s, _event(gw, s, "plan-step", "plan", "read the chart"))
    _call(gw, s, action="read", intent="read chart")
    gw.submit_event(s, _event(gw, s, "plan-step", "plan", "summarize the chart"))
    _call(gw, s, action="summarize", intent="summarize")
    gw.close_session(s)
    return gw, s


def test_canonical_workflow_graph(workflow):
    gw, s = workflow
    graph = build_apg(gw.ledger, s.session_id)
    assert len(graph.nodes) >= 9
    by_type = {t: graph.nodes_of_type(t) for t in ("Prompt", "Goal", "Plan", "Step", "ToolCall", "Decision", "Observation", "Outcome")}
    assert len(by_type["Prompt"]) == 1
    assert len(by_type["Goal"]) == 1
    assert len(by_type["Plan"]) == 1
    assert len(by_type["Step"]) == 2
    assert len(by_type["ToolCall"]) == 2
    assert len(by_type["Observation"]) == 2
    assert len(by_type["Outcome"]) == 1
    for toolcall in by_type["ToolCall"]:
        assert len(graph.out_edges(toolcall.node_id, "authorized-by")) == 1


def test_golden_json_export(workflow):
    gw, s = workflow
    graph = build_apg(gw.ledger, s.session_id)
    assert export_apg(graph, "json") + "\n" == GOLDEN.read_text(encoding="utf-8")


def test_apg_deterministic(workflow):
    gw, s = workflow
    a = build_apg(gw.ledger, s.session_id)
    b = build_apg(gw.ledger, s.session_id)
    assert a == b


def test_empty_session_has_empty_graph(simple_gateway):
    gw = simple_gateway
    s = gw.open_session("diagnostic-agent", "objective")
    gw.close_session(s)
    graph = build_apg(gw.ledger, s.session_id)
    assert graph.nodes == ()
    assert graph.edges == ()
    assert export_apg(graph, "dot").split() == ["digraph", "apg", "{", "}"]


def test_denied_call_links_to_deny_decision_without_observation(simple_gateway):
    gw = simple_gateway
    s = gw.open_session("diagnostic-agent", "objective")
    outcome = _call(gw, s, action="update", intent="mutate")
    assert outcome.status == "denied"
    gw.close_session(s)
    graph = build_apg(gw.ledger, s.session_id)
    toolcalls = graph.nodes_of_type("ToolCall")
    assert len(toolcalls) == 1
    authorized = graph.out_edges(toolcalls[0].node_id, "authorized-by")
    assert len(authorized) == 1
    decision_node = graph.node(authorized[0].dst)
    records = {r.seq: r for r in gw.ledger.records()}
    verdict = json.loads(records[decision_node.record_seq].payload)["verdict"]
    assert verdict["kind"] == "deny"
    assert graph.out_edges(toolcalls[0].node_id, "produced") == []
    assert graph.nodes_of_type("Observation") == []
    # no Outcome either: nothing was observed
    assert graph.nodes_of_type("Outcome") == []


def test_escalation_chain_edges(simple_gateway):
    gw = simple_gateway
    s = gw.open_session("diagnostic-agent", "objective")
    outcome = _call(gw, s, tool="treatment", action="update", resource=None, intent="adjust dose")
    assert outcome.status == "escalated"
    gw.decide_escalation(outcome.escalation_id, "approve", "op-1")
    gw.close_session(s)
    graph = build_apg(gw.ledger, s.session_id)

    escalations = graph.nodes_of_type("Escalation")
    assert len(escalations) == 1
    esc = escalations[0]
    # Decision(escalate) -> Escalation
    triggers_in = graph.in_edges(esc.node_id, "triggered")
    assert len(triggers_in) == 1
    # Escalation -> operator Decision (decided-by) and -> resume Decision (triggered)
    assert len(graph.out_edges(esc.node_id, "decided-by")) == 1
    resumed = graph.out_edges(esc.node_id, "triggered")
    assert len(resumed) == 1
    # the resumed ToolCall's single authorized-by edge targets the final decision
    toolcall = graph.nodes_of_type("ToolCall")[0]
    authorized = graph.out_edges(toolcall.node_id, "authorized-by")
    assert len(authorized) == 1
    assert authorized[0].dst == resumed[0].dst
    # approved call dispatched: observation produced
    assert len(graph.out_edges(toolcall.node_id, "produced")) == 1


def test_unknown_session_rejected(simple_gateway):
    gw = simple_gateway
    gw.open_session("diagnostic-agent", "objective")
    with pytest.raises(UnknownSession):
        build_apg(gw.ledger, "nope")


def test_unverified_ledger_rejected(workflow):
    gw, s = workflow
    records = gw.ledger.records()
    bad = list(records)
    tampered = ProvenanceRecord(
        seq=bad[2].seq,
        ts=bad[2].ts,
        session_id=bad[2].session_id,
        kind=bad[2].kind,
        payload='{"changed":true}',
        payload_hash=bad[2].payload_hash,
        prev_hash=bad[2].prev_hash,
        record_hash=bad[2].record_hash,
        sig=bad[2].sig,
    )
    bad[2] = tampered
    gw.ledger._records = bad  # simulate on-disk tampering
    with pytest.raises(UnverifiedLedger):
        build_apg(gw.ledger, s.session_id)


def test_unsupported_format(workflow):
    gw, s = workflow
    graph = build_apg(gw.ledger, s.session_id)
    with pytest.raises(UnsupportedFormat):
        export_apg(graph, "xml")
