from __future__ import annotations

import threading

import pytest

from agentsafe.errors import LadderViolation, LintFailure, SealedSession, SessionClosed
from agentsafe.gateway import ToolCallRequest
from agentsafe.ledger import verify_chain
from agentsafe.policy import parse_policy
from agentsafe.telemetry import SemanticEvent
from agentsafe.triage import GuardianRule

from conftest import make_gateway


def _req(session, tool="ehr", action="read", resource="patient/123", **kwargs):
    return ToolCallRequest(session_id=session.session_id, tool=tool, action=action, resource=resource, **kwargs)


def _kinds(gateway, session_id):
    return [r.kind for r in gateway.ledger.records() if r.session_id == session_id]


def test_open_session_initial_state(simple_gateway):
    session = simple_gateway.open_session("agent", "objective")
    assert session.containment_level == "monitor"
    assert session.fallback_mode == "normal"
    assert session.throttle_factor == 1.0
    assert _kinds(simple_gateway, session.session_id) == ["session-open"]


def test_open_session_rejects_lint_errors(table1_register):
    bad = parse_policy('policy "p" { when tool == "ehr" then deny risk R-999 }')
    gateway = make_gateway(table1_register, bad)
    with pytest.raises(LintFailure):
        gateway.open_session("agent", "objective")


def test_two_opens_distinct_sessions_both_ledgered(simple_gateway):
    a = simple_gateway.open_session("agent", "objective")
    b = simple_gateway.open_session("agent", "objective")
    assert a.session_id != b.session_id
    opens = [r for r in simple_gateway.ledger.records() if r.kind == "session-open"]
    assert {r.session_id for r in opens} == {a.session_id, b.session_id}


def test_allowed_call_ledgers_request_then_decision_then_observation(simple_gateway):
    session = simple_gateway.open_session("agent", "objective")
    outcome = simple_gateway.authorize_tool_call(session, _req(session, intent="read record"))
    assert outcome.status == "allowed"
    kinds = _kinds(simple_gateway, session.session_id)
    assert kinds == ["session-open", "tool-call-request", "decision", "observation"]
    # gate ordering: decision strictly precedes observation
    assert kinds.index("decision") < kinds.index("observation")


def test_policy_deny_with_reason(simple_gateway):
    session = simple_gateway.open_session("agent", "objective")
    outcome = simple_gateway.authorize_tool_call(session, _req(session, action="update"))
    assert outcome.status == "denied"
    assert outcome.decision.reason == "read-only EHR access"
    assert "observation" not in _kinds(simple_gateway, session.session_id)


def test_out_of_scope_tool_denied_even_with_allow_policies(simple_gateway):
    session = simple_gateway.open_session("agent", "objective")
    outcome = simple_gateway.authorize_tool_call(session, _req(session, tool="missiles", action="launch"))
    assert outcome.status == "denied"
    assert outcome.decision.reason == "out-of-scope"


def test_out_of_scope_resource_denied(simple_gateway):
    session = simple_gateway.open_session("agent", "objective")
    outcome = simple_gateway.authorize_tool_call(session, _req(session, resource="vault/keys"))
    assert outcome.status == "denied"
    assert outcome.decision.reason == "out-of-scope"


def test_out_of_scope_action_denied(simple_gateway):
    session = simple_gateway.open_session("agent", "objective")
    outcome = simple_gateway.authorize_tool_call(session, _req(session, action="export"))
    assert outcome.decision.reason == "out-of-scope"  # not in capability actions


def test_rate_limit_scaled_by_throttle(table1_register, simple_policy_set):
    import json

    from agentsafe.register import load_register

    doc = json.loads(json.dumps(__import__("conftest").TABLE1_REGISTER))
    doc["capabilities"][0]["rate_limit"] = {"count": 5, "window_s": 60}
    register = load_register(json.dumps(doc))
    gateway = make_gateway(register, simple_policy_set)
    session = gateway.open_session("agent", "objective")
    for i in range(5):
        assert gateway.authorize_tool_call(session, _req(session)).status == "allowed"
    sixth = gateway.authorize_tool_call(session, _req(session))
    assert sixth.status == "denied"
    assert sixth.decision.reason == "rate-limited"
    # window slides: a minute later the call passes again
    gateway.clock.advance(61_000)
    assert gateway.authorize_tool_call(session, _req(session)).status == "allowed"


def test_containment_pause_blocks_and_release_reopens(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    record = gateway.apply_containment(session, "pause", cause="operator hold")
    assert record.level == "pause"
    outcome = gateway.authorize_tool_call(session, _req(session))
    assert outcome.status == "contained"
    assert outcome.decision.reason == "containment:pause"
    # operator release pause -> monitor
    gateway.apply_containment(session, "monitor", cause="reviewed")
    assert gateway.authorize_tool_call(session, _req(session)).status == "allowed"


def test_ladder_violation_on_downward_move(simple_gateway):
    session = simple_gateway.open_session("agent", "objective")
    simple_gateway.apply_containment(session, "isolate", cause="x")
    with pytest.raises(LadderViolation):
        simple_gateway.apply_containment(session, "throttle", cause="x")
    with pytest.raises(LadderViolation):
        simple_gateway.apply_containment(session, "monitor", cause="isolate cannot release")


def test_kill_is_terminal_and_seals_ledger(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    gateway.apply_containment(session, "kill", cause="emergency")
    assert session.closed_at is not None
    with pytest.raises(SealedSession):
        gateway.ledger.append("observation", session.session_id, {})
    # authorizations on a killed session are contained without ledger writes
    before = len(gateway.ledger.records())
    outcome = gateway.authorize_tool_call(session, _req(session))
    assert outcome.status == "contained"
    assert len(gateway.ledger.records()) == before
    # and events are refused
    with pytest.raises(SessionClosed):
        gateway.submit_event(
            session,
            SemanticEvent(event_id="e", session_id=session.session_id, phase="plan", kind="goal", text="x", ts=0),
        )


def test_read_only_fallback_denies_mutations(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    gateway.set_fallback_mode(session, "read-only", cause="incident")
    assert gateway.authorize_tool_call(session, _req(session, action="read")).status == "allowed"
    denied = gateway.authorize_tool_call(session, _req(session, tool="treatment", action="recommend", resource=None))
    assert denied.status == "denied"
    assert denied.decision.reason == "read-only-mode"


def test_search_only_fallback_allows_observe_phase_tools_only(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    gateway.set_fallback_mode(session, "search-only", cause="incident")
    # notes tool has phase observe in the fixture register
    assert gateway.authorize_tool_call(session, _req(session, tool="notes", action="read", resource=None)).status == "allowed"
    denied = gateway.authorize_tool_call(session, _req(session, action="read"))
    assert denied.decision.reason == "search-only-mode"


def test_quarantined_tool_denied_then_released(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    gateway.quarantine_target("ehr", cause="incident-12")
    outcome = gateway.authorize_tool_call(session, _req(session))
    assert outcome.status == "denied"
    assert outcome.decision.reason == "quarantined"
    gateway.release_quarantine("ehr")
    assert gateway.authorize_tool_call(session, _req(session)).status == "allowed"


def test_quarantine_applies_to_resources_too(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    gateway.quarantine_target("patient/123", cause="incident")
    assert gateway.authorize_tool_call(session, _req(session)).decision.reason == "quarantined"
    assert gateway.authorize_tool_call(session, _req(session, resource="patient/9")).status == "allowed"


def test_throttle_verdict_sets_factor_and_level(table1_register):
    policies = parse_policy(
        'policy "allow-ehr" { when tool == "ehr" then allow }\n'
        'policy "slow-down" { when tool == "ehr" and action == "query" then throttle 0.5 }'
    )
    gateway = make_gateway(table1_register, policies)
    session = gateway.open_session("agent", "objective")
    outcome = gateway.authorize_tool_call(session, _req(session, action="query"))
    assert outcome.status == "allowed"
    assert outcome.decision.verdict.kind == "throttle"
    assert session.throttle_factor == 0.5
    assert session.containment_level == "throttle"


def test_policy_contain_verdict_applies_ladder(table1_register):
    policies = parse_policy(
        'policy "allow-ehr" { when tool == "ehr" then allow }\n'
        'policy "sweep" { when tool == "ehr" and args.scope == "all" then contain pause reason "sweep" }'
    )
    gateway = make_gateway(table1_register, policies)
    session = gateway.open_session("agent", "objective")
    outcome = gateway.authorize_tool_call(session, _req(session, action="query", args={"scope": "all"}))
    assert outcome.status == "contained"
    assert session.containment_level == "pause"
    kinds = _kinds(gateway, session.session_id)
    assert "containment" in kinds


def test_human_critical_risk_escalates_even_on_allow(table1_register):
    import json

    from agentsafe.register import load_register

    doc = json.loads(json.dumps(__import__("conftest").TABLE1_REGISTER))
    doc["risks"][0]["human_critical"] = True  # R-001 on ehr-read
    register = load_register(json.dumps(doc))
    policies = parse_policy(
        'policy "allow-ehr" { when tool == "ehr" then allow risk R-001 }'
    )
    gateway = make_gateway(register, policies)
    session = gateway.open_session("agent", "objective")
    outcome = gateway.authorize_tool_call(session, _req(session, intent="read the chart"))
    assert outcome.status == "escalated"
    ticket = gateway.tickets.get(outcome.escalation_id)
    assert "Covert Data Exfiltration" in ticket.projected_impact
    assert ticket.rationale == "read the chart"


def test_escalation_approve_resumes_with_original_args(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    outcome = gateway.authorize_tool_call(
        session, _req(session, tool="treatment", action="update", resource=None, args={"dose": "10mg"})
    )
    assert outcome.status == "escalated"
    gateway.decide_escalation(outcome.escalation_id, "approve", "op-1")
    resolution = session.resolutions[outcome.escalation_id]
    assert resolution.status == "allowed"
    assert resolution.decision.reason == "operator-approved"
    dispatched = gateway.tools["treatment"].applied if "treatment" in gateway.tools else None
    kinds = _kinds(gateway, session.session_id)
    assert kinds.count("escalation-opened") == 1
    assert kinds.count("escalation-decided") == 1
    assert kinds[-1] == "observation"  # resumed call dispatched


def test_escalation_deny_completes_denied(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    outcome = gateway.authorize_tool_call(session, _req(session, tool="treatment", action="update", resource=None))
    gateway.decide_escalation(outcome.escalation_id, "deny", "op-1")
    resolution = session.resolutions[outcome.escalation_id]
    assert resolution.status == "denied"
    assert resolution.decision.reason == "operator-denied"
    assert _kinds(gateway, session.session_id).count("observation") == 0


def test_escalation_modify_resumes_with_modified_args(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    outcome = gateway.authorize_tool_call(
        session, _req(session, tool="treatment", action="update", resource=None, args={"dose": "20mg"})
    )
    gateway.decide_escalation(outcome.escalation_id, "modify", "op-1", modified_args={"dose": "5mg"})
    resolution = session.resolutions[outcome.escalation_id]
    assert resolution.status == "allowed"
    observations = [
        r for r in gateway.ledger.records()
        if r.kind == "observation" and r.session_id == session.session_id
    ]
    assert len(observations) == 1


def test_escalation_timeout_denies(simple_gateway):
    gateway = simple_gateway
    gateway.tickets.timeout_s = 300
    session = gateway.open_session("agent", "objective")
    outcome = gateway.authorize_tool_call(session, _req(session, tool="treatment", action="update", resource=None))
    gateway.clock.advance(301_000)
    expired = gateway.expire_escalations()
    assert [t.escalation_id for t in expired] == [outcome.escalation_id]
    resolution = session.resolutions[outcome.escalation_id]
    assert resolution.status == "denied"
    assert resolution.decision.reason == "escalation-timeout"


def test_guardian_contains_before_dispatch(table1_register):
    policies = parse_policy('policy "allow-ehr" { when tool == "ehr" then allow }')
    rules = (GuardianRule("spread", "scope-spread", "pause", count=2, window_s=60),)
    gateway = make_gateway(table1_register, policies, guardian_rules=rules)
    session = gateway.open_session("agent", "objective")
    assert gateway.authorize_tool_call(session, _req(session, resource="patient/1")).status == "allowed"
    assert gateway.authorize_tool_call(session, _req(session, resource="patient/2")).status == "allowed"
    third = gateway.authorize_tool_call(session, _req(session, resource="patient/3"))
    assert third.status == "contained"
    assert "spread" in third.guardian_alerts
    kinds = _kinds(gateway, session.session_id)
    assert "guardian-alert" in kinds and "containment" in kinds
    # the contained call must NOT have dispatched
    assert kinds.count("observation") == 2


def test_drift_alert_pauses_session(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "summarize patient record 123")

    def goal(n, text):
        return SemanticEvent(
            event_id=f"e{n}", session_id=session.session_id, phase="plan", kind="goal", text=text,
            ts=gateway.clock.now_ms(),
        )

    gateway.submit_event(session, goal(0, "summarize patient record 123"))
    for n in range(1, 4):
        gateway.submit_event(session, goal(n, "enumerate every unrelated database row"))
    assert session.containment_level == "pause"
    kinds = _kinds(gateway, session.session_id)
    assert "drift-alert" in kinds
    outcome = gateway.authorize_tool_call(session, _req(session))
    assert outcome.status == "contained"


def test_session_status_counts(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    status = gateway.session_status(session.session_id)
    assert status["counts"] == {"allowed": 0, "denied": 0, "escalated": 0, "contained": 0}
    assert status["level"] == "monitor"
    for _ in range(3):
        gateway.authorize_tool_call(session, _req(session))
    gateway.authorize_tool_call(session, _req(session, action="update"))
    status = gateway.session_status(session.session_id)
    assert status["counts"] == {"allowed": 3, "denied": 1, "escalated": 0, "contained": 0}


def test_preemption_no_dispatch_after_blocking_containment(simple_gateway):
    """Once apply_containment(>= pause) returns, no later dispatch occurs."""
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    start = threading.Barrier(2)
    outcomes = []

    def worker():
        start.wait()
        for _ in range(50):
            outcomes.append(gateway.authorize_tool_call(session, _req(session)))

    thread = threading.Thread(target=worker)
    thread.start()
    start.wait()
    record = gateway.apply_containment(session, "pause", cause="preempt")
    observed_after = [
        r.seq for r in gateway.ledger.records()
        if r.kind == "observation" and r.seq > record.seq
    ]
    thread.join()
    # no observation record may follow the containment record
    final_observed_after = [
        r.seq for r in gateway.ledger.records()
        if r.kind == "observation" and r.seq > record.seq
    ]
    assert final_observed_after == []
    assert any(o.status == "contained" for o in outcomes)


def test_ledger_chain_stays_valid_through_a_busy_session(simple_gateway):
    gateway = simple_gateway
    session = gateway.open_session("agent", "objective")
    for i in range(5):
        gateway.authorize_tool_call(session, _req(session, resource="patient/123"))
    gateway.authorize_tool_call(session, _req(session, action="update"))
    outcome = gateway.authorize_tool_call(session, _req(session, tool="treatment", action="update", resource=None))
    gateway.decide_escalation(outcome.escalation_id, "deny", "op")
    gateway.close_session(session)
    assert verify_chain(gateway.ledger).valid
