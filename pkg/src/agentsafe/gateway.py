"""The mediation core.

Every tool call runs the same gate pipeline, in order: containment,
fallback mode, capability sandbox (quarantine, scope, rate limit), policy
evaluation, human-critical escalation, guardian rules, and only then
dispatch. Each gate's decision is ledgered before the outcome returns, so
the ledger ordering IS the gate ordering.

Containment takes a priority lane: applying a level only touches the
session state lock, never the pipeline lane, so a level raised mid-flight
is observed by the pre-dispatch re-check and no tool dispatch can follow
a blocking containment.
"""

from __future__ import annotations

import itertools
import logging
import math
import threading
import uuid
from dataclasses import dataclass, field
from fnmatch import fnmatchcase
from typing import Any, Callable

from .clock import Clock, SystemClock
from .errors import HarnessError, LadderViolation, LintFailure, SessionClosed, UnknownSession
from .escalation import TicketStore
from .ledger import Ledger, LedgerKey
from .policy import ActionContext, Decision, Effect, PolicySet, evaluate, has_errors, lint_policies
from .ratelimit import RateTracker
from .register import RiskRegister
from .telemetry import (
    DEFAULT_THRESHOLD,
    DEFAULT_TRIGGER_COUNT,
    DriftState,
    SemanticEvent,
    assess_drift,
)
from .triage import (
    BLOCKING_LEVELS,
    DEFAULT_DRIFT_RESPONSE,
    GuardianRule,
    QuarantineRegistry,
    escalate_containment,
    evaluate_guardians,
    ladder_index,
)

logger = logging.getLogger(__name__)

#: Actions permitted while a session is in read-only fallback mode.
DEFAULT_NONMUTATING_ACTIONS = ("read", "get", "search", "query", "list", "summarize")

FALLBACK_MODES = ("normal", "read-only", "search-only")

ToolAdapter = Callable[[str, dict, "str | None"], Any]


@dataclass(frozen=True)
class ToolCallRequest:
    session_id: str
    tool: str
    action: str
    args: dict[str, Any] = field(default_factory=dict)
    resource: str | None = None
    intent: str = ""
    confidence: float | None = None
    labels: tuple[str, ...] = ()  # harness-only; never consulted by gates

    def __post_init__(self):
        if not self.tool or not self.action:
            raise ValueError("tool and action must be non-empty")


@dataclass(frozen=True)
class AuthorizationOutcome:
    status: str  # allowed | denied | escalated | contained
    decision: Decision
    request_id: str
    escalation_id: str | None = None
    halt_latency_ms: int | None = None
    guardian_alerts: tuple[str, ...] = ()
    result: Any = None

    def to_dict(self) -> dict:
        verdict = self.decision.verdict
        return {
            "status": self.status,
            "request_id": self.request_id,
            "verdict": _effect_payload(verdict),
            "matched_policies": list(self.decision.matched_policies),
            "reason": self.decision.reason,
            "escalation_id": self.escalation_id,
            "halt_latency_ms": self.halt_latency_ms,
            "guardian_alerts": list(self.guardian_alerts),
            "result": self.result,
        }


@dataclass(frozen=True)
class ContainmentRecord:
    session_id: str
    level: str
    cause: str
    source: str  # operator | guardian | drift | policy
    halt_latency_ms: int
    seq: int
    applied_at: int

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "level": self.level,
            "cause": self.cause,
            "source": self.source,
            "halt_latency_ms": self.halt_latency_ms,
            "seq": self.seq,
            "applied_at": self.applied_at,
        }


class Session:
    def __init__(
        self,
        session_id: str,
        agent_id: str,
        declared_objective: str,
        register: RiskRegister,
        policy_set: PolicySet,
        opened_at: int,
        drift_threshold: float,
        drift_trigger_count: int,
    ):
        self.session_id = session_id
        self.agent_id = agent_id
        self.declared_objective = declared_objective
        self.register = register
        self.policy_set = policy_set
        self.opened_at = opened_at
        self.closed_at: int | None = None
        self.containment_level = "monitor"
        self.fallback_mode = "normal"
        self.throttle_factor = 1.0
        self.drift = DriftState(
            declared_objective=declared_objective,
            threshold=drift_threshold,
            trigger_count=drift_trigger_count,
        )
        self.rates = RateTracker()
        self.counts = {"allowed": 0, "denied": 0, "escalated": 0, "contained": 0}
        self.resolutions: dict[str, AuthorizationOutcome] = {}
        self.suspended: dict[str, ToolCallRequest] = {}
        self.suspended_request_ids: dict[str, str] = {}
        self.rate_probes: set[tuple[str, int]] = set()
        self.last_drift_score: float | None = None
        self._request_counter = itertools.count(1)
        # pipeline_lane serializes authorizations; state_lock is the
        # priority lane shared with containment commands.
        self.pipeline_lane = threading.Lock()
        self.state_lock = threading.Lock()

    def next_request_id(self) -> str:
        return f"{self.session_id}/r{next(self._request_counter)}"

    @property
    def closed(self) -> bool:
        return self.closed_at is not None


def _effect_payload(effect: Effect) -> dict:
    payload: dict[str, Any] = {"kind": effect.kind}
    if effect.factor is not None:
        payload["factor"] = effect.factor
    if effect.level is not None:
        payload["level"] = effect.level
    return payload


def _gate_decision(verdict: Effect, reason: str, digest: str, now_ms: int) -> Decision:
    return Decision(
        verdict=verdict,
        matched_policies=(),
        reason=reason,
        policy_digest=digest,
        decided_at=now_ms,
    )


class Gateway:
    """Owns sessions, the ledger, escalations, quarantine, and guardians."""

    def __init__(
        self,
        register: RiskRegister,
        policy_set: PolicySet,
        ledger: Ledger | None = None,
        clock: Clock | None = None,
        tools: dict[str, ToolAdapter] | None = None,
        guardian_rules: tuple[GuardianRule, ...] = (),
        drift_threshold: float = DEFAULT_THRESHOLD,
        drift_trigger_count: int = DEFAULT_TRIGGER_COUNT,
        drift_response_level: str = DEFAULT_DRIFT_RESPONSE,
        nonmutating_actions: tuple[str, ...] = DEFAULT_NONMUTATING_ACTIONS,
        escalation_timeout_s: int = 300,
        session_id_factory: Callable[[], str] | None = None,
        escalation_id_factory: Callable[[], str] | None = None,
    ):
        self.register = register
        self.policy_set = policy_set
        self.clock = clock or SystemClock()
        # explicit None check: an empty Ledger is falsy (it has __len__)
        self.ledger = ledger if ledger is not None else Ledger(LedgerKey.generate(), clock=self.clock)
        self.tools = dict(tools or {})
        self.guardian_rules = tuple(guardian_rules)
        self.drift_threshold = drift_threshold
        self.drift_trigger_count = drift_trigger_count
        self.drift_response_level = drift_response_level
        self.nonmutating_actions = frozenset(nonmutating_actions)
        self.quarantine = QuarantineRegistry()
        self.tickets = TicketStore(timeout_s=escalation_timeout_s, id_factory=escalation_id_factory)
        self.strict_tools = False
        self.sessions: dict[str, Session] = {}
        self._session_counter = itertools.count(1)
        self._session_id_factory = session_id_factory
        self._lock = threading.Lock()

    # --- session lifecycle

    def _new_session_id(self) -> str:
        if self._session_id_factory is not None:
            return self._session_id_factory()
        return f"s{next(self._session_counter):04d}-{uuid.uuid4().hex[:8]}"

    def open_session(
        self,
        agent_id: str,
        declared_objective: str,
        register: RiskRegister | None = None,
        policy_set: PolicySet | None = None,
    ) -> Session:
        register = register or self.register
        policy_set = policy_set or self.policy_set
        diagnostics = lint_policies(policy_set, register)
        if has_errors(diagnostics):
            raise LintFailure([d for d in diagnostics if d.level == "error"])
        now = self.clock.now_ms()
        session = Session(
            session_id=self._new_session_id(),
            agent_id=agent_id,
            declared_objective=declared_objective,
            register=register,
            policy_set=policy_set,
            opened_at=now,
            drift_threshold=self.drift_threshold,
            drift_trigger_count=self.drift_trigger_count,
        )
        # Pre-create every sliding window the session will ever consult, so
        # dispatch counts are never lost to lazy window creation.
        for cap in register.capabilities:
            if cap.rate_limit is not None:
                session.rates.counter(cap.tool, cap.rate_limit.window_s)
        session.rate_probes = policy_set.rate_probes()
        for tool, window_s in session.rate_probes:
            session.rates.counter(tool, window_s)
        with self._lock:
            self.sessions[session.session_id] = session
        self.ledger.append(
            "session-open",
            session.session_id,
            {
                "agent_id": agent_id,
                "declared_objective": declared_objective,
                "policy_digest": policy_set.source_digest,
                "register_id": register.register_id,
                "register_version": register.version,
            },
        )
        return session

    def session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"unknown session {session_id!r}")
        return session

    def close_session(self, session: Session, reason: str = "completed") -> None:
        if session.closed:
            return
        session.closed_at = self.clock.now_ms()
        self.ledger.append("session-close", session.session_id, {"reason": reason})

    # --- telemetry

    def submit_event(self, session: Session, event: SemanticEvent) -> SemanticEvent:
        """Ledger a semantic event and run drift assessment on goal/plan."""
        if session.closed:
            raise SessionClosed(f"session {session.session_id} is closed")
        if event.kind == "tool-call-intent":
            raise ValueError("tool-call intents travel with tool-call requests, not the event stream")
        self.ledger.append(
            event.kind,
            session.session_id,
            {
                "event_id": event.event_id,
                "phase": event.phase,
                "text": event.text,
                "confidence": event.confidence,
            },
        )
        if event.kind in ("goal", "plan"):
            new_state, alert = assess_drift(session.drift, event)
            with session.state_lock:
                session.drift = new_state
                session.last_drift_score = new_state.last_scores[-1]
            if alert is not None:
                self.ledger.append(
                    "drift-alert",
                    session.session_id,
                    {
                        "score": alert.score,
                        "scores": list(alert.scores),
                        "threshold": alert.threshold,
                        "declared_objective": session.declared_objective,
                        "text": alert.text,
                    },
                )
                level = escalate_containment(
                    session.containment_level, alert, drift_response=self.drift_response_level
                )
                if ladder_index(level) > ladder_index(session.containment_level):
                    self.apply_containment(session, level, cause=f"drift score {alert.score:.3f}", source="drift")
        return event

    # --- containment

    def apply_containment(
        self,
        session: Session,
        level: str,
        cause: str,
        source: str = "operator",
        cause_seq: int | None = None,
    ) -> ContainmentRecord:
        """Apply a ladder level atomically; ledger the move with halt latency.

        Upward moves only, except the operator release pause -> monitor.
        Kill is terminal: it seals the session's ledger stream.
        """
        requested_at = self.clock.now_ms()
        ladder_index(level)  # validates
        with session.state_lock:
            if session.closed and session.containment_level == "kill":
                raise SessionClosed(f"session {session.session_id} was killed")
            current = session.containment_level
            release = current == "pause" and level == "monitor" and source == "operator"
            if ladder_index(level) < ladder_index(current) and not release:
                raise LadderViolation(f"cannot move {current} -> {level}")
            session.containment_level = level
            if level == "kill":
                session.closed_at = requested_at
        applied_at = self.clock.now_ms()
        latency = max(0, applied_at - requested_at)
        record = self.ledger.append(
            "containment",
            session.session_id,
            {
                "level": level,
                "cause": cause,
                "source": source,
                "halt_latency_ms": latency,
                "cause_seq": cause_seq,
            },
        )
        if level == "kill":
            self.ledger.seal_session(session.session_id)
        return ContainmentRecord(
            session_id=session.session_id,
            level=level,
            cause=cause,
            source=source,
            halt_latency_ms=latency,
            seq=record.seq,
            applied_at=applied_at,
        )

    def set_fallback_mode(self, session: Session, mode: str, cause: str) -> None:
        if mode not in FALLBACK_MODES:
            raise ValueError(f"unknown fallback mode {mode!r}")
        with session.state_lock:
            session.fallback_mode = mode
        self.ledger.append("fallback", session.session_id, {"mode": mode, "cause": cause})

    def quarantine_target(self, target: str, cause: str) -> None:
        self.quarantine.add(target, cause, now_ms=self.clock.now_ms())
        self.ledger.append("quarantine", "-", {"target": target, "cause": cause, "action": "add"})

    def release_quarantine(self, target: str) -> bool:
        released = self.quarantine.release(target)
        if released:
            self.ledger.append("quarantine", "-", {"target": target, "cause": "", "action": "release"})
        return released

    # --- the authorization pipeline

    def authorize_tool_call(self, session: Session, req: ToolCallRequest) -> AuthorizationOutcome:
        with session.pipeline_lane:
            with session.state_lock:
                level = session.containment_level
                closed = session.closed
            if closed and level != "kill":
                raise SessionClosed(f"session {session.session_id} is closed")
            request_id = session.next_request_id()
            digest = session.policy_set.source_digest
            if level != "kill":
                self.ledger.append(
                    "tool-call-request",
                    session.session_id,
                    {
                        "request_id": request_id,
                        "tool": req.tool,
                        "action": req.action,
                        "args": dict(req.args),
                        "resource": req.resource,
                        "intent": req.intent,
                        "labels": sorted(req.labels),
                    },
                )
            outcome = self._run_gates(session, req, request_id, digest)
            with session.state_lock:
                session.counts[outcome.status] += 1
            return outcome

    def _ledger_decision(
        self,
        session: Session,
        request_id: str,
        decision: Decision,
        gate: str,
        escalation_id: str | None = None,
    ) -> int:
        if self.ledger.is_sealed(session.session_id):
            return -1
        record = self.ledger.append(
            "decision",
            session.session_id,
            {
                "request_id": request_id,
                "verdict": _effect_payload(decision.verdict),
                "matched_policies": list(decision.matched_policies),
                "reason": decision.reason,
                "policy_digest": decision.policy_digest,
                "gate": gate,
                "escalation_id": escalation_id,
            },
        )
        return record.seq

    def _blocked(
        self, session: Session, req: ToolCallRequest, request_id: str, digest: str, gate: str
    ) -> AuthorizationOutcome | None:
        """Containment gate; also the pre-dispatch re-check."""
        with session.state_lock:
            level = session.containment_level
        if level not in BLOCKING_LEVELS:
            return None
        now = self.clock.now_ms()
        decision = _gate_decision(Effect("contain", level=level), f"containment:{level}", digest, now)
        self._ledger_decision(session, request_id, decision, gate)
        return AuthorizationOutcome(status="contained", decision=decision, request_id=request_id)

    def _run_gates(
        self,
        session: Session,
        req: ToolCallRequest,
        request_id: str,
        digest: str,
        operator_approved: bool = False,
        escalation_id: str | None = None,
    ) -> AuthorizationOutcome:
        # (1) containment gate
        blocked = self._blocked(session, req, request_id, digest, "containment")
        if blocked is not None:
            return blocked

        now = self.clock.now_ms()

        # (2) fallback gate
        mode = session.fallback_mode
        if mode == "read-only" and req.action not in self.nonmutating_actions:
            decision = _gate_decision(Effect("deny"), "read-only-mode", digest, now)
            self._ledger_decision(session, request_id, decision, "fallback")
            return AuthorizationOutcome(status="denied", decision=decision, request_id=request_id)
        if mode == "search-only":
            phases = {c.phase for c in session.register.capabilities if c.tool == req.tool}
            if "observe" not in phases:
                decision = _gate_decision(Effect("deny"), "search-only-mode", digest, now)
                self._ledger_decision(session, request_id, decision, "fallback")
                return AuthorizationOutcome(status="denied", decision=decision, request_id=request_id)

        # (3) sandbox gate: quarantine, capability scope, rate limit
        if self.quarantine.contains(req.tool) or self.quarantine.contains(req.resource):
            decision = _gate_decision(Effect("deny"), "quarantined", digest, now)
            self._ledger_decision(session, request_id, decision, "sandbox")
            return AuthorizationOutcome(status="denied", decision=decision, request_id=request_id)
        capability = self._matching_capability(session.register, req)
        if capability is None:
            decision = _gate_decision(Effect("deny"), "out-of-scope", digest, now)
            self._ledger_decision(session, request_id, decision, "sandbox")
            return AuthorizationOutcome(status="denied", decision=decision, request_id=request_id)
        if capability.rate_limit is not None:
            limit = capability.rate_limit
            with session.state_lock:
                factor = session.throttle_factor
            effective = max(1, math.floor(limit.count * factor))
            observed = session.rates.observe(req.tool, limit.window_s, now)
            if observed >= effective:
                decision = _gate_decision(Effect("deny"), "rate-limited", digest, now)
                self._ledger_decision(session, request_id, decision, "sandbox")
                return AuthorizationOutcome(status="denied", decision=decision, request_id=request_id)

        # (4) policy gate
        ctx = ActionContext(
            session_id=session.session_id,
            tool=req.tool,
            action=req.action,
            args=dict(req.args),
            resource=req.resource,
            session_attrs={
                "agent_id": session.agent_id,
                "fallback_mode": mode,
                "containment_level": session.containment_level,
            },
            rates={
                probe: session.rates.observe(probe[0], probe[1], now)
                for probe in session.rate_probes
            },
        )
        decision = evaluate(session.policy_set, ctx, now_ms=now)
        verdict = decision.verdict

        if operator_approved and verdict.kind == "escalate":
            decision = Decision(
                verdict=Effect("allow"),
                matched_policies=decision.matched_policies,
                reason="operator-approved",
                policy_digest=decision.policy_digest,
                decided_at=now,
            )
            verdict = decision.verdict

        if verdict.kind == "deny":
            self._ledger_decision(session, request_id, decision, "policy", escalation_id)
            return AuthorizationOutcome(status="denied", decision=decision, request_id=request_id)

        if verdict.kind == "contain":
            seq = self._ledger_decision(session, request_id, decision, "policy", escalation_id)
            containment = self.apply_containment(
                session,
                ladder_max_safe(session.containment_level, verdict.level),
                cause=f"policy:{decision.reason}",
                source="policy",
                cause_seq=seq,
            )
            return AuthorizationOutcome(
                status="contained",
                decision=decision,
                request_id=request_id,
                halt_latency_ms=containment.halt_latency_ms,
            )

        if verdict.kind == "throttle":
            with session.state_lock:
                session.throttle_factor = min(session.throttle_factor, verdict.factor or 1.0)
                if ladder_index(session.containment_level) < ladder_index("throttle"):
                    session.containment_level = "throttle"

        # (5) human-critical gate
        if not operator_approved:
            human_critical = verdict.kind == "escalate"
            risk_names: list[str] = []
            for name in decision.matched_policies:
                policy = next(p for p in session.policy_set.policies if p.name == name)
                for rid in policy.risk_ids:
                    try:
                        risk = session.register.risk(rid)
                    except Exception:
                        continue
                    risk_names.append(risk.name)
                    if risk.human_critical:
                        human_critical = True
            if human_critical:
                return self._escalate(session, req, request_id, decision, risk_names)

        # (6) guardian hook, then pre-dispatch containment re-check
        alerts = self._run_guardians(session)
        blocked = self._blocked(session, req, request_id, digest, "guardian")
        if blocked is not None:
            return AuthorizationOutcome(
                status="contained",
                decision=blocked.decision,
                request_id=request_id,
                guardian_alerts=tuple(a.rule_id for a in alerts),
            )

        self._ledger_decision(session, request_id, decision, "policy", escalation_id)

        # dispatch
        result = self._dispatch(session, req, request_id)
        return AuthorizationOutcome(
            status="allowed",
            decision=decision,
            request_id=request_id,
            guardian_alerts=tuple(a.rule_id for a in alerts),
            result=result,
        )

    def _matching_capability(self, register: RiskRegister, req: ToolCallRequest):
        for cap in register.capabilities:
            if cap.tool != req.tool or req.action not in cap.actions:
                continue
            if req.resource is not None and cap.resource_scopes:
                if not any(fnmatchcase(req.resource, scope) for scope in cap.resource_scopes):
                    continue
            return cap
        return None

    def _run_guardians(self, session: Session):
        if not self.guardian_rules:
            return []
        window = [r for r in self.ledger.records() if r.session_id == session.session_id]
        alerts = evaluate_guardians(window, list(self.guardian_rules), quarantine=self.quarantine)
        for alert in alerts:
            self.ledger.append(
                "guardian-alert",
                session.session_id,
                {
                    "rule_id": alert.rule_id,
                    "kind": alert.kind,
                    "evidence_seqs": list(alert.evidence_seqs),
                    "response_level": alert.response_level,
                },
            )
            level = escalate_containment(session.containment_level, alert)
            if ladder_index(level) > ladder_index(session.containment_level):
                self.apply_containment(session, level, cause=f"guardian:{alert.rule_id}", source="guardian")
        return alerts

    def _dispatch(self, session: Session, req: ToolCallRequest, request_id: str) -> Any:
        adapter = self.tools.get(req.tool)
        if adapter is None:
            if self.strict_tools:
                raise HarnessError(f"no tool adapter registered for {req.tool!r}")
            result: Any = {"dispatched": True}
        else:
            result = adapter(req.action, dict(req.args), req.resource)
        session.rates.record_dispatch(req.tool, self.clock.now_ms())
        self.ledger.append(
            "observation",
            session.session_id,
            {"request_id": request_id, "tool": req.tool, "result": result},
        )
        return result

    # --- escalation workflow

    def _escalate(
        self,
        session: Session,
        req: ToolCallRequest,
        request_id: str,
        decision: Decision,
        risk_names: list[str],
    ) -> AuthorizationOutcome:
        now = self.clock.now_ms()
        escalate_decision = Decision(
            verdict=Effect("escalate"),
            matched_policies=decision.matched_policies,
            reason=decision.reason,
            policy_digest=decision.policy_digest,
            decided_at=now,
        )
        self._ledger_decision(session, request_id, escalate_decision, "human-critical")
        projected = decision.reason
        if risk_names:
            projected += "; risks: " + ", ".join(sorted(set(risk_names)))
        risk_ids: list[str] = []
        for name in decision.matched_policies:
            policy = next(p for p in session.policy_set.policies if p.name == name)
            risk_ids.extend(policy.risk_ids)
        ticket = self.tickets.enqueue(
            session_id=session.session_id,
            request=req,
            rationale=req.intent,
            projected_impact=projected,
            risk_ids=tuple(dict.fromkeys(risk_ids)),
            now_ms=now,
        )
        with session.state_lock:
            session.suspended[ticket.escalation_id] = req
            session.suspended_request_ids[ticket.escalation_id] = request_id
        self.ledger.append(
            "escalation-opened",
            session.session_id,
            {
                "escalation_id": ticket.escalation_id,
                "request_id": request_id,
                "rationale": ticket.rationale,
                "projected_impact": ticket.projected_impact,
                "risk_ids": list(ticket.risk_ids),
            },
        )
        return AuthorizationOutcome(
            status="escalated",
            decision=escalate_decision,
            request_id=request_id,
            escalation_id=ticket.escalation_id,
        )

    def decide_escalation(
        self,
        escalation_id: str,
        verdict: str,
        operator_id: str,
        modified_args: dict | None = None,
    ):
        """Resolve a pending ticket; the winner completes the suspended call."""
        now = self.clock.now_ms()
        decision = self.tickets.decide(escalation_id, verdict, operator_id, now, modified_args)
        ticket = self.tickets.get(escalation_id)
        session = self.session(ticket.session_id)
        self.ledger.append(
            "escalation-decided",
            session.session_id,
            {
                "escalation_id": escalation_id,
                "request_id": session.suspended_request_ids.get(escalation_id, ""),
                "verdict": verdict,
                "operator_id": operator_id,
                "modified_args": decision.modified_args,
            },
        )
        self._complete_suspended(session, ticket, verdict, decision.modified_args)
        return decision

    def expire_escalations(self) -> list:
        now = self.clock.now_ms()
        expired = self.tickets.expire(now)
        for ticket in expired:
            session = self.session(ticket.session_id)
            self.ledger.append(
                "escalation-decided",
                session.session_id,
                {
                    "escalation_id": ticket.escalation_id,
                    "request_id": session.suspended_request_ids.get(ticket.escalation_id, ""),
                    "verdict": "expire",
                    "operator_id": None,
                    "modified_args": None,
                },
            )
            self._complete_suspended(session, ticket, "expire", None)
        return expired

    def _complete_suspended(self, session: Session, ticket, verdict: str, modified_args: dict | None) -> None:
        request_id = session.suspended_request_ids.get(ticket.escalation_id, "")
        req: ToolCallRequest = session.suspended.pop(ticket.escalation_id, None)
        if req is None:
            return
        now = self.clock.now_ms()
        digest = session.policy_set.source_digest
        if verdict in ("deny", "expire"):
            reason = "operator-denied" if verdict == "deny" else "escalation-timeout"
            decision = _gate_decision(Effect("deny"), reason, digest, now)
            self._ledger_decision(session, request_id, decision, "resume", ticket.escalation_id)
            outcome = AuthorizationOutcome(
                status="denied",
                decision=decision,
                request_id=request_id,
                escalation_id=ticket.escalation_id,
            )
        else:
            args = dict(req.args)
            if verdict == "modify" and modified_args:
                args.update(modified_args)
            resumed = ToolCallRequest(
                session_id=req.session_id,
                tool=req.tool,
                action=req.action,
                args=args,
                resource=req.resource,
                intent=req.intent,
                confidence=req.confidence,
                labels=req.labels,
            )
            with session.pipeline_lane:
                outcome = self._run_gates(
                    session,
                    resumed,
                    request_id,
                    digest,
                    operator_approved=True,
                    escalation_id=ticket.escalation_id,
                )
            outcome = AuthorizationOutcome(
                status=outcome.status,
                decision=outcome.decision,
                request_id=request_id,
                escalation_id=ticket.escalation_id,
                halt_latency_ms=outcome.halt_latency_ms,
                guardian_alerts=outcome.guardian_alerts,
                result=outcome.result,
            )
        session.resolutions[ticket.escalation_id] = outcome

    # --- status

    def session_status(self, session_id: str) -> dict:
        session = self.session(session_id)
        with session.state_lock:
            return {
                "session_id": session.session_id,
                "agent_id": session.agent_id,
                "level": session.containment_level,
                "mode": session.fallback_mode,
                "throttle_factor": session.throttle_factor,
                "counts": dict(session.counts),
                "last_drift_score": session.last_drift_score,
                "opened_at": session.opened_at,
                "closed_at": session.closed_at,
                "pending_escalations": len(
                    [t for t in self.tickets.list("pending") if t.session_id == session_id]
                ),
            }


def ladder_max_safe(current: str, level: str | None) -> str:
    if level is None:
        return current
    return level if ladder_index(level) >= ladder_index(current) else current
