"""Human-oversight escalation queue.

Tickets carry the suspended action, its rationale, and projected impact.
Resolution is exactly-once: the status transition is the serialization
point, so of any number of racing decide/expire calls exactly one wins
and the losers get AlreadyDecided. Whoever wins is responsible for
completing the suspended authorization (the gateway drives that).
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass
from typing import Any, Callable

from .errors import AlreadyDecided, InvalidModification, UnknownTicket

PENDING = "pending"
TERMINAL_STATUSES = ("approved", "modified", "denied", "expired")

DEFAULT_TIMEOUT_S = 300


@dataclass
class EscalationTicket:
    escalation_id: str
    session_id: str
    request: Any  # the suspended ToolCallRequest
    rationale: str
    projected_impact: str
    risk_ids: tuple[str, ...]
    requested_at: int  # UTC ms
    status: str = PENDING
    decided_at: int | None = None
    operator_id: str | None = None
    modified_args: dict | None = None

    def to_dict(self) -> dict:
        req = self.request
        return {
            "escalation_id": self.escalation_id,
            "session_id": self.session_id,
            "request": {
                "tool": req.tool,
                "action": req.action,
                "args": dict(req.args),
                "resource": req.resource,
                "intent": req.intent,
            },
            "rationale": self.rationale,
            "projected_impact": self.projected_impact,
            "risk_ids": list(self.risk_ids),
            "status": self.status,
            "requested_at": self.requested_at,
            "decided_at": self.decided_at,
            "operator_id": self.operator_id,
            "modified_args": self.modified_args,
        }


@dataclass(frozen=True)
class EscalationDecision:
    escalation_id: str
    verdict: str  # approve | modify | deny | expire
    operator_id: str | None
    decided_at: int
    modified_args: dict | None = None

    def to_dict(self) -> dict:
        return {
            "escalation_id": self.escalation_id,
            "verdict": self.verdict,
            "operator_id": self.operator_id,
            "decided_at": self.decided_at,
            "modified_args": self.modified_args,
        }


_VERDICT_STATUS = {"approve": "approved", "modify": "modified", "deny": "denied"}


class TicketStore:
    """Concurrent-safe ticket registry with atomic state transitions."""

    def __init__(self, timeout_s: int = DEFAULT_TIMEOUT_S, id_factory: Callable[[], str] | None = None):
        self.timeout_s = timeout_s
        self._id_factory = id_factory or (lambda: f"esc-{uuid.uuid4().hex[:12]}")
        self._tickets: dict[str, EscalationTicket] = {}
        self._lock = threading.Lock()

    def enqueue(
        self,
        session_id: str,
        request: Any,
        rationale: str,
        projected_impact: str,
        risk_ids: tuple[str, ...],
        now_ms: int,
    ) -> EscalationTicket:
        ticket = EscalationTicket(
            escalation_id=self._id_factory(),
            session_id=session_id,
            request=request,
            rationale=rationale,
            projected_impact=projected_impact,
            risk_ids=risk_ids,
            requested_at=now_ms,
        )
        with self._lock:
            self._tickets[ticket.escalation_id] = ticket
        return ticket

    def get(self, escalation_id: str) -> EscalationTicket:
        with self._lock:
            ticket = self._tickets.get(escalation_id)
        if ticket is None:
            raise UnknownTicket(f"no escalation ticket {escalation_id!r}")
        return ticket

    def list(self, status: str | None = None) -> list[EscalationTicket]:
        with self._lock:
            tickets = list(self._tickets.values())
        if status is not None:
            tickets = [t for t in tickets if t.status == status]
        return sorted(tickets, key=lambda t: t.requested_at)

    def decide(
        self,
        escalation_id: str,
        verdict: str,
        operator_id: str,
        now_ms: int,
        modified_args: dict | None = None,
    ) -> EscalationDecision:
        """Atomically move a pending ticket to its terminal status.

        ``modify`` may only override argument values already present in the
        original request; tool and action are never modifiable.
        """
        if verdict not in _VERDICT_STATUS:
            raise InvalidModification(f"unknown verdict {verdict!r}")
        if verdict == "modify":
            if not modified_args:
                raise InvalidModification("modify requires modified_args")
        elif modified_args:
            raise InvalidModification(f"modified_args only valid with verdict 'modify'")
        with self._lock:
            ticket = self._tickets.get(escalation_id)
            if ticket is None:
                raise UnknownTicket(f"no escalation ticket {escalation_id!r}")
            if ticket.status != PENDING:
                raise AlreadyDecided(f"ticket {escalation_id} already {ticket.status}")
            if verdict == "modify":
                extra = set(modified_args) - set(ticket.request.args)
                if extra:
                    raise InvalidModification(f"modified_args adds unknown keys {sorted(extra)}")
            ticket.status = _VERDICT_STATUS[verdict]
            ticket.decided_at = now_ms
            ticket.operator_id = operator_id
            ticket.modified_args = dict(modified_args) if modified_args else None
        return EscalationDecision(
            escalation_id=escalation_id,
            verdict=verdict,
            operator_id=operator_id,
            decided_at=now_ms,
            modified_args=dict(modified_args) if modified_args else None,
        )

    def expire(self, now_ms: int) -> list[EscalationTicket]:
        """Expire every pending ticket older than the configured timeout."""
        expired: list[EscalationTicket] = []
        cutoff = now_ms - self.timeout_s * 1000
        with self._lock:
            for ticket in self._tickets.values():
                if ticket.status == PENDING and ticket.requested_at < cutoff:
                    ticket.status = "expired"
                    ticket.decided_at = now_ms
                    expired.append(ticket)
        return expired
