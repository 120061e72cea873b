from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import pytest

from agentsafe.errors import AlreadyDecided, InvalidModification, UnknownTicket
from agentsafe.escalation import TicketStore
from agentsafe.gateway import ToolCallRequest


def _request(**args):
    return ToolCallRequest(session_id="s", tool="treatment", action="update", args=args or {"dose": "10mg"})


def _store(timeout_s=300) -> TicketStore:
    counter = iter(range(1, 10_000))
    return TicketStore(timeout_s=timeout_s, id_factory=lambda: f"esc-{next(counter)}")


def test_enqueue_creates_pending_ticket():
    store = _store()
    ticket = store.enqueue("s", _request(), "change dose", "dose change; risks: X", ("R-1",), now_ms=1000)
    assert ticket.status == "pending"
    assert store.get(ticket.escalation_id).rationale == "change dose"
    assert store.list("pending") == [ticket]


def test_two_escalations_distinct_tickets():
    store = _store()
    a = store.enqueue("s", _request(), "r", "p", (), now_ms=1)
    b = store.enqueue("s", _request(), "r", "p", (), now_ms=2)
    assert a.escalation_id != b.escalation_id


def test_approve_then_second_decide_conflicts():
    store = _store()
    ticket = store.enqueue("s", _request(), "r", "p", (), now_ms=1)
    decision = store.decide(ticket.escalation_id, "approve", "op-1", now_ms=5)
    assert decision.verdict == "approve"
    assert store.get(ticket.escalation_id).status == "approved"
    with pytest.raises(AlreadyDecided):
        store.decide(ticket.escalation_id, "deny", "op-2", now_ms=6)


def test_modify_requires_subset_of_original_args():
    store = _store()
    ticket = store.enqueue("s", _request(dose="10mg", route="oral"), "r", "p", (), now_ms=1)
    with pytest.raises(InvalidModification):
        store.decide(ticket.escalation_id, "modify", "op", now_ms=2, modified_args={"dose": "5mg", "new": 1})
    decision = store.decide(ticket.escalation_id, "modify", "op", now_ms=3, modified_args={"dose": "5mg"})
    assert decision.modified_args == {"dose": "5mg"}
    assert store.get(ticket.escalation_id).status == "modified"


def test_modify_without_args_invalid():
    store = _store()
    ticket = store.enqueue("s", _request(), "r", "p", (), now_ms=1)
    with pytest.raises(InvalidModification):
        store.decide(ticket.escalation_id, "modify", "op", now_ms=2)


def test_unknown_ticket():
    with pytest.raises(UnknownTicket):
        _store().decide("nope", "approve", "op", now_ms=1)


def test_expiry_boundary():
    store = _store(timeout_s=300)
    old = store.enqueue("s", _request(), "r", "p", (), now_ms=0)
    fresh = store.enqueue("s", _request(), "r", "p", (), now_ms=2000)
    # old is 301s of age, fresh is 299s
    expired = store.expire(now_ms=301_000)
    assert [t.escalation_id for t in expired] == [old.escalation_id]
    assert store.get(fresh.escalation_id).status == "pending"
    assert store.expire(now_ms=301_000) == []  # no pending beyond cutoff now


def test_exactly_once_under_decide_expire_races():
    store = _store(timeout_s=1)
    ticket = store.enqueue("s", _request(), "r", "p", (), now_ms=0)

    outcomes: list[str] = []

    def race(i: int):
        try:
            if i % 2:
                store.decide(ticket.escalation_id, "approve" if i % 4 == 1 else "deny", f"op-{i}", now_ms=5000)
                return "decided"
            expired = store.expire(now_ms=5000)
            return "expired" if expired else "noop"
        except AlreadyDecided:
            return "conflict"

    with ThreadPoolExecutor(max_workers=16) as pool:
        outcomes = list(pool.map(race, range(100)))

    winners = [o for o in outcomes if o in ("decided", "expired")]
    assert len(winners) == 1
    assert store.get(ticket.escalation_id).status in ("approved", "denied", "expired")
