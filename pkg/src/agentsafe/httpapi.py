"""HTTP/JSON wire protocol over the gateway.

All response bodies are canonical JSON. Authentication is an optional
static bearer token; deployment hardening beyond that is out of scope.
The escalation endpoints run the expiry sweep on every read, so pending
tickets age out under the configured timeout without a background task.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import Response

from . import jsoncanon
from .apg import build_apg, export_apg
from .errors import (
    AgentSafeError,
    AlreadyDecided,
    InvalidModification,
    LadderViolation,
    LintFailure,
    ParseError,
    SealedSession,
    SessionClosed,
    UnknownSession,
    UnknownTicket,
    UnsupportedFormat,
    UnverifiedLedger,
    ValidationError,
)
from .gateway import Gateway, ToolCallRequest
from .ledger import verify_chain
from .policy import parse_policy
from .register import load_register
from .telemetry import SemanticEvent

_STATUS = {
    UnknownSession: 404,
    UnknownTicket: 404,
    AlreadyDecided: 409,
    LadderViolation: 409,
    SealedSession: 409,
    SessionClosed: 409,
    InvalidModification: 400,
    ValidationError: 400,
    ParseError: 400,
    LintFailure: 400,
    UnsupportedFormat: 400,
    UnverifiedLedger: 409,
}


def _json(payload, status_code: int = 200) -> Response:
    return Response(
        content=jsoncanon.dumps(payload), status_code=status_code, media_type="application/json"
    )


def _error(exc: Exception) -> Response:
    code = 500
    for etype, status in _STATUS.items():
        if isinstance(exc, etype):
            code = status
            break
    return _json({"error": type(exc).__name__, "detail": str(exc)}, status_code=code)


class _RefCache:
    """Loads register/policy documents named by request refs, once each."""

    def __init__(self):
        self._registers: dict[str, object] = {}
        self._policies: dict[str, object] = {}

    def register(self, ref: str):
        if ref not in self._registers:
            self._registers[ref] = load_register(Path(ref).read_text(encoding="utf-8"))
        return self._registers[ref]

    def policies(self, ref: str):
        if ref not in self._policies:
            self._policies[ref] = parse_policy(Path(ref).read_text(encoding="utf-8"))
        return self._policies[ref]


def build_app(gateway: Gateway, bearer_token: str | None = None) -> FastAPI:
    app = FastAPI(title="agentsafe gateway", version="0.1.0")
    refs = _RefCache()

    @app.middleware("http")
    async def _auth(request: Request, call_next):
        if bearer_token is not None:
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {bearer_token}":
                return _json({"error": "Unauthorized", "detail": "bad bearer token"}, 401)
        try:
            return await call_next(request)
        except AgentSafeError as exc:
            return _error(exc)
        except ValueError as exc:
            return _json({"error": "ValueError", "detail": str(exc)}, 400)

    @app.post("/v1/sessions")
    async def open_session(request: Request):
        body = await request.json()
        register = refs.register(body["register_ref"]) if body.get("register_ref") else None
        policy_set = refs.policies(body["policy_ref"]) if body.get("policy_ref") else None
        session = gateway.open_session(
            agent_id=body["agent_id"],
            declared_objective=body.get("declared_objective", ""),
            register=register,
            policy_set=policy_set,
        )
        return _json({"session_id": session.session_id})

    @app.post("/v1/sessions/{session_id}/events")
    async def post_event(session_id: str, request: Request):
        body = await request.json()
        session = gateway.session(session_id)
        event = SemanticEvent(
            event_id=body.get("event_id") or f"{session_id}/e{gateway.clock.now_ms()}",
            session_id=session_id,
            phase=body["phase"],
            kind=body["kind"],
            text=body.get("text", ""),
            confidence=body.get("confidence"),
            ts=gateway.clock.now_ms(),
        )
        gateway.submit_event(session, event)
        return _json({"event_id": event.event_id})

    @app.post("/v1/sessions/{session_id}/tool-calls")
    async def post_tool_call(session_id: str, request: Request):
        body = await request.json()
        session = gateway.session(session_id)
        outcome = gateway.authorize_tool_call(
            session,
            ToolCallRequest(
                session_id=session_id,
                tool=body["tool"],
                action=body["action"],
                args=body.get("args", {}),
                resource=body.get("resource"),
                intent=body.get("intent", ""),
                confidence=body.get("confidence"),
                labels=tuple(body.get("labels", [])),
            ),
        )
        return _json(outcome.to_dict())

    @app.post("/v1/sessions/{session_id}/containment")
    async def post_containment(session_id: str, request: Request):
        body = await request.json()
        session = gateway.session(session_id)
        record = gateway.apply_containment(
            session, body["level"], cause=body.get("cause", "operator"), source="operator"
        )
        return _json(record.to_dict())

    @app.get("/v1/sessions")
    async def list_sessions():
        return _json({"sessions": [gateway.session_status(sid) for sid in sorted(gateway.sessions)]})

    @app.get("/v1/sessions/{session_id}")
    async def get_session(session_id: str):
        return _json(gateway.session_status(session_id))

    @app.get("/v1/sessions/{session_id}/apg")
    async def get_apg(session_id: str, format: str = "json"):
        graph = build_apg(gateway.ledger, session_id)
        document = export_apg(graph, format)
        media = "application/json" if format == "json" else "text/plain"
        return Response(content=document, media_type=media)

    @app.get("/v1/ledger/verify")
    async def get_verify():
        return _json(verify_chain(gateway.ledger).to_dict())

    @app.get("/v1/escalations")
    async def list_escalations(status: str | None = None):
        gateway.expire_escalations()
        tickets = gateway.tickets.list(status)
        return _json({"tickets": [t.to_dict() for t in tickets]})

    @app.get("/v1/escalations/{escalation_id}")
    async def get_escalation(escalation_id: str):
        gateway.expire_escalations()
        return _json(gateway.tickets.get(escalation_id).to_dict())

    @app.post("/v1/escalations/{escalation_id}/decision")
    async def post_decision(escalation_id: str, request: Request):
        body = await request.json()
        decision = gateway.decide_escalation(
            escalation_id,
            verdict=body["verdict"],
            operator_id=body["operator_id"],
            modified_args=body.get("modified_args"),
        )
        ticket = gateway.tickets.get(escalation_id)
        session = gateway.session(ticket.session_id)
        resolution = session.resolutions.get(escalation_id)
        return _json(
            {
                "decision": decision.to_dict(),
                "resolution": resolution.to_dict() if resolution else None,
            }
        )

    return app
