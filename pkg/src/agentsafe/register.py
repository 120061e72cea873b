"""The Agent Risk Register: machine-readable capability-to-risk mapping.

Every other subsystem references risks by ID, so the register is loaded
once, fully cross-checked, and then treated as immutable. The taxonomy
vocabulary is closed: nine lowercase domain tokens and four severity
levels with fixed numeric weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import jsoncanon
from .errors import ParseError, UnknownCapability, ValidationError

PHASES = ("plan", "act", "observe", "reflect")

DOMAINS = (
    "security",
    "privacy",
    "fairness",
    "safety",
    "accountability",
    "transparency",
    "systemic",
    "human-computer-interaction",
    "societal",
)

SEVERITIES = ("low", "medium", "high", "critical")

#: Severity weights used by the Risk Coverage Score.
SEVERITY_WEIGHTS = {"low": 1, "medium": 2, "high": 3, "critical": 5}

CAUSAL_ENTITIES = ("human", "ai")
CAUSAL_INTENTS = ("intentional", "unintentional")


@dataclass(frozen=True)
class RateLimit:
    count: int
    window_s: int


@dataclass(frozen=True)
class CapabilityProfile:
    capability_id: str
    phase: str
    tool: str
    actions: tuple[str, ...]
    resource_scopes: tuple[str, ...] = ()
    rate_limit: RateLimit | None = None


@dataclass(frozen=True)
class RiskEntry:
    risk_id: str
    capability_id: str
    name: str
    causal: tuple[str, str]  # (entity, intent)
    domains: tuple[str, ...]
    severity: str
    human_critical: bool = False
    scenario_note: str = ""
    raci: dict[str, str] | None = None  # inert metadata, round-tripped only


@dataclass(frozen=True)
class RiskRegister:
    register_id: str
    agent_id: str
    version: int
    capabilities: tuple[CapabilityProfile, ...]
    risks: tuple[RiskEntry, ...]

    def capability(self, capability_id: str) -> CapabilityProfile:
        for cap in self.capabilities:
            if cap.capability_id == capability_id:
                return cap
        raise UnknownCapability(f"unknown capability {capability_id!r}")

    def risk(self, risk_id: str) -> RiskEntry:
        for r in self.risks:
            if r.risk_id == risk_id:
                return r
        raise ValidationError(f"unknown risk {risk_id!r}", offender=risk_id)

    @property
    def risk_ids(self) -> frozenset[str]:
        return frozenset(r.risk_id for r in self.risks)


@dataclass(frozen=True)
class CoverageReport:
    counts: dict[str, int]  # per taxonomy domain
    uncovered: tuple[str, ...] = ()


_TOP_KEYS = {"register_id", "agent_id", "version", "capabilities", "risks"}
_CAP_KEYS = {"capability_id", "phase", "tool", "actions", "resource_scopes", "rate_limit"}
_RISK_KEYS = {
    "risk_id",
    "capability_id",
    "name",
    "causal",
    "domains",
    "severity",
    "human_critical",
    "scenario_note",
    "raci",
}


def _require(cond: bool, message: str, offender: str | None = None) -> None:
    if not cond:
        raise ValidationError(message, offender=offender)


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(f"unknown key(s) {sorted(unknown)} in {where}", offender=where)


def _parse_capability(obj: dict) -> CapabilityProfile:
    _require(isinstance(obj, dict), "capability entry must be an object")
    cid = obj.get("capability_id")
    _require(isinstance(cid, str) and cid, "capability_id must be a non-empty string")
    _reject_unknown(obj, _CAP_KEYS, f"capability {cid!r}")
    phase = obj.get("phase")
    _require(phase in PHASES, f"capability {cid!r}: phase must be one of {PHASES}", offender=cid)
    tool = obj.get("tool")
    _require(isinstance(tool, str) and tool, f"capability {cid!r}: tool required", offender=cid)
    actions = obj.get("actions")
    _require(
        isinstance(actions, list) and actions and all(isinstance(a, str) for a in actions),
        f"capability {cid!r}: actions must be a non-empty list of strings",
        offender=cid,
    )
    scopes = obj.get("resource_scopes", [])
    _require(
        isinstance(scopes, list) and all(isinstance(s, str) for s in scopes),
        f"capability {cid!r}: resource_scopes must be a list of strings",
        offender=cid,
    )
    rate = obj.get("rate_limit")
    limit = None
    if rate is not None:
        _require(isinstance(rate, dict), f"capability {cid!r}: rate_limit must be an object", offender=cid)
        _reject_unknown(rate, {"count", "window_s"}, f"rate_limit of {cid!r}")
        count, window = rate.get("count"), rate.get("window_s")
        _require(
            isinstance(count, int) and count >= 1 and isinstance(window, int) and window >= 1,
            f"capability {cid!r}: rate_limit needs count >= 1 and window_s >= 1",
            offender=cid,
        )
        limit = RateLimit(count=count, window_s=window)
    return CapabilityProfile(
        capability_id=cid,
        phase=phase,
        tool=tool,
        actions=tuple(actions),
        resource_scopes=tuple(scopes),
        rate_limit=limit,
    )


def _parse_risk(obj: dict) -> RiskEntry:
    _require(isinstance(obj, dict), "risk entry must be an object")
    rid = obj.get("risk_id")
    _require(isinstance(rid, str) and rid, "risk_id must be a non-empty string")
    _reject_unknown(obj, _RISK_KEYS, f"risk {rid!r}")
    cap_id = obj.get("capability_id")
    _require(isinstance(cap_id, str) and cap_id, f"risk {rid!r}: capability_id required", offender=rid)
    name = obj.get("name")
    _require(isinstance(name, str) and name, f"risk {rid!r}: name required", offender=rid)
    causal = obj.get("causal")
    _require(
        isinstance(causal, list)
        and len(causal) == 2
        and causal[0] in CAUSAL_ENTITIES
        and causal[1] in CAUSAL_INTENTS,
        f"risk {rid!r}: causal must be [entity, intent] from {CAUSAL_ENTITIES} x {CAUSAL_INTENTS}",
        offender=rid,
    )
    domains = obj.get("domains")
    _require(
        isinstance(domains, list) and domains,
        f"risk {rid!r}: domains must be a non-empty list",
        offender=rid,
    )
    for d in domains:
        _require(d in DOMAINS, f"risk {rid!r}: unknown domain {d!r}", offender=rid)
    _require(len(set(domains)) == len(domains), f"risk {rid!r}: duplicate domains", offender=rid)
    severity = obj.get("severity")
    _require(severity in SEVERITIES, f"risk {rid!r}: severity must be one of {SEVERITIES}", offender=rid)
    human_critical = obj.get("human_critical", False)
    _require(isinstance(human_critical, bool), f"risk {rid!r}: human_critical must be boolean", offender=rid)
    note = obj.get("scenario_note", "")
    _require(isinstance(note, str), f"risk {rid!r}: scenario_note must be a string", offender=rid)
    raci = obj.get("raci")
    if raci is not None:
        _require(
            isinstance(raci, dict)
            and all(isinstance(k, str) and isinstance(v, str) for k, v in raci.items()),
            f"risk {rid!r}: raci must map role to party",
            offender=rid,
        )
    return RiskEntry(
        risk_id=rid,
        capability_id=cap_id,
        name=name,
        causal=(causal[0], causal[1]),
        domains=tuple(domains),
        severity=severity,
        human_critical=human_critical,
        scenario_note=note,
        raci=dict(raci) if raci is not None else None,
    )


def load_register(document: str) -> RiskRegister:
    """Parse and fully cross-check a register document.

    Raises ParseError on malformed JSON (with position) and ValidationError
    on any invariant violation, naming the offending ID.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed register document: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    if not isinstance(doc, dict):
        raise ValidationError("register document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "register document")
    for key in ("register_id", "agent_id", "version", "capabilities", "risks"):
        _require(key in doc, f"missing top-level key {key!r}")
    _require(isinstance(doc["register_id"], str) and doc["register_id"], "register_id required")
    _require(isinstance(doc["agent_id"], str) and doc["agent_id"], "agent_id required")
    version = doc["version"]
    _require(isinstance(version, int) and version >= 1, "version must be an integer >= 1")
    _require(isinstance(doc["capabilities"], list), "capabilities must be a list")
    _require(isinstance(doc["risks"], list), "risks must be a list")

    capabilities = tuple(_parse_capability(c) for c in doc["capabilities"])
    risks = tuple(_parse_risk(r) for r in doc["risks"])

    seen_caps: set[str] = set()
    for cap in capabilities:
        _require(cap.capability_id not in seen_caps, f"duplicate capability_id {cap.capability_id!r}", offender=cap.capability_id)
        seen_caps.add(cap.capability_id)
    seen_risks: set[str] = set()
    for risk in risks:
        _require(risk.risk_id not in seen_risks, f"duplicate risk_id {risk.risk_id!r}", offender=risk.risk_id)
        seen_risks.add(risk.risk_id)
        _require(
            risk.capability_id in seen_caps,
            f"risk {risk.risk_id!r} references unknown capability {risk.capability_id!r}",
            offender=risk.capability_id,
        )

    return RiskRegister(
        register_id=doc["register_id"],
        agent_id=doc["agent_id"],
        version=version,
        capabilities=capabilities,
        risks=risks,
    )


def export_register(register: RiskRegister) -> str:
    """Canonical JSON export; load(export(r)) is structurally equal to r."""
    caps = []
    for c in register.capabilities:
        obj: dict = {
            "capability_id": c.capability_id,
            "phase": c.phase,
            "tool": c.tool,
            "actions": list(c.actions),
            "resource_scopes": list(c.resource_scopes),
        }
        if c.rate_limit is not None:
            obj["rate_limit"] = {"count": c.rate_limit.count, "window_s": c.rate_limit.window_s}
        caps.append(obj)
    risks = []
    for r in register.risks:
        obj = {
            "risk_id": r.risk_id,
            "capability_id": r.capability_id,
            "name": r.name,
            "causal": list(r.causal),
            "domains": list(r.domains),
            "severity": r.severity,
            "human_critical": r.human_critical,
            "scenario_note": r.scenario_note,
        }
        if r.raci is not None:
            obj["raci"] = r.raci
        risks.append(obj)
    return jsoncanon.dumps(
        {
            "register_id": register.register_id,
            "agent_id": register.agent_id,
            "version": register.version,
            "capabilities": caps,
            "risks": risks,
        }
    )


def taxonomy_coverage(register: RiskRegister) -> CoverageReport:
    """Per-domain risk counts plus the list of domains with zero risks."""
    counts = {d: 0 for d in DOMAINS}
    for risk in register.risks:
        for d in risk.domains:
            counts[d] += 1
    uncovered = tuple(d for d in DOMAINS if counts[d] == 0)
    return CoverageReport(counts=counts, uncovered=uncovered)


def lookup_risks(register: RiskRegister, capability_id: str) -> list[RiskEntry]:
    """All risks mapped to a capability, in register order."""
    if capability_id not in {c.capability_id for c in register.capabilities}:
        raise UnknownCapability(f"unknown capability {capability_id!r}")
    return [r for r in register.risks if r.capability_id == capability_id]
