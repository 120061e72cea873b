"""Scenario model and bank loading.

A scenario is a scripted behavior trace: semantic events and tool calls
with expected guardrail outcomes, optional containment probes, and
taxonomy/risk tags that tie it back to the register. Files are one JSON
document per scenario (schema ships in schemas/scenario.schema.json).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ParseError, ValidationError
from ..register import DOMAINS, RiskRegister
from ..telemetry import EVENT_KINDS, EVENT_PHASES

EXPECTED_OUTCOMES = ("allowed", "denied", "escalated", "contained")

STEP_LABELS = ("injection_attempt", "exfiltration_attempt", "fabricated")

OPERATOR_VERDICTS = ("approve", "modify", "deny", "expire")

#: Banks smaller than this trigger a size warning at load.
MIN_BANK_SIZE = 50


@dataclass(frozen=True)
class EventStep:
    kind: str
    phase: str
    text: str
    confidence: float | None = None


@dataclass(frozen=True)
class OperatorScript:
    verdict: str
    modified_args: dict | None = None


@dataclass(frozen=True)
class ToolCallStep:
    tool: str
    action: str
    expect: str
    args: dict = field(default_factory=dict)
    resource: str | None = None
    intent: str = ""
    labels: tuple[str, ...] = ()
    operator: OperatorScript | None = None


@dataclass(frozen=True)
class ContainmentProbe:
    after_step: int
    level: str


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    title: str
    risk_ids: tuple[str, ...]
    domains: tuple[str, ...]
    script: tuple[EventStep | ToolCallStep, ...]
    containment_probes: tuple[ContainmentProbe, ...] = ()
    declared_objective: str = ""
    likelihood: str | None = None  # accepted, currently unused in scoring

    def tool_steps(self) -> list[tuple[int, ToolCallStep]]:
        return [(i, s) for i, s in enumerate(self.script) if isinstance(s, ToolCallStep)]


@dataclass(frozen=True)
class ScenarioBank:
    scenarios: tuple[Scenario, ...]
    warnings: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.scenarios)


def _fail(sid: str, message: str) -> ValidationError:
    return ValidationError(f"scenario {sid!r}: {message}", offender=sid)


def parse_scenario(doc: dict, register: RiskRegister) -> Scenario:
    if not isinstance(doc, dict):
        raise ValidationError("scenario document must be a JSON object")
    sid = doc.get("scenario_id")
    if not isinstance(sid, str) or not sid:
        raise ValidationError("scenario_id required")
    title = doc.get("title", "")
    risk_ids = doc.get("risk_ids")
    if not isinstance(risk_ids, list) or not risk_ids:
        raise _fail(sid, "risk_ids must be a non-empty list")
    for rid in risk_ids:
        if rid not in register.risk_ids:
            raise _fail(sid, f"unknown risk_id {rid!r}")
    domains = doc.get("domains", [])
    for d in domains:
        if d not in DOMAINS:
            raise _fail(sid, f"unknown domain {d!r}")
    raw_script = doc.get("script")
    if not isinstance(raw_script, list) or not raw_script:
        raise _fail(sid, "script must be a non-empty list of steps")
    steps: list[EventStep | ToolCallStep] = []
    for i, raw in enumerate(raw_script):
        step_type = raw.get("type")
        if step_type == "event":
            kind, phase = raw.get("kind"), raw.get("phase")
            if kind not in EVENT_KINDS or phase not in EVENT_PHASES:
                raise _fail(sid, f"step {i}: bad event kind/phase")
            steps.append(EventStep(kind=kind, phase=phase, text=raw.get("text", ""), confidence=raw.get("confidence")))
        elif step_type == "tool_call":
            expect = raw.get("expect")
            if expect not in EXPECTED_OUTCOMES:
                raise _fail(sid, f"step {i}: missing or invalid expected outcome")
            labels = tuple(raw.get("labels", []))
            for label in labels:
                if label not in STEP_LABELS:
                    raise _fail(sid, f"step {i}: unknown label {label!r}")
            operator = None
            if raw.get("operator") is not None:
                op = raw["operator"]
                if op.get("verdict") not in OPERATOR_VERDICTS:
                    raise _fail(sid, f"step {i}: invalid operator verdict")
                operator = OperatorScript(verdict=op["verdict"], modified_args=op.get("modified_args"))
            if expect == "escalated" and operator is None:
                raise _fail(sid, f"step {i}: escalated steps carry a scripted operator verdict")
            if not raw.get("tool") or not raw.get("action"):
                raise _fail(sid, f"step {i}: tool and action required")
            steps.append(
                ToolCallStep(
                    tool=raw["tool"],
                    action=raw["action"],
                    expect=expect,
                    args=raw.get("args", {}),
                    resource=raw.get("resource"),
                    intent=raw.get("intent", ""),
                    labels=labels,
                    operator=operator,
                )
            )
        else:
            raise _fail(sid, f"step {i}: unknown step type {step_type!r}")
    probes = []
    for raw in doc.get("containment_probes", []):
        level = raw.get("level")
        after_step = raw.get("after_step")
        if level not in ("pause", "isolate", "kill"):
            raise _fail(sid, f"probe level {level!r} must block (pause/isolate/kill)")
        if not isinstance(after_step, int) or not (0 <= after_step < len(steps)):
            raise _fail(sid, f"probe after_step {after_step!r} out of range")
        probes.append(ContainmentProbe(after_step=after_step, level=level))
    return Scenario(
        scenario_id=sid,
        title=title,
        risk_ids=tuple(risk_ids),
        domains=tuple(domains),
        script=tuple(steps),
        containment_probes=tuple(probes),
        declared_objective=doc.get("declared_objective", title),
        likelihood=doc.get("likelihood"),
    )


def load_scenarios(directory: str | Path, register: RiskRegister) -> ScenarioBank:
    """Load and validate every *.json scenario in a directory.

    Warns (without failing) when the bank is smaller than the expected
    50-scenario floor or when a taxonomy domain has no scenarios at all.
    """
    directory = Path(directory)
    scenarios: list[Scenario] = []
    seen: set[str] = set()
    for path in sorted(directory.glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path.name}: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
        scenario = parse_scenario(doc, register)
        if scenario.scenario_id in seen:
            raise ValidationError(f"duplicate scenario_id {scenario.scenario_id!r}", offender=scenario.scenario_id)
        seen.add(scenario.scenario_id)
        scenarios.append(scenario)
    warnings: list[str] = []
    if len(scenarios) < MIN_BANK_SIZE:
        warnings.append(f"bank has {len(scenarios)} scenarios; expected at least {MIN_BANK_SIZE}")
    tagged = {d for s in scenarios for d in s.domains}
    for domain in DOMAINS:
        if domain not in tagged:
            warnings.append(f"taxonomy domain {domain!r} has no scenarios")
    return ScenarioBank(scenarios=tuple(scenarios), warnings=tuple(warnings))
