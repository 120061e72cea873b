"""Runtime configuration: one JSON file, path via --config or AGENTSAFE_CONFIG."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .errors import ParseError, ValidationError
from .triage import GuardianRule

ENV_VAR = "AGENTSAFE_CONFIG"


@dataclass(frozen=True)
class RuntimeConfig:
    ledger_path: str | None = None
    key_path: str | None = None
    ledger_id: str = "agentsafe"
    register_path: str | None = None
    policies_path: str | None = None
    drift_threshold: float = 0.7
    drift_trigger_count: int = 3
    drift_response_level: str = "pause"
    nonmutating_actions: tuple[str, ...] = ("read", "get", "search", "query", "list", "summarize")
    escalation_timeout_s: int = 300
    guardian_rules: tuple[GuardianRule, ...] = ()
    sla_max_halt_ms: int = 200
    sla_min_success_prob: float = 0.999
    bearer_token: str | None = None


def _parse_rule(obj: dict) -> GuardianRule:
    return GuardianRule(
        rule_id=obj["rule_id"],
        kind=obj["kind"],
        response_level=obj["response_level"],
        count=obj.get("count", 1),
        window_s=obj.get("window_s", 60),
    )


def load_config(path: str | None = None) -> RuntimeConfig:
    """Load config from an explicit path, $AGENTSAFE_CONFIG, or defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return RuntimeConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed config: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    rules = tuple(_parse_rule(r) for r in doc.get("guardian_rules", []))
    kwargs = {k: v for k, v in doc.items() if k != "guardian_rules"}
    kwargs["nonmutating_actions"] = tuple(kwargs.get("nonmutating_actions", RuntimeConfig.nonmutating_actions))
    try:
        return RuntimeConfig(guardian_rules=rules, **kwargs)
    except TypeError as exc:
        raise ValidationError(f"unknown config key: {exc}") from exc
