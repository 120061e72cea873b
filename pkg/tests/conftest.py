from __future__ import annotations

import json
from pathlib import Path

import pytest

from agentsafe.clock import VirtualClock
from agentsafe.gateway import Gateway
from agentsafe.ledger import Ledger, LedgerKey
from agentsafe.policy import parse_policy
from agentsafe.register import load_register

BANK_DIR = Path(__file__).resolve().parent.parent / "bank"

#: The healthcare diagnostic agent register used throughout the examples:
#: six capability->risk rows plus one deliberately unmapped capability.
TABLE1_REGISTER = {
    "register_id": "healthcare-demo",
    "agent_id": "diagnostic-agent",
    "version": 1,
    "capabilities": [
        {"capability_id": "ehr-read", "phase": "act", "tool": "ehr",
         "actions": ["read", "query", "summarize", "write", "update", "delete"],
         "resource_scopes": ["patient/*"]},
        {"capability_id": "treatment-reco", "phase": "act", "tool": "treatment",
         "actions": ["recommend", "update"]},
        {"capability_id": "drug-exec", "phase": "act", "tool": "drugcheck",
         "actions": ["execute"]},
        {"capability_id": "insurance-api", "phase": "act", "tool": "insurance",
         "actions": ["query", "update"]},
        {"capability_id": "collab", "phase": "act", "tool": "collab",
         "actions": ["message"]},
        {"capability_id": "explain", "phase": "act", "tool": "explain",
         "actions": ["generate"]},
        {"capability_id": "notes-read", "phase": "observe", "tool": "notes",
         "actions": ["read"]},
    ],
    "risks": [
        {"risk_id": "R-001", "capability_id": "ehr-read", "name": "Covert Data Exfiltration",
         "causal": ["ai", "unintentional"], "domains": ["privacy", "security"],
         "severity": "critical", "human_critical": False,
         "scenario_note": "identifiable patient data leaks while summarizing case history"},
        {"risk_id": "R-002", "capability_id": "treatment-reco", "name": "Plan Drift",
         "causal": ["ai", "unintentional"], "domains": ["fairness", "safety"],
         "severity": "high", "human_critical": False,
         "scenario_note": "shifts from evidence-based protocols to speculative treatments"},
        {"risk_id": "R-003", "capability_id": "drug-exec", "name": "Code-Execution Hazards",
         "causal": ["human", "intentional"], "domains": ["safety", "security"],
         "severity": "high", "human_critical": False,
         "scenario_note": "malicious input triggers unsafe execution"},
        {"risk_id": "R-004", "capability_id": "insurance-api", "name": "Tool-Chain Prompt Injection",
         "causal": ["human", "intentional"], "domains": ["security", "accountability"],
         "severity": "high", "human_critical": False,
         "scenario_note": "crafted inputs manipulate tool calls to misreport eligibility"},
        {"risk_id": "R-005", "capability_id": "collab", "name": "Multi-Agent Collusion",
         "causal": ["ai", "unintentional"], "domains": ["systemic"],
         "severity": "medium", "human_critical": False,
         "scenario_note": "two agents coordinate actions without required oversight"},
        {"risk_id": "R-006", "capability_id": "explain", "name": "False Legibility",
         "causal": ["ai", "unintentional"], "domains": ["transparency"],
         "severity": "medium", "human_critical": False,
         "scenario_note": "overly simplistic justification misleads clinician and patient"},
    ],
}


@pytest.fixture
def table1_json() -> str:
    return json.dumps(TABLE1_REGISTER)


@pytest.fixture
def table1_register(table1_json):
    return load_register(table1_json)


SIMPLE_POLICIES = """
policy "allow-ehr" {
  when tool == "ehr"
  then allow
  severity low
  reason "in-scope ehr"
}

policy "no-ehr-write" {
  when tool == "ehr" and action in ["write", "update", "delete"]
  then deny
  severity high
  reason "read-only EHR access"
  risk R-001
}

policy "allow-treatment" {
  when tool == "treatment"
  then allow
  severity low
}

policy "escalate-treatment-update" {
  when tool == "treatment" and action == "update"
  then escalate
  severity critical
  reason "treatment change needs clinician"
  risk R-002
}

policy "allow-notes" {
  when tool == "notes"
  then allow
  severity low
}
"""


@pytest.fixture
def simple_policy_set():
    return parse_policy(SIMPLE_POLICIES)


@pytest.fixture
def bank_register():
    return load_register((BANK_DIR / "register.json").read_text(encoding="utf-8"))


@pytest.fixture
def bank_policies():
    return parse_policy((BANK_DIR / "policies.asp").read_text(encoding="utf-8"))


def make_gateway(register, policy_set, *, auto_tick_ms=1, seed=b"k" * 32, **kwargs) -> Gateway:
    clock = VirtualClock(start_ms=1_700_000_000_000, auto_tick_ms=auto_tick_ms)
    counter = iter(range(1, 10_000))
    return Gateway(
        register=register,
        policy_set=policy_set,
        ledger=Ledger(LedgerKey.generate(seed=seed), clock=clock),
        clock=clock,
        session_id_factory=lambda: f"s{next(counter):04d}",
        escalation_id_factory=iter(f"esc-{n}" for n in range(1, 10_000)).__next__,
        **kwargs,
    )


@pytest.fixture
def simple_gateway(table1_register, simple_policy_set) -> Gateway:
    return make_gateway(table1_register, simple_policy_set)
