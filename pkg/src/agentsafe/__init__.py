"""Runtime governance middleware for tool-using agents.

Least-privilege policy gates on every tool call, a signed tamper-evident
provenance ledger, drift detection, graduated containment with human
escalation, and a scenario-bank evaluation harness.
"""

from .apg import ActionProvenanceGraph, build_apg, export_apg
from .clock import SystemClock, VirtualClock
from .errors import AgentSafeError
from .gateway import AuthorizationOutcome, Gateway, Session, ToolCallRequest
from .ledger import Ledger, LedgerKey, ProvenanceRecord, VerificationReport, verify_chain
from .policy import ActionContext, Decision, PolicySet, evaluate, lint_policies, parse_policy
from .register import RiskRegister, load_register, lookup_risks, taxonomy_coverage
from .telemetry import DriftState, SemanticEvent, assess_drift, drift_score
from .triage import GuardianRule, InterruptibilitySLA, QuarantineRegistry, measure_interruptibility

__version__ = "0.1.0"

__all__ = [
    "ActionContext",
    "ActionProvenanceGraph",
    "AgentSafeError",
    "AuthorizationOutcome",
    "Decision",
    "DriftState",
    "Gateway",
    "GuardianRule",
    "InterruptibilitySLA",
    "Ledger",
    "LedgerKey",
    "PolicySet",
    "ProvenanceRecord",
    "QuarantineRegistry",
    "RiskRegister",
    "SemanticEvent",
    "Session",
    "SystemClock",
    "ToolCallRequest",
    "VerificationReport",
    "VirtualClock",
    "assess_drift",
    "build_apg",
    "drift_score",
    "evaluate",
    "export_apg",
    "lint_policies",
    "load_register",
    "lookup_risks",
    "measure_interruptibility",
    "parse_policy",
    "taxonomy_coverage",
    "verify_chain",
]
