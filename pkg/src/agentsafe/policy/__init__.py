from .ast import (
    ALLOW,
    CONTAIN_LEVELS,
    DENY,
    ESCALATE,
    Effect,
    Policy,
    PolicySet,
    policy_to_source,
    policyset_to_source,
)
from .engine import ActionContext, Decision, Diagnostic, evaluate, has_errors, lint_policies, policy_digest
from .parser import canonicalize_source, parse_policy, source_digest

__all__ = [
    "ALLOW",
    "CONTAIN_LEVELS",
    "DENY",
    "ESCALATE",
    "ActionContext",
    "Decision",
    "Diagnostic",
    "Effect",
    "Policy",
    "PolicySet",
    "canonicalize_source",
    "evaluate",
    "has_errors",
    "lint_policies",
    "parse_policy",
    "policy_digest",
    "policy_to_source",
    "policyset_to_source",
    "source_digest",
]
