"""AST for the declarative policy language.

Nodes are frozen dataclasses so parse -> pretty-print -> parse round-trips
can be checked with plain equality. Effects carry the total restrictiveness
order used when several policies match one action context.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

CONTAIN_LEVELS = ("monitor", "throttle", "pause", "isolate", "kill")


@dataclass(frozen=True)
class Effect:
    """Policy effect: allow | deny | escalate | throttle f | contain level."""

    kind: str  # allow, deny, escalate, throttle, contain
    factor: float | None = None  # throttle only, in (0, 1]
    level: str | None = None  # contain only

    #: Restrictiveness ranks: contain kill > isolate > pause > deny >
    #: escalate > contain throttle > contain monitor > throttle > allow.
    _RANKS = {
        ("contain", "kill"): 100,
        ("contain", "isolate"): 90,
        ("contain", "pause"): 80,
        ("deny", None): 70,
        ("escalate", None): 60,
        ("contain", "throttle"): 55,
        ("contain", "monitor"): 52,
        ("throttle", None): 50,
        ("allow", None): 0,
    }

    @property
    def rank(self) -> int:
        key = (self.kind, self.level if self.kind == "contain" else None)
        return self._RANKS[key]

    def more_restrictive_than(self, other: "Effect") -> bool:
        if self.rank != other.rank:
            return self.rank > other.rank
        if self.kind == "throttle" and other.kind == "throttle":
            return (self.factor or 1.0) < (other.factor or 1.0)
        return False

    def to_source(self) -> str:
        if self.kind == "throttle":
            return f"throttle {_format_number(self.factor)}"
        if self.kind == "contain":
            return f"contain {self.level}"
        return self.kind


ALLOW = Effect("allow")
DENY = Effect("deny")
ESCALATE = Effect("escalate")


def most_restrictive(effects: list[Effect]) -> Effect:
    best = effects[0]
    for e in effects[1:]:
        if e.more_restrictive_than(best):
            best = e
    return best


# --- expression nodes -------------------------------------------------


@dataclass(frozen=True)
class Literal:
    value: Union[str, int, float, bool]


@dataclass(frozen=True)
class FieldRef:
    """tool | action | resource | session_id | args.<name> | session.<name>"""

    base: str
    attr: str | None = None

    @property
    def key(self) -> str:
        return self.base if self.attr is None else f"{self.base}.{self.attr}"


@dataclass(frozen=True)
class RateCall:
    tool: str
    window_s: int


@dataclass(frozen=True)
class Compare:
    op: str  # == != < <= > >=
    left: "Operand"
    right: "Operand"


@dataclass(frozen=True)
class Membership:
    left: "Operand"
    items: tuple["Operand", ...]


@dataclass(frozen=True)
class GlobMatch:
    left: "Operand"
    pattern: str


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    operands: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["Expr", ...]


@dataclass(frozen=True)
class Truthy:
    """A bare operand used as a condition (must be boolean-valued)."""

    operand: "Operand"


Operand = Union[Literal, FieldRef, RateCall]
Expr = Union[Compare, Membership, GlobMatch, Not, And, Or, Truthy]


@dataclass(frozen=True)
class Policy:
    name: str
    condition: Expr
    effect: Effect
    severity: str = "medium"
    reason: str = ""
    risk_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class PolicySet:
    policies: tuple[Policy, ...]
    source_digest: str
    version_label: str = ""

    def names(self) -> list[str]:
        return [p.name for p in self.policies]

    def without(self, name: str) -> "PolicySet":
        """Copy with one policy disabled; used by the mutation harness."""
        kept = tuple(p for p in self.policies if p.name != name)
        if len(kept) == len(self.policies):
            raise KeyError(name)
        return PolicySet(policies=kept, source_digest=self.source_digest, version_label=self.version_label)

    def rate_probes(self) -> set[tuple[str, int]]:
        probes: set[tuple[str, int]] = set()
        for p in self.policies:
            _collect_rates(p.condition, probes)
        return probes


def _collect_rates(node, probes: set[tuple[str, int]]) -> None:
    if isinstance(node, RateCall):
        probes.add((node.tool, node.window_s))
    elif isinstance(node, (Compare,)):
        _collect_rates(node.left, probes)
        _collect_rates(node.right, probes)
    elif isinstance(node, Membership):
        _collect_rates(node.left, probes)
        for item in node.items:
            _collect_rates(item, probes)
    elif isinstance(node, GlobMatch):
        _collect_rates(node.left, probes)
    elif isinstance(node, Not):
        _collect_rates(node.operand, probes)
    elif isinstance(node, (And, Or)):
        for op in node.operands:
            _collect_rates(op, probes)
    elif isinstance(node, Truthy):
        _collect_rates(node.operand, probes)


# --- pretty printing ---------------------------------------------------


def _format_number(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    text = repr(float(value))
    return text


def _escape(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def operand_to_source(node: Operand) -> str:
    if isinstance(node, Literal):
        if isinstance(node.value, bool):
            return "true" if node.value else "false"
        if isinstance(node.value, str):
            return _escape(node.value)
        return _format_number(node.value)
    if isinstance(node, FieldRef):
        return node.key
    if isinstance(node, RateCall):
        return f"rate({_escape(node.tool)}, {node.window_s})"
    raise TypeError(node)


def expr_to_source(node: Expr, parent_prec: int = 0) -> str:
    # precedence: or=1, and=2, not=3, comparison/atom=4; same-precedence
    # nesting is parenthesized so the printed tree reparses structurally equal
    if isinstance(node, Or):
        text = " or ".join(expr_to_source(o, 1) for o in node.operands)
        return f"({text})" if parent_prec >= 1 else text
    if isinstance(node, And):
        text = " and ".join(expr_to_source(o, 2) for o in node.operands)
        return f"({text})" if parent_prec >= 2 else text
    if isinstance(node, Not):
        return f"not {expr_to_source(node.operand, 3)}"
    if isinstance(node, Compare):
        return f"{operand_to_source(node.left)} {node.op} {operand_to_source(node.right)}"
    if isinstance(node, Membership):
        items = ", ".join(operand_to_source(i) for i in node.items)
        return f"{operand_to_source(node.left)} in [{items}]"
    if isinstance(node, GlobMatch):
        return f"{operand_to_source(node.left)} matches {_escape(node.pattern)}"
    if isinstance(node, Truthy):
        return operand_to_source(node.operand)
    raise TypeError(node)


def policy_to_source(policy: Policy) -> str:
    lines = [f"policy {_escape(policy.name)} {{"]
    lines.append(f"  when {expr_to_source(policy.condition)}")
    lines.append(f"  then {policy.effect.to_source()}")
    lines.append(f"  severity {policy.severity}")
    if policy.reason:
        lines.append(f"  reason {_escape(policy.reason)}")
    if policy.risk_ids:
        lines.append(f"  risk {', '.join(policy.risk_ids)}")
    lines.append("}")
    return "\n".join(lines)


def policyset_to_source(policy_set: PolicySet) -> str:
    return "\n\n".join(policy_to_source(p) for p in policy_set.policies) + ("\n" if policy_set.policies else "")
