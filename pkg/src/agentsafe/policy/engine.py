"""Policy evaluation and linting.

Evaluation is a pure function of (policy set, action context): every
policy whose condition holds matches, and the verdict is the most
restrictive matched effect. If nothing matches, the verdict is Deny with
reason "default-deny": least privilege is the floor, not a configuration.

Missing data never widens access. An unknown argument referenced by a
condition, or a runtime type mismatch, makes that comparison false, which
can only remove matches and therefore can only push the verdict toward
the default-deny floor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fnmatch import fnmatchcase

from ..register import RiskRegister
from .ast import (
    DENY,
    And,
    Compare,
    Effect,
    FieldRef,
    GlobMatch,
    Literal,
    Membership,
    Not,
    Or,
    Policy,
    PolicySet,
    RateCall,
    Truthy,
)

Scalar = str | int | float | bool

_MISSING = object()


@dataclass(frozen=True)
class ActionContext:
    session_id: str
    tool: str
    action: str
    args: dict[str, Scalar] = field(default_factory=dict)
    resource: str | None = None
    session_attrs: dict[str, Scalar] = field(default_factory=dict)
    rates: dict[tuple[str, int], int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.tool or not self.action:
            raise ValueError("tool and action must be non-empty")


@dataclass(frozen=True)
class Decision:
    verdict: Effect
    matched_policies: tuple[str, ...]
    reason: str
    policy_digest: str
    decided_at: int  # UTC ms


def _resolve(node, ctx: ActionContext):
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, RateCall):
        return ctx.rates.get((node.tool, node.window_s), 0)
    if isinstance(node, FieldRef):
        if node.attr is None:
            value = getattr(ctx, node.base)
            return _MISSING if value is None else value
        source = ctx.args if node.base == "args" else ctx.session_attrs
        return source.get(node.attr, _MISSING)
    raise TypeError(node)


def _same_class(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool)
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return True
    return isinstance(a, str) and isinstance(b, str)


def _eval_expr(node, ctx: ActionContext) -> bool:
    if isinstance(node, Compare):
        left, right = _resolve(node.left, ctx), _resolve(node.right, ctx)
        if left is _MISSING or right is _MISSING or not _same_class(left, right):
            return False
        if node.op == "==":
            return left == right
        if node.op == "!=":
            return left != right
        if isinstance(left, bool):  # no ordering on booleans
            return False
        if node.op == "<":
            return left < right
        if node.op == "<=":
            return left <= right
        if node.op == ">":
            return left > right
        return left >= right
    if isinstance(node, Membership):
        left = _resolve(node.left, ctx)
        if left is _MISSING:
            return False
        for item in node.items:
            value = _resolve(item, ctx)
            if value is not _MISSING and _same_class(left, value) and left == value:
                return True
        return False
    if isinstance(node, GlobMatch):
        left = _resolve(node.left, ctx)
        if left is _MISSING or not isinstance(left, str):
            return False
        return fnmatchcase(left, node.pattern)
    if isinstance(node, Not):
        return not _eval_expr(node.operand, ctx)
    if isinstance(node, And):
        return all(_eval_expr(o, ctx) for o in node.operands)
    if isinstance(node, Or):
        return any(_eval_expr(o, ctx) for o in node.operands)
    if isinstance(node, Truthy):
        value = _resolve(node.operand, ctx)
        return value is True
    raise TypeError(node)


def evaluate(policy_set: PolicySet, ctx: ActionContext, now_ms: int = 0) -> Decision:
    """Evaluate every policy against one action context.

    Combination rule: most restrictive matched effect wins; ties between
    throttle effects resolve to the smallest factor.
    """
    matched: list[Policy] = []
    for policy in policy_set.policies:
        if _eval_expr(policy.condition, ctx):
            matched.append(policy)
    if not matched:
        return Decision(
            verdict=DENY,
            matched_policies=(),
            reason="default-deny",
            policy_digest=policy_set.source_digest,
            decided_at=now_ms,
        )
    winner = matched[0].effect
    for policy in matched[1:]:
        if policy.effect.more_restrictive_than(winner):
            winner = policy.effect
    reason = next(p.reason or p.name for p in matched if p.effect == winner)
    return Decision(
        verdict=winner,
        matched_policies=tuple(p.name for p in matched),
        reason=reason,
        policy_digest=policy_set.source_digest,
        decided_at=now_ms,
    )


def policy_digest(policy_set: PolicySet) -> str:
    return policy_set.source_digest


# --- linting ------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    level: str  # error | warning
    code: str
    message: str
    policy: str | None = None

    def __str__(self) -> str:
        where = f" [{self.policy}]" if self.policy else ""
        return f"{self.level}: {self.code}: {self.message}{where}"


def lint_policies(policy_set: PolicySet, register: RiskRegister) -> list[Diagnostic]:
    """Validate a policy set against the risk register.

    Errors: policy references a risk the register does not define.
    Warnings: register risks with no referencing policy ("uncovered risk")
    and conditions that are provably constant-false (unreachable).
    """
    diagnostics: list[Diagnostic] = []
    known = register.risk_ids
    referenced: set[str] = set()
    for policy in policy_set.policies:
        for rid in policy.risk_ids:
            referenced.add(rid)
            if rid not in known:
                diagnostics.append(
                    Diagnostic("error", "unknown-risk", f"risk {rid!r} not present in register", policy.name)
                )
    for risk in register.risks:
        if risk.risk_id not in referenced:
            diagnostics.append(
                Diagnostic("warning", "uncovered-risk", f"register risk {risk.risk_id!r} has no referencing policy")
            )
    for policy in policy_set.policies:
        if _is_constant_false(policy.condition):
            diagnostics.append(
                Diagnostic("warning", "unreachable", "condition is constant-false", policy.name)
            )
    return diagnostics


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.level == "error" for d in diagnostics)


# Constant-false detection enumerates candidate values per referenced
# field: every literal the condition mentions plus boundary neighbours,
# a glob witness per pattern, booleans, and "absent". If no combination
# satisfies the condition, it is unreachable. The search is capped; a
# condition too large to enumerate is simply not flagged.
_ENUM_CAP = 20_000


def _glob_witness(pattern: str) -> str | None:
    out: list[str] = []
    i = 0
    while i < len(pattern):
        ch = pattern[i]
        if ch == "*" or ch == "?":
            out.append("x")
            i += 1
        elif ch == "[":
            j = pattern.find("]", i + 1)
            if j == -1:
                return None
            body = pattern[i + 1 : j]
            if body.startswith("!"):
                for candidate in "abcxyz019":
                    if not fnmatchcase(candidate, f"[{body}]"):
                        out.append(candidate)
                        break
                else:
                    return None
            else:
                first = body[0]
                out.append(first)
            i = j + 1
        else:
            out.append(ch)
            i += 1
    witness = "".join(out)
    return witness if fnmatchcase(witness, pattern) else None


def _collect_candidates(node, pools: dict[str, set]) -> None:
    def pool_for(operand) -> str | None:
        if isinstance(operand, FieldRef):
            return "field:" + operand.key
        if isinstance(operand, RateCall):
            return f"rate:{operand.tool}:{operand.window_s}"
        return None

    def add(operand, values) -> None:
        key = pool_for(operand)
        if key is not None:
            pools.setdefault(key, set()).update(values)

    if isinstance(node, Compare):
        for side, other in ((node.left, node.right), (node.right, node.left)):
            if isinstance(other, Literal):
                value = other.value
                if isinstance(value, bool):
                    add(side, {True, False})
                elif isinstance(value, (int, float)):
                    add(side, {value, value - 1, value + 1})
                else:
                    add(side, {value})
        # field-to-field comparison: make both pools share values later
        for side in (node.left, node.right):
            key = pool_for(side)
            if key is not None:
                pools.setdefault(key, set())
    elif isinstance(node, Membership):
        values = {i.value for i in node.items if isinstance(i, Literal)}
        add(node.left, values)
    elif isinstance(node, GlobMatch):
        witness = _glob_witness(node.pattern)
        add(node.left, {witness} if witness is not None else set())
    elif isinstance(node, Truthy):
        add(node.operand, {True, False})
    elif isinstance(node, Not):
        _collect_candidates(node.operand, pools)
    elif isinstance(node, (And, Or)):
        for op in node.operands:
            _collect_candidates(op, pools)


def _is_constant_false(condition) -> bool:
    pools: dict[str, set] = {}
    _collect_candidates(condition, pools)
    # Shared value pool covers field-to-field comparisons.
    union: set = set()
    for values in pools.values():
        union.update(values)
    keys = sorted(pools)
    candidate_lists: list[list] = []
    for key in keys:
        values = set(pools[key]) | union
        values.add("\x00-fresh")  # a value unequal to everything mentioned
        candidates = sorted(values, key=repr)
        candidates.append(_MISSING)
        candidate_lists.append(candidates)
    total = 1
    for lst in candidate_lists:
        total *= len(lst)
        if total > _ENUM_CAP:
            return False
    for combo in itertools.product(*candidate_lists):
        assignment = dict(zip(keys, combo))
        ctx = _synth_ctx(assignment)
        if _eval_expr(condition, ctx):
            return False
    return True


def _synth_ctx(assignment: dict[str, object]) -> ActionContext:
    args: dict[str, Scalar] = {}
    attrs: dict[str, Scalar] = {}
    rates: dict[tuple[str, int], int] = {}
    base: dict[str, str] = {"tool": "\x00t", "action": "\x00a", "session_id": "\x00s"}
    resource: str | None = None
    for key, value in assignment.items():
        if key.startswith("rate:"):
            _, tool, window = key.split(":")
            if value is not _MISSING and isinstance(value, (int, float)) and not isinstance(value, bool):
                rates[(tool, int(window))] = int(value)
            continue
        fieldkey = key[len("field:"):]
        if value is _MISSING:
            continue
        if fieldkey.startswith("args."):
            args[fieldkey[5:]] = value  # type: ignore[assignment]
        elif fieldkey.startswith("session."):
            attrs[fieldkey[8:]] = value  # type: ignore[assignment]
        elif fieldkey == "resource":
            if isinstance(value, str):
                resource = value
        elif fieldkey in ("tool", "action", "session_id"):
            if isinstance(value, str):
                base[fieldkey] = value
    return ActionContext(
        session_id=base["session_id"],
        tool=base["tool"],
        action=base["action"],
        args=args,
        resource=resource,
        session_attrs=attrs,
        rates=rates,
    )
