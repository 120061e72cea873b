"""Lexer and recursive-descent parser for the policy language.

Grammar (also shipped in docs/policy-grammar.ebnf):

    policyset := policy*
    policy    := "policy" STRING "{" "when" expr "then" effect meta* "}"
    effect    := "allow" | "deny" | "escalate" | "throttle" NUMBER
               | "contain" ("monitor"|"throttle"|"pause"|"isolate"|"kill")
    meta      := "severity" ("low"|"medium"|"high"|"critical")
               | "reason" STRING | "risk" IDENT ("," IDENT)*

Conditions support ==, !=, <, <=, >, >=, `in [..]`, and/or/not, glob
`matches "pattern"`, and `rate(tool, seconds)`. No loops, no user
functions: every condition terminates.

A static type pass rejects conditions that compare fields of known type
against incompatible literals; args.* and session.* attributes are
dynamically typed and checked at evaluation time instead (mismatches
evaluate to false).
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

from ..errors import ParseError, PolicyTypeError
from .ast import (
    CONTAIN_LEVELS,
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

_SEVERITIES = ("low", "medium", "high", "critical")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>-?\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_-]*)
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<op>==|!=|<=|>=|<|>|\(|\)|\[|\]|\{|\}|,|\.)
    """,
    re.VERBOSE,
)

_KEYWORDS = {
    "policy", "when", "then", "allow", "deny", "escalate", "throttle", "contain",
    "severity", "reason", "risk", "and", "or", "not", "in", "matches", "true",
    "false", "rate",
}


@dataclass(frozen=True)
class Token:
    kind: str  # keyword, ident, string, number, op, eof
    value: str
    line: int
    column: int


def _unescape(raw: str, line: int, column: int) -> str:
    body = raw[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            i += 1
            if i >= len(body):
                raise ParseError("dangling escape in string", line, column)
            esc = body[i]
            mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc)
            if mapped is None:
                raise ParseError(f"unknown escape \\{esc}", line, column)
            out.append(mapped)
        else:
            out.append(ch)
        i += 1
    return "".join(out)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            col = pos - line_start + 1
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "ws" or kind == "comment":
            pass
        elif kind == "ident":
            tok_kind = "keyword" if text in _KEYWORDS else "ident"
            tokens.append(Token(tok_kind, text, line, col))
        elif kind == "string":
            tokens.append(Token("string", _unescape(text, line, col), line, col))
        else:
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # --- token plumbing

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.cur
        self.i += 1
        return tok

    def fail(self, message: str) -> ParseError:
        tok = self.cur
        return ParseError(message, tok.line, tok.column)

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.cur
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            raise self.fail(f"expected {want!r}, found {tok.value!r}")
        return self.advance()

    def accept(self, kind: str, value: str | None = None) -> Token | None:
        tok = self.cur
        if tok.kind == kind and (value is None or tok.value == value):
            return self.advance()
        return None

    # --- grammar

    def policyset(self) -> list[Policy]:
        policies: list[Policy] = []
        while self.cur.kind != "eof":
            policies.append(self.policy())
        return policies

    def policy(self) -> Policy:
        self.expect("keyword", "policy")
        name = self.expect("string").value
        self.expect("op", "{")
        self.expect("keyword", "when")
        condition = self.expr()
        self.expect("keyword", "then")
        effect = self.effect()
        severity = "medium"
        reason = ""
        risk_ids: list[str] = []
        while not self.accept("op", "}"):
            if self.accept("keyword", "severity"):
                tok = self.advance()
                if tok.value not in _SEVERITIES:
                    raise ParseError(f"invalid severity {tok.value!r}", tok.line, tok.column)
                severity = tok.value
            elif self.accept("keyword", "reason"):
                reason = self.expect("string").value
            elif self.accept("keyword", "risk"):
                risk_ids.append(self.expect("ident").value)
                while self.accept("op", ","):
                    risk_ids.append(self.expect("ident").value)
            else:
                raise self.fail("expected severity/reason/risk or '}'")
        return Policy(
            name=name,
            condition=condition,
            effect=effect,
            severity=severity,
            reason=reason,
            risk_ids=tuple(risk_ids),
        )

    def effect(self) -> Effect:
        tok = self.advance()
        if tok.kind != "keyword":
            raise ParseError(f"expected an effect, found {tok.value!r}", tok.line, tok.column)
        if tok.value in ("allow", "deny", "escalate"):
            return Effect(tok.value)
        if tok.value == "throttle":
            num = self.expect("number")
            factor = float(num.value)
            if not (0.0 < factor <= 1.0):
                raise ParseError("throttle factor must be in (0, 1]", num.line, num.column)
            return Effect("throttle", factor=factor)
        if tok.value == "contain":
            lvl = self.advance()
            level = lvl.value
            if level not in CONTAIN_LEVELS:
                raise ParseError(f"invalid containment level {level!r}", lvl.line, lvl.column)
            return Effect("contain", level=level)
        raise ParseError(f"expected an effect, found {tok.value!r}", tok.line, tok.column)

    def expr(self):
        operands = [self.and_expr()]
        while self.accept("keyword", "or"):
            operands.append(self.and_expr())
        return operands[0] if len(operands) == 1 else Or(tuple(operands))

    def and_expr(self):
        operands = [self.not_expr()]
        while self.accept("keyword", "and"):
            operands.append(self.not_expr())
        return operands[0] if len(operands) == 1 else And(tuple(operands))

    def not_expr(self):
        if self.accept("keyword", "not"):
            return Not(self.not_expr())
        if self.accept("op", "("):
            inner = self.expr()
            self.expect("op", ")")
            return inner
        return self.comparison()

    def comparison(self):
        left = self.operand()
        tok = self.cur
        if tok.kind == "op" and tok.value in ("==", "!=", "<", "<=", ">", ">="):
            self.advance()
            right = self.operand()
            return Compare(tok.value, left, right)
        if tok.kind == "keyword" and tok.value == "in":
            self.advance()
            self.expect("op", "[")
            items = [self.operand()]
            while self.accept("op", ","):
                items.append(self.operand())
            self.expect("op", "]")
            return Membership(left, tuple(items))
        if tok.kind == "keyword" and tok.value == "matches":
            self.advance()
            pattern = self.expect("string").value
            return GlobMatch(left, pattern)
        return Truthy(left)

    def operand(self):
        tok = self.cur
        if tok.kind == "number":
            self.advance()
            if "." in tok.value:
                return Literal(float(tok.value))
            return Literal(int(tok.value))
        if tok.kind == "string":
            self.advance()
            return Literal(tok.value)
        if tok.kind == "keyword" and tok.value in ("true", "false"):
            self.advance()
            return Literal(tok.value == "true")
        if tok.kind == "keyword" and tok.value == "rate":
            self.advance()
            self.expect("op", "(")
            tool_tok = self.cur
            if tool_tok.kind in ("ident", "string"):
                self.advance()
            else:
                raise self.fail("rate() takes a tool name")
            self.expect("op", ",")
            window_tok = self.expect("number")
            if "." in window_tok.value or int(window_tok.value) < 1:
                raise ParseError("rate() window must be a positive integer of seconds", window_tok.line, window_tok.column)
            self.expect("op", ")")
            return RateCall(tool_tok.value, int(window_tok.value))
        if tok.kind == "ident":
            self.advance()
            if self.accept("op", "."):
                attr = self.cur
                if attr.kind not in ("ident", "keyword"):
                    raise self.fail("expected attribute name after '.'")
                self.advance()
                if tok.value not in ("args", "session"):
                    raise ParseError(f"unknown field base {tok.value!r} (use args.* or session.*)", tok.line, tok.column)
                return FieldRef(tok.value, attr.value)
            if tok.value not in ("tool", "action", "resource", "session_id"):
                raise ParseError(
                    f"unknown field {tok.value!r} (expected tool/action/resource/session_id/args.*/session.*)",
                    tok.line,
                    tok.column,
                )
            return FieldRef(tok.value)
        raise self.fail(f"expected a value or field, found {tok.value!r}")


# --- static typing -----------------------------------------------------

#: Fields with statically known types. args.* and session.* are dynamic.
_KNOWN_STR_FIELDS = {"tool", "action", "resource", "session_id"}


def _static_type(node) -> str | None:
    """Return 'str' | 'num' | 'bool' for operands of known type, else None."""
    if isinstance(node, Literal):
        if isinstance(node.value, bool):
            return "bool"
        if isinstance(node.value, str):
            return "str"
        return "num"
    if isinstance(node, FieldRef):
        return "str" if node.key in _KNOWN_STR_FIELDS else None
    if isinstance(node, RateCall):
        return "num"
    return None


def _check_types(node, policy_name: str) -> None:
    if isinstance(node, Compare):
        lt, rt = _static_type(node.left), _static_type(node.right)
        if lt is not None and rt is not None and lt != rt:
            raise PolicyTypeError(
                f"policy {policy_name!r}: cannot compare {lt} with {rt} in condition"
            )
        if node.op in ("<", "<=", ">", ">="):
            for t in (lt, rt):
                if t == "bool":
                    raise PolicyTypeError(
                        f"policy {policy_name!r}: ordering comparison on a boolean"
                    )
    elif isinstance(node, Membership):
        lt = _static_type(node.left)
        item_types = [_static_type(i) for i in node.items]
        known = [t for t in item_types if t is not None]
        if lt is not None and known and all(t != lt for t in known):
            raise PolicyTypeError(
                f"policy {policy_name!r}: membership list has no element of type {lt}"
            )
    elif isinstance(node, GlobMatch):
        lt = _static_type(node.left)
        if lt is not None and lt != "str":
            raise PolicyTypeError(f"policy {policy_name!r}: matches requires a string operand")
    elif isinstance(node, Truthy):
        t = _static_type(node.operand)
        if t is not None and t != "bool":
            raise PolicyTypeError(
                f"policy {policy_name!r}: bare condition operand must be boolean, got {t}"
            )
    elif isinstance(node, Not):
        _check_types(node.operand, policy_name)
    elif isinstance(node, (And, Or)):
        for op in node.operands:
            _check_types(op, policy_name)


# --- entry points ------------------------------------------------------


def canonicalize_source(source: str) -> str:
    """Normalize line endings to LF and strip trailing whitespace per line."""
    text = source.replace("\r\n", "\n").replace("\r", "\n")
    return "\n".join(line.rstrip() for line in text.split("\n"))


def source_digest(source: str) -> str:
    return hashlib.sha256(canonicalize_source(source).encode("utf-8")).hexdigest()


def parse_policy(source: str, version_label: str = "") -> PolicySet:
    """Parse policy source into an AST-backed PolicySet.

    Raises ParseError (with line/column) on syntax errors and
    PolicyTypeError on ill-typed conditions. Duplicate policy names are a
    ParseError: names must be unique within a set.
    """
    tokens = tokenize(source)
    policies = _Parser(tokens).policyset()
    seen: set[str] = set()
    for p in policies:
        if p.name in seen:
            raise ParseError(f"duplicate policy name {p.name!r}")
        seen.add(p.name)
        _check_types(p.condition, p.name)
    return PolicySet(
        policies=tuple(policies),
        source_digest=source_digest(source),
        version_label=version_label,
    )
