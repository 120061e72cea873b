"""Exception taxonomy shared across the package.

Every error that crosses a module boundary is defined here so callers
(gateway, CLI, HTTP layer) can map them to outcomes without importing
internals.
"""

from __future__ import annotations


class AgentSafeError(Exception):
    """Base class for all domain errors."""


class ParseError(AgentSafeError):
    """Malformed document (register JSON, policy source, scenario file).

    Carries line/column when the underlying parser knows them.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message)


class ValidationError(AgentSafeError):
    """Structurally valid document that violates an invariant.

    ``offender`` names the ID at fault (dangling reference, duplicate, ...).
    """

    def __init__(self, message: str, offender: str | None = None):
        self.offender = offender
        super().__init__(message)


class PolicyTypeError(AgentSafeError):
    """Condition expression is ill-typed (e.g. string field compared to a number)."""


class UnknownCapability(AgentSafeError):
    pass


class EvaluationError(AgentSafeError):
    """Reserved for future policy-evaluation failures; unused in practice."""


class LintFailure(AgentSafeError):
    """Policy set has error-level diagnostics against the register."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class SealedSession(AgentSafeError):
    """Append attempted on a session whose ledger stream was sealed by kill."""


class CanonicalizationError(AgentSafeError):
    """Payload is not representable as canonical JSON."""


class UnverifiedLedger(AgentSafeError):
    """Graph construction requested on a ledger that fails chain verification."""


class UnknownSession(AgentSafeError):
    pass


class SessionClosed(AgentSafeError):
    pass


class LadderViolation(AgentSafeError):
    """Containment move downward, other than the operator pause->monitor release."""


class LedgerUnavailable(AgentSafeError):
    pass


class UnsupportedFormat(AgentSafeError):
    pass


class WrongEventKind(AgentSafeError):
    pass


class UnknownTicket(AgentSafeError):
    pass


class AlreadyDecided(AgentSafeError):
    pass


class InvalidModification(AgentSafeError):
    """Operator modification touches keys absent from the original request."""


class HarnessError(AgentSafeError):
    """Evaluation harness misconfiguration (e.g. mock tool missing)."""


class EmptyRegister(AgentSafeError):
    pass
