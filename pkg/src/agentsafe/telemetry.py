"""Agent-semantic events and goal/plan drift detection.

Drift is Jaccard distance between normalized token sets of the declared
objective and the incoming goal/plan text: deterministic, dependency-free,
and explainable in an audit. An alert fires once the trailing run of
scores above the threshold reaches the trigger count, so single noisy
events do not halt a session but gradual deviation does.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .errors import ValidationError, WrongEventKind

EVENT_PHASES = ("plan", "act", "observe", "reflect")

EVENT_KINDS = ("goal", "plan", "plan-step", "tool-call-intent", "observation", "reflection")

#: Which phase each event kind is allowed to appear under.
_KIND_PHASE = {
    "goal": "plan",
    "plan": "plan",
    "plan-step": "plan",
    "tool-call-intent": "act",
    "observation": "observe",
    "reflection": "reflect",
}

_DRIFT_KINDS = ("goal", "plan")

_NON_ALNUM = re.compile(r"[^0-9a-z]+")

DEFAULT_THRESHOLD = 0.7
DEFAULT_TRIGGER_COUNT = 3
_SCORE_HISTORY = 20


@dataclass(frozen=True)
class SemanticEvent:
    event_id: str
    session_id: str
    phase: str
    kind: str
    text: str
    confidence: float | None = None
    ts: int = 0  # UTC ms

    def __post_init__(self):
        if self.phase not in EVENT_PHASES:
            raise ValidationError(f"unknown phase {self.phase!r}", offender=self.event_id)
        if self.kind not in EVENT_KINDS:
            raise ValidationError(f"unknown event kind {self.kind!r}", offender=self.event_id)
        if _KIND_PHASE[self.kind] != self.phase:
            raise ValidationError(
                f"event kind {self.kind!r} is not valid under phase {self.phase!r}",
                offender=self.event_id,
            )
        if self.confidence is not None and not (0.0 <= self.confidence <= 1.0):
            raise ValidationError("confidence must be in [0, 1]", offender=self.event_id)


@dataclass(frozen=True)
class DriftState:
    declared_objective: str
    threshold: float = DEFAULT_THRESHOLD
    trigger_count: int = DEFAULT_TRIGGER_COUNT
    last_scores: tuple[float, ...] = ()
    consecutive_above: int = 0


@dataclass(frozen=True)
class DriftAlert:
    session_id: str
    score: float
    scores: tuple[float, ...]  # the trailing above-threshold run
    threshold: float
    text: str


def tokenize(text: str) -> frozenset[str]:
    tokens = (_NON_ALNUM.sub("", t) for t in text.lower().split())
    return frozenset(t for t in tokens if t)


def drift_score(declared: str, current: str) -> float:
    """Jaccard distance of normalized token sets; 0 = identical, 1 = disjoint."""
    a, b = tokenize(declared), tokenize(current)
    if not a and not b:
        return 0.0
    if not a or not b:
        return 1.0
    return 1.0 - len(a & b) / len(a | b)


def assess_drift(state: DriftState, event: SemanticEvent) -> tuple[DriftState, DriftAlert | None]:
    """Score one goal/plan event and update the trailing-run counter."""
    if event.kind not in _DRIFT_KINDS:
        raise WrongEventKind(f"drift is assessed on goal/plan events, not {event.kind!r}")
    score = drift_score(state.declared_objective, event.text)
    consecutive = state.consecutive_above + 1 if score > state.threshold else 0
    scores = (state.last_scores + (score,))[-_SCORE_HISTORY:]
    new_state = replace(state, last_scores=scores, consecutive_above=consecutive)
    if consecutive >= state.trigger_count:
        alert = DriftAlert(
            session_id=event.session_id,
            score=score,
            scores=scores[-consecutive:],
            threshold=state.threshold,
            text=event.text,
        )
        return new_state, alert
    return new_state, None
