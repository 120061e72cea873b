"""Guardian rules, the graduated containment ladder, quarantine, and SLAs.

Guardians are independent monitors: their predicates read only ledgered
facts (decision and tool-call-request records), never the primary agent's
self-reports, so a compromised agent cannot talk its way past them.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import ValidationError
from .ledger import ProvenanceRecord
from .telemetry import DriftAlert

#: The ladder, least to most restrictive. Kill is terminal.
LADDER = ("monitor", "throttle", "pause", "isolate", "kill")

GUARDIAN_KINDS = ("denial-burst", "rate-spike", "scope-spread", "quarantine-touch")

#: Containment levels that block tool dispatch outright.
BLOCKING_LEVELS = ("pause", "isolate", "kill")

DEFAULT_DRIFT_RESPONSE = "pause"


def ladder_index(level: str) -> int:
    try:
        return LADDER.index(level)
    except ValueError:
        raise ValidationError(f"unknown containment level {level!r}", offender=level) from None


def ladder_max(a: str, b: str) -> str:
    return a if ladder_index(a) >= ladder_index(b) else b


@dataclass(frozen=True)
class GuardianRule:
    rule_id: str
    kind: str
    response_level: str
    count: int = 1  # k denials / n distinct resources / r calls-per-second
    window_s: int = 60

    def __post_init__(self):
        if self.kind not in GUARDIAN_KINDS:
            raise ValidationError(f"unknown guardian kind {self.kind!r}", offender=self.rule_id)
        ladder_index(self.response_level)
        if self.count < 1 or self.window_s < 1:
            raise ValidationError("guardian params must be positive", offender=self.rule_id)


@dataclass(frozen=True)
class GuardianAlert:
    rule_id: str
    kind: str
    evidence_seqs: tuple[int, ...]
    response_level: str


@dataclass(frozen=True)
class InterruptibilitySLA:
    max_halt_ms: int
    min_success_prob: float

    def __post_init__(self):
        if self.max_halt_ms <= 0:
            raise ValidationError("max_halt_ms must be positive")
        if not (0.0 < self.min_success_prob <= 1.0):
            raise ValidationError("min_success_prob must be in (0, 1]")


class QuarantineRegistry:
    """Set of quarantined tools/resources; membership is idempotent."""

    def __init__(self):
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()

    def add(self, target: str, cause: str, now_ms: int = 0) -> None:
        with self._lock:
            if target not in self._entries:
                self._entries[target] = {"since_ms": now_ms, "cause": cause}

    def release(self, target: str) -> bool:
        with self._lock:
            return self._entries.pop(target, None) is not None

    def contains(self, target: str | None) -> bool:
        if target is None:
            return False
        with self._lock:
            return target in self._entries

    def entries(self) -> dict[str, dict]:
        with self._lock:
            return dict(self._entries)


def parse_ts_ms(ts: str) -> int:
    dt = datetime.strptime(ts, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)
    return int(dt.timestamp() * 1000)


def _is_denial(record: ProvenanceRecord) -> bool:
    if record.kind != "decision":
        return False
    verdict = record.payload_obj().get("verdict", {})
    return verdict.get("kind") == "deny"


def evaluate_guardians(
    window: list[ProvenanceRecord],
    rules: list[GuardianRule],
    quarantine: QuarantineRegistry | None = None,
) -> list[GuardianAlert]:
    """One alert per rule whose predicate holds on the window.

    Predicates: denial-burst fires on >= k denials inside the rule window;
    rate-spike on more than r tool calls in the trailing second;
    scope-spread on more than n distinct resources inside the window;
    quarantine-touch on any call naming a quarantined tool or resource.
    """
    alerts: list[GuardianAlert] = []
    if not window:
        return alerts
    now_ms = parse_ts_ms(window[-1].ts)
    for rule in rules:
        cutoff = now_ms - rule.window_s * 1000
        if rule.kind == "denial-burst":
            seqs = tuple(
                r.seq for r in window if _is_denial(r) and parse_ts_ms(r.ts) >= cutoff
            )
            if len(seqs) >= rule.count:
                alerts.append(GuardianAlert(rule.rule_id, rule.kind, seqs, rule.response_level))
        elif rule.kind == "rate-spike":
            second_cutoff = now_ms - 1000
            seqs = tuple(
                r.seq
                for r in window
                if r.kind == "tool-call-request" and parse_ts_ms(r.ts) >= second_cutoff
            )
            if len(seqs) > rule.count:
                alerts.append(GuardianAlert(rule.rule_id, rule.kind, seqs, rule.response_level))
        elif rule.kind == "scope-spread":
            first_seen: dict[str, int] = {}
            for r in window:
                if r.kind != "tool-call-request" or parse_ts_ms(r.ts) < cutoff:
                    continue
                resource = r.payload_obj().get("resource")
                if resource and resource not in first_seen:
                    first_seen[resource] = r.seq
            if len(first_seen) > rule.count:
                alerts.append(
                    GuardianAlert(rule.rule_id, rule.kind, tuple(sorted(first_seen.values())), rule.response_level)
                )
        elif rule.kind == "quarantine-touch":
            if quarantine is None:
                continue
            seqs = []
            for r in window:
                if r.kind != "tool-call-request" or parse_ts_ms(r.ts) < cutoff:
                    continue
                payload = r.payload_obj()
                if quarantine.contains(payload.get("tool")) or quarantine.contains(payload.get("resource")):
                    seqs.append(r.seq)
            if seqs:
                alerts.append(GuardianAlert(rule.rule_id, rule.kind, tuple(seqs), rule.response_level))
    return alerts


def escalate_containment(
    current: str,
    alert: GuardianAlert | DriftAlert,
    drift_response: str = DEFAULT_DRIFT_RESPONSE,
) -> str:
    """Monotone ladder move: max(current, the alert's mapped response)."""
    response = alert.response_level if isinstance(alert, GuardianAlert) else drift_response
    return ladder_max(current, response)


_HISTOGRAM_EDGES = (1, 2, 5, 10, 20, 50, 100, 200)


@dataclass(frozen=True)
class SLAReport:
    n: int
    successes: int
    success_rate: float | None
    histogram: dict[str, int]
    meets_sla: bool
    vacuous: bool
    max_halt_ms: int
    min_success_prob: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "histogram": self.histogram,
            "meets_sla": self.meets_sla,
            "vacuous": self.vacuous,
            "max_halt_ms": self.max_halt_ms,
            "min_success_prob": self.min_success_prob,
        }


def _bucket(latency_ms: int) -> str:
    for edge in _HISTOGRAM_EDGES:
        if latency_ms <= edge:
            return f"<={edge}ms"
    return f">{_HISTOGRAM_EDGES[-1]}ms"


def measure_interruptibility(records: list[ProvenanceRecord], sla: InterruptibilitySLA) -> SLAReport:
    """SLA compliance over every blocking containment in a verified ledger.

    Zero containment events is reported as vacuously meeting the SLA with
    the ``vacuous`` warning flag set, never as a silent pass.
    """
    histogram = {f"<={e}ms" for e in _HISTOGRAM_EDGES}
    counts = {label: 0 for label in sorted(histogram)} | {f">{_HISTOGRAM_EDGES[-1]}ms": 0}
    n = 0
    successes = 0
    for record in records:
        if record.kind != "containment":
            continue
        payload = record.payload_obj()
        if payload.get("level") not in BLOCKING_LEVELS:
            continue
        latency = int(payload.get("halt_latency_ms", 0))
        n += 1
        counts[_bucket(latency)] += 1
        if latency <= sla.max_halt_ms:
            successes += 1
    if n == 0:
        return SLAReport(
            n=0,
            successes=0,
            success_rate=None,
            histogram=counts,
            meets_sla=True,
            vacuous=True,
            max_halt_ms=sla.max_halt_ms,
            min_success_prob=sla.min_success_prob,
        )
    rate = successes / n
    return SLAReport(
        n=n,
        successes=successes,
        success_rate=rate,
        histogram=counts,
        meets_sla=rate >= sla.min_success_prob,
        vacuous=False,
        max_halt_ms=sla.max_halt_ms,
        min_success_prob=sla.min_success_prob,
    )
