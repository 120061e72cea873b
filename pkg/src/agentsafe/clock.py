"""Injectable clocks.

The gateway and harness never call ``time.time()`` directly: they take a
Clock so SLA latencies are measurable deterministically in tests. The
virtual clock can auto-advance a fixed quantum per reading, which gives
every pipeline stage a nonzero, reproducible duration.
"""

from __future__ import annotations

import time
from datetime import datetime, timezone


class Clock:
    def now_ms(self) -> int:
        raise NotImplementedError


class SystemClock(Clock):
    def now_ms(self) -> int:
        return time.time_ns() // 1_000_000


class VirtualClock(Clock):
    def __init__(self, start_ms: int = 0, auto_tick_ms: int = 0):
        self._now = int(start_ms)
        self.auto_tick_ms = int(auto_tick_ms)

    def now_ms(self) -> int:
        value = self._now
        self._now += self.auto_tick_ms
        return value

    def advance(self, ms: int) -> None:
        self._now += int(ms)


def rfc3339_ms(ts_ms: int) -> str:
    """UTC timestamp string with millisecond precision."""
    dt = datetime.fromtimestamp(ts_ms / 1000.0, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts_ms % 1000:03d}Z"
