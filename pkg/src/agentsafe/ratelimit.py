"""Sliding-window call counters with second resolution.

One counter per (tool, window) pair. Deque-backed: O(1) record, amortized
O(1) eviction. Timestamps come from the injected clock, never the wall.
"""

from __future__ import annotations

from collections import deque


class SlidingWindowCounter:
    __slots__ = ("window_ms", "_hits")

    def __init__(self, window_s: int):
        self.window_ms = window_s * 1000
        self._hits: deque[int] = deque()

    def _evict(self, now_ms: int) -> None:
        cutoff = now_ms - self.window_ms
        while self._hits and self._hits[0] <= cutoff:
            self._hits.popleft()

    def record(self, now_ms: int) -> None:
        self._evict(now_ms)
        self._hits.append(now_ms)

    def count(self, now_ms: int) -> int:
        self._evict(now_ms)
        return len(self._hits)


class RateTracker:
    """All sliding windows for one session, keyed by (tool, window_s)."""

    def __init__(self):
        self._counters: dict[tuple[str, int], SlidingWindowCounter] = {}

    def counter(self, tool: str, window_s: int) -> SlidingWindowCounter:
        key = (tool, window_s)
        counter = self._counters.get(key)
        if counter is None:
            counter = self._counters[key] = SlidingWindowCounter(window_s)
        return counter

    def record_dispatch(self, tool: str, now_ms: int) -> None:
        """Count one dispatched call in every window tracked for the tool."""
        for (t, _w), counter in self._counters.items():
            if t == tool:
                counter.record(now_ms)

    def observe(self, tool: str, window_s: int, now_ms: int) -> int:
        return self.counter(tool, window_s).count(now_ms)
