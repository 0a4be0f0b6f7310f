"""Controllable clock for compressed-timeline simulations."""

from __future__ import annotations

import threading


class SimClock:
    """A monotone settable clock; inject as ``Platform(clock=simclock)``."""

    def __init__(self, start: float = 1_700_000_000.0):
        self._now = float(start)
        self._lock = threading.Lock()

    def __call__(self) -> float:
        with self._lock:
            return self._now

    def set(self, t: float) -> None:
        with self._lock:
            if t > self._now:
                self._now = t

    def advance(self, dt: float) -> None:
        with self._lock:
            self._now += max(0.0, dt)
