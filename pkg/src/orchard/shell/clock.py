"""Time sources. Deterministic runs inject a TickClock instead of wall time."""

from __future__ import annotations

import threading
import time
from typing import Protocol


class Clock(Protocol):
    def now(self) -> float: ...


class SystemClock:
    def now(self) -> float:
        return time.time()


class TickClock:
    """Monotonic counter clock; every call advances by a fixed step."""

    def __init__(self, start: float = 0.0, step: float = 1.0) -> None:
        self._next = start
        self._step = step
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            value = self._next
            self._next += self._step
        return value
