"""Deterministic discrete-event scheduler."""

from __future__ import annotations

import heapq
import itertools
import random
from typing import Any, Callable


class EventScheduler:
    """Priority queue of ``(time, seq, callback)``.

    Events at equal time fire in insertion order. Time never goes backwards.
    """

    def __init__(self, seed: int = 0):
        self.now = 0.0
        self.seed = seed
        self.rng = random.Random(seed)
        self._queue: list = []
        self._seq = itertools.count()

    def schedule(self, delay: float, callback: Callable[..., Any], *args) -> int:
        if delay < 0:
            raise ValueError("cannot schedule in the past")
        return self.at(self.now + delay, callback, *args)

    def at(self, time: float, callback: Callable[..., Any], *args) -> int:
        if time < self.now:
            raise ValueError(f"cannot schedule at {time} < now {self.now}")
        seq = next(self._seq)
        heapq.heappush(self._queue, (time, seq, callback, args))
        return seq

    def __len__(self) -> int:
        return len(self._queue)

    def peek_time(self) -> float | None:
        return self._queue[0][0] if self._queue else None

    def run_until(self, t_end: float) -> int:
        """Process every event with time <= t_end. Returns the number processed."""
        if t_end < self.now:
            raise ValueError("t_end is in the past")
        n = 0
        while self._queue and self._queue[0][0] <= t_end:
            time, _, cb, args = heapq.heappop(self._queue)
            self.now = time
            cb(*args)
            n += 1
        self.now = t_end
        return n

    def run(self) -> int:
        n = 0
        while self._queue:
            time, _, cb, args = heapq.heappop(self._queue)
            self.now = time
            cb(*args)
            n += 1
        return n
