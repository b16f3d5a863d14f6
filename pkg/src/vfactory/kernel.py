"""Deterministic fixed-step simulation core.

Time advances in whole ticks of ``tick_ms`` milliseconds (default 20,
matching the PLC scan period). Every run phase that needs randomness
draws from a stream derived from the scenario seed and a stable label,
so adding a consumer never perturbs the draws of another.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass
from typing import Any, Callable

from .errors import PastTick

TICK_MS_DEFAULT = 20


class SimClock:
    """Monotone tick counter; sim time is derived, never wall-clock."""

    __slots__ = ("tick", "tick_ms")

    def __init__(self, tick_ms: int = TICK_MS_DEFAULT):
        self.tick = 0
        self.tick_ms = tick_ms

    @property
    def sim_time_ms(self) -> int:
        return self.tick * self.tick_ms

    def advance(self) -> int:
        self.tick += 1
        return self.tick


class EventQueue:
    """Priority queue ordered by (due_tick, sequence_number).

    The sequence number is assigned at insertion and breaks ties, which
    makes pop order a total, reproducible order.
    """

    def __init__(self):
        self._heap: list[tuple[int, int, Any]] = []
        self._next_seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, current_tick: int, due_tick: int, event: Any) -> int:
        if due_tick < current_tick:
            raise PastTick(f"due_tick {due_tick} < current tick {current_tick}")
        seq = self._next_seq
        self._next_seq += 1
        heapq.heappush(self._heap, (due_tick, seq, event))
        return seq

    def pop_due(self, tick: int) -> list[Any]:
        """Remove and return all events due at or before ``tick``, in order."""
        out = []
        while self._heap and self._heap[0][0] <= tick:
            out.append(heapq.heappop(self._heap)[2])
        return out

    def peek_due_tick(self) -> int | None:
        return self._heap[0][0] if self._heap else None


class RngHub:
    """Seeded random streams partitioned by stable label."""

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, random.Random] = {}

    def stream(self, label: str) -> random.Random:
        rng = self._streams.get(label)
        if rng is None:
            digest = hashlib.sha256(f"{self.seed}:{label}".encode()).digest()
            rng = random.Random(int.from_bytes(digest[:8], "big"))
            self._streams[label] = rng
        return rng


@dataclass(slots=True)
class TickReport:
    """Per-tick summary returned by the world's advance step."""

    tick: int
    events_fired: int
    frames_delivered: int

    def line(self) -> str:
        return f"{self.tick} {self.events_fired} {self.frames_delivered}"


EventFn = Callable[[], None]
