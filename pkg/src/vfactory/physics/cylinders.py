"""Workpiece registry: every cylinder in the line, end to end."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import TargetNotFound
from ..names import COLORS

# Lifecycle in strictly increasing order; removal is allowed from any
# non-terminal state.
STATES = ("raw", "stored", "in_transit", "firing", "milling", "finished", "sorted", "removed")
_STATE_INDEX = {s: i for i, s in enumerate(STATES)}


@dataclass(slots=True)
class Cylinder:
    id: int
    color: str
    state: str
    station: str
    slot: str

    @property
    def location(self) -> tuple[str, str]:
        return (self.station, self.slot)


class CylinderRegistry:
    """Owns all cylinders; enforces forward-only lifecycle transitions."""

    def __init__(self):
        self._by_id: dict[int, Cylinder] = {}
        self._next_id = 1
        self.spawned = 0
        self.removed = 0
        self.sorted = 0

    def spawn(self, color: str, station: str, slot: str) -> Cylinder:
        if color not in COLORS:
            raise ValueError(f"unknown color {color!r}")
        cyl = Cylinder(self._next_id, color, "raw", station, slot)
        self._next_id += 1
        self._by_id[cyl.id] = cyl
        self.spawned += 1
        return cyl

    def get(self, cyl_id: int) -> Cylinder:
        cyl = self._by_id.get(cyl_id)
        if cyl is None:
            raise TargetNotFound(f"cylinder {cyl_id}")
        return cyl

    def advance(self, cyl: Cylinder, state: str) -> None:
        if _STATE_INDEX[state] < _STATE_INDEX[cyl.state]:
            raise ValueError(f"cylinder {cyl.id}: {cyl.state} -> {state} goes backwards")
        cyl.state = state
        if state == "sorted":
            self.sorted += 1

    def move(self, cyl: Cylinder, station: str, slot: str) -> None:
        cyl.station = station
        cyl.slot = slot

    def remove(self, cyl: Cylinder) -> None:
        if cyl.state in ("sorted", "removed"):
            raise TargetNotFound(f"cylinder {cyl.id} already terminal ({cyl.state})")
        cyl.state = "removed"
        cyl.station = ""
        cyl.slot = ""
        self.removed += 1

    def live(self) -> list[Cylinder]:
        """Cylinders physically present in the line (not sorted/removed)."""
        return [c for c in self._by_id.values() if c.state not in ("sorted", "removed")]

    def all(self) -> list[Cylinder]:
        return list(self._by_id.values())

    def at(self, station: str, slot: str) -> Cylinder | None:
        for c in self._by_id.values():
            if c.station == station and c.slot == slot and c.state not in ("sorted", "removed"):
                return c
        return None

    def digest_parts(self) -> list[str]:
        return [
            f"{c.id}:{c.color}:{c.state}:{c.station}:{c.slot}"
            for c in sorted(self._by_id.values(), key=lambda c: c.id)
        ]
