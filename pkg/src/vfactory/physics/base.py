"""Sensor export schema and shared station machinery.

Each station publishes a fixed, ordered list of sensors per run. The
schema (name, lo, hi) is normative for register mirroring, dataset
export and the deviation metric's range normalization.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

# (sensor name, lo, hi) per exported frame id. Order is the register
# mirroring order and must stay stable within a run.
SENSOR_SCHEMAS: dict[str, list[tuple[str, int, int]]] = {
    "vc": [
        ("horizontal", 0, 600),
        ("vertical", 0, 900),
        ("rotation", 0, 1000),
        ("has_cylinder", 0, 1),
        ("cyl_at_arrival", 0, 1),
        ("cyl_at_warehouse_io", 0, 1),
    ],
    "warehouse": [
        ("cantilever_x", 0, 900),
        ("cantilever_y", 0, 600),
        ("cyl_at_belt_outer", 0, 1),
        ("cyl_at_belt_inner", 0, 1),
        ("color_reading", 0, 4000),
        ("carrying", 0, 1),
        ("rack_1_1", 0, 3),
        ("rack_2_1", 0, 3),
        ("rack_3_1", 0, 3),
        ("rack_1_2", 0, 3),
        ("rack_2_2", 0, 3),
        ("rack_3_2", 0, 3),
        ("rack_1_3", 0, 3),
        ("rack_2_3", 0, 3),
        ("rack_3_3", 0, 3),
    ],
    "furnace": [
        ("cyl_unfired", 0, 1),
        ("cyl_fired", 0, 1),
        ("platform_inside", 0, 1),
        ("platform_outside", 0, 1),
        ("oven_led", 0, 1),
    ],
    "mill": [
        ("fired_on_platform", 0, 1),
        ("cyl_at_mill", 0, 1),
        ("transport_pos", 0, 600),
        ("mill_motor", 0, 1),
    ],
    "sorting": [
        ("belt_pos", 0, 4095),
        ("barrier_entry", 0, 1),
        ("barrier_exit", 0, 1),
        ("color_reading", 0, 4000),
        ("bay_white", 0, 99),
        ("bay_red", 0, 99),
        ("bay_blue", 0, 99),
    ],
}


def sensor_schema(frame_id: str) -> list[tuple[str, int, int]]:
    return SENSOR_SCHEMAS[frame_id]


def frame_sensor_names(frame_id: str) -> list[str]:
    return [name for name, _, _ in SENSOR_SCHEMAS[frame_id]]


def sensor_range(frame_id: str, sensor: str) -> tuple[int, int]:
    for name, lo, hi in SENSOR_SCHEMAS[frame_id]:
        if name == sensor:
            return lo, hi
    raise KeyError(f"{frame_id}.{sensor}")


@dataclass(slots=True)
class SensorFrame:
    """Per-cycle snapshot of one station's sensors, in schema order."""

    station: str
    tick: int
    values: list[int]

    def as_map(self) -> dict[str, int]:
        return dict(zip(frame_sensor_names(self.station), self.values))

    def get(self, name: str) -> int:
        return self.values[frame_sensor_names(self.station).index(name)]


class JitterGate:
    """Delays rising edges of actuator commands by a seeded gaussian draw.

    Models motor spin-up scatter. With std 0 the gate is transparent and
    the run stays fully deterministic tick-for-tick.
    """

    def __init__(self, std_ticks: float, rng: random.Random):
        self.std = std_ticks
        self.rng = rng
        self._prev: dict[str, bool] = {}
        self._release: dict[str, int] = {}

    def passes(self, name: str, commanded: bool, tick: int) -> bool:
        if self.std <= 0:
            return commanded
        prev = self._prev.get(name, False)
        self._prev[name] = commanded
        if not commanded:
            self._release.pop(name, None)
            return False
        if not prev:
            delay = max(0, round(self.rng.gauss(0.0, self.std)))
            self._release[name] = tick + delay
        return tick >= self._release.get(name, tick)


def move_toward(current: int, target: int, rate: int) -> int:
    if current < target:
        return min(current + rate, target)
    if current > target:
        return max(current - rate, target)
    return current


def clamp(value: int, lo: int, hi: int) -> int:
    return lo if value < lo else hi if value > hi else value
