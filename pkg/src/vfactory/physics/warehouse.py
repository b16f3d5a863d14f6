"""High-bay warehouse: transfer belt, cantilever and a 3x3 rack.

Cylinders arrive on the outer belt end (dropped there by the gripper),
ride the belt inwards past a color sensor, and are racked by the
cantilever. Unloading runs the same path in reverse, ending with the
cylinder back on the outer belt end for the gripper to collect. Rack
bookkeeping is the (X, Y, color) triple, X and Y being 1-based grid
coordinates.
"""

from __future__ import annotations

import random

from ..names import COLOR_CODES
from .base import JitterGate, SensorFrame, clamp
from .cylinders import CylinderRegistry

COILS = ("belt_in", "belt_out", "x_fwd", "x_back", "y_fwd", "y_back", "grab")

SLOTS = [(x, y) for y in (1, 2, 3) for x in (1, 2, 3)]


class WarehouseStation:
    frame_id = "warehouse"

    def __init__(self, params: dict, registry: CylinderRegistry, jitter: JitterGate,
                 diag, color_rng: random.Random, color_noise_std: float,
                 color_nominals: dict[str, int], color_baseline: int):
        self.p = params
        self.reg = registry
        self.jitter = jitter
        self.diag = diag
        self.color_rng = color_rng
        self.color_noise_std = color_noise_std
        self.color_nominals = color_nominals
        self.color_baseline = color_baseline
        self.cant_x = 0
        self.cant_y = 0
        self.carrying: int | None = None
        self.belt_running = False
        self.belt_progress = 0
        self.belt_cyl: int | None = None
        self.belt_dir = 0  # +1 inwards, -1 outwards
        self.rack: dict[tuple[int, int], int] = {}

    def slot_coords(self, x: int, y: int) -> tuple[int, int]:
        return (
            self.p["slot_base_x"] + (x - 1) * self.p["slot_pitch_x"],
            self.p["slot_base_y"] + (y - 1) * self.p["slot_pitch_y"],
        )

    def stock(self, cyl_id: int, x: int, y: int) -> None:
        """Directly place a cylinder in the rack (initial conditions)."""
        if (x, y) in self.rack:
            raise ValueError(f"slot ({x},{y}) occupied")
        cyl = self.reg.get(cyl_id)
        self.rack[(x, y)] = cyl_id
        self.reg.move(cyl, "warehouse", f"rack:{x},{y}")
        self.reg.advance(cyl, "stored")

    def _move_cantilever(self, tick: int, act: dict) -> None:
        fx = self.jitter.passes("wx+", bool(act.get("x_fwd")), tick)
        bx = self.jitter.passes("wx-", bool(act.get("x_back")), tick)
        if fx and bx:
            self.diag(tick, "warehouse", "conflicting cantilever x commands")
        elif fx:
            self.cant_x = clamp(self.cant_x + self.p["rate_x"], 0, self.p["max_x"])
        elif bx:
            self.cant_x = clamp(self.cant_x - self.p["rate_x"], 0, self.p["max_x"])
        fy = self.jitter.passes("wy+", bool(act.get("y_fwd")), tick)
        by = self.jitter.passes("wy-", bool(act.get("y_back")), tick)
        if fy and by:
            self.diag(tick, "warehouse", "conflicting cantilever y commands")
        elif fy:
            self.cant_y = clamp(self.cant_y + self.p["rate_y"], 0, self.p["max_y"])
        elif by:
            self.cant_y = clamp(self.cant_y - self.p["rate_y"], 0, self.p["max_y"])

    def _step_belt(self, tick: int, act: dict) -> None:
        belt_in = self.jitter.passes("belt_in", bool(act.get("belt_in")), tick)
        belt_out = self.jitter.passes("belt_out", bool(act.get("belt_out")), tick)
        if belt_in and belt_out:
            self.diag(tick, "warehouse", "conflicting belt commands")
            self.belt_running = False
            return
        self.belt_running = belt_in or belt_out
        if not self.belt_running:
            return
        transit = self.p["belt_transit_ticks"]
        if belt_in:
            if self.belt_cyl is None:
                cyl = self.reg.at("warehouse", "belt_outer")
                if cyl is not None:
                    self.belt_cyl = cyl.id
                    self.belt_progress = 0
                    self.reg.move(cyl, "warehouse", "belt")
            elif self.belt_dir >= 0:
                self.belt_progress += 1
                if self.belt_progress >= transit:
                    cyl = self.reg.get(self.belt_cyl)
                    self.reg.move(cyl, "warehouse", "belt_inner")
                    self.belt_cyl = None
            self.belt_dir = 1
        else:
            if self.belt_cyl is None:
                cyl = self.reg.at("warehouse", "belt_inner")
                if cyl is not None:
                    self.belt_cyl = cyl.id
                    self.belt_progress = 0
                    self.reg.move(cyl, "warehouse", "belt")
            elif self.belt_dir <= 0:
                self.belt_progress += 1
                if self.belt_progress >= transit:
                    cyl = self.reg.get(self.belt_cyl)
                    self.reg.move(cyl, "warehouse", "belt_outer")
                    self.belt_cyl = None
            self.belt_dir = -1

    def _near(self, x: int, y: int) -> bool:
        return abs(self.cant_x - x) < self.p["rate_x"] and abs(self.cant_y - y) < self.p["rate_y"]

    def _grab_release(self, tick: int, act: dict) -> None:
        grab = bool(act.get("grab"))
        if grab and self.carrying is None:
            bx, by = self.p["pos_belt"]
            if self._near(bx, by):
                cyl = self.reg.at("warehouse", "belt_inner")
                if cyl is not None:
                    self.carrying = cyl.id
                    self.reg.move(cyl, "warehouse", "cantilever")
                    return
            for (sx, sy), cid in list(self.rack.items()):
                if self._near(*self.slot_coords(sx, sy)):
                    self.carrying = cid
                    del self.rack[(sx, sy)]
                    cyl = self.reg.get(cid)
                    self.reg.move(cyl, "warehouse", "cantilever")
                    self.reg.advance(cyl, "in_transit")
                    return
        elif not grab and self.carrying is not None:
            cyl = self.reg.get(self.carrying)
            bx, by = self.p["pos_belt"]
            if self._near(bx, by):
                self.carrying = None
                self.reg.move(cyl, "warehouse", "belt_inner")
                return
            for sx, sy in SLOTS:
                if self._near(*self.slot_coords(sx, sy)):
                    if (sx, sy) in self.rack:
                        self.diag(tick, "warehouse", f"slot ({sx},{sy}) already occupied")
                        return
                    self.carrying = None
                    self.rack[(sx, sy)] = cyl.id
                    self.reg.move(cyl, "warehouse", f"rack:{sx},{sy}")
                    if cyl.state == "raw":
                        self.reg.advance(cyl, "stored")
                    return
            self.diag(tick, "warehouse", "release away from belt or slot; holding")

    def step(self, tick: int, act: dict) -> None:
        self._move_cantilever(tick, act)
        self._step_belt(tick, act)
        self._grab_release(tick, act)

    def _color_reading(self) -> int:
        reading = self.color_baseline
        if self.belt_cyl is not None:
            cyl = self.reg.get(self.belt_cyl)
            reading = self.color_nominals[cyl.color]
        if self.color_noise_std > 0:
            reading += round(self.color_rng.gauss(0.0, self.color_noise_std))
        return clamp(reading, 0, 4000)

    def frames(self, tick: int) -> list[SensorFrame]:
        rack_codes = []
        for x, y in SLOTS:
            cid = self.rack.get((x, y))
            rack_codes.append(COLOR_CODES[self.reg.get(cid).color] if cid else 0)
        return [SensorFrame("warehouse", tick, [
            self.cant_x,
            self.cant_y,
            1 if self.reg.at("warehouse", "belt_outer") else 0,
            1 if self.reg.at("warehouse", "belt_inner") else 0,
            self._color_reading(),
            1 if self.carrying is not None else 0,
            *rack_codes,
        ])]

    def digest_parts(self) -> list[str]:
        rack = ",".join(f"{x}{y}={cid}" for (x, y), cid in sorted(self.rack.items()))
        return [
            f"wh:{self.cant_x}:{self.cant_y}:{self.carrying}:{int(self.belt_running)}"
            f":{self.belt_progress}:{self.belt_cyl}:{self.belt_dir}:[{rack}]"
        ]
