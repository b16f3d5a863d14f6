"""Vacuum gripper station: rotating suction arm with three encoders.

The arm transports cylinders between three hand-over points: the
material arrival bay, the warehouse belt (outer end) and the MPU
platform. Motion is commanded per axis as direction bits; encoders move
by a configured number of counts per tick and clamp to their range.
While ``blocked`` all three encoders hold their values regardless of
motor commands (a physical blockage does not stop the motors, it stops
the arm).
"""

from __future__ import annotations

from .base import JitterGate, SensorFrame, clamp
from .cylinders import CylinderRegistry

# (location we pick from / drop to) per named arm destination
HANDOFF = {
    "arrival": ("arrival", "bay"),
    "warehouse": ("warehouse", "belt_outer"),
    "mpu": ("mpu", "platform"),
}

COILS = ("rot_cw", "rot_ccw", "h_fwd", "h_back", "v_down", "v_up", "suction")


class GripperStation:
    frame_id = "vc"

    def __init__(self, params: dict, registry: CylinderRegistry, jitter: JitterGate, diag):
        self.p = params
        self.reg = registry
        self.jitter = jitter
        self.diag = diag
        self.horizontal = 0
        self.vertical = 0
        self.rotation = 0
        self.suction_on = False
        self.carrying: int | None = None
        self.freeze_until = -1

    @property
    def blocked(self) -> bool:
        return self._tick <= self.freeze_until

    _tick = 0

    def block(self, tick: int, duration_ticks: int) -> None:
        # freezes exactly duration_ticks physics steps, starting this tick
        self.freeze_until = max(self.freeze_until, tick + duration_ticks - 1)

    def _axis(self, tick, act, fwd, back, current, rate, hi, name) -> int:
        f = self.jitter.passes(name + "+", bool(act.get(fwd)), tick)
        b = self.jitter.passes(name + "-", bool(act.get(back)), tick)
        if f and b:
            self.diag(tick, "vc", f"conflicting {name} commands")
            return current
        if f:
            return clamp(current + rate, 0, hi)
        if b:
            return clamp(current - rate, 0, hi)
        return current

    def step(self, tick: int, act: dict) -> None:
        self._tick = tick
        if not self.blocked:
            self.rotation = self._axis(
                tick, act, "rot_cw", "rot_ccw", self.rotation, self.p["rate_rotation"],
                self.p["max_rotation"], "rotation")
            self.horizontal = self._axis(
                tick, act, "h_fwd", "h_back", self.horizontal, self.p["rate_horizontal"],
                self.p["max_horizontal"], "horizontal")
            self.vertical = self._axis(
                tick, act, "v_down", "v_up", self.vertical, self.p["rate_vertical"],
                self.p["max_vertical"], "vertical")

        want_suction = bool(act.get("suction"))
        if want_suction and not self.suction_on:
            self.suction_on = True
            self._try_pick(tick)
        elif not want_suction and self.suction_on:
            self.suction_on = False
            self._drop(tick)
        elif self.suction_on and self.carrying is None:
            self._try_pick(tick)

    def _at_position(self) -> str | None:
        # tolerance of one motion step per axis; the PLC stops within that
        for name in ("arrival", "warehouse", "mpu"):
            rot, hor, ver = self.p[f"pos_{name}"]
            if (
                abs(self.rotation - rot) < self.p["rate_rotation"]
                and abs(self.horizontal - hor) < self.p["rate_horizontal"]
                and abs(self.vertical - ver) < self.p["rate_vertical"]
            ):
                return name
        return None

    def _try_pick(self, tick: int) -> None:
        pos = self._at_position()
        if pos is None or self.carrying is not None:
            return
        cyl = self.reg.at(*HANDOFF[pos])
        if cyl is not None:
            self.carrying = cyl.id
            self.reg.move(cyl, "vc", "arm")

    def _drop(self, tick: int) -> None:
        if self.carrying is None:
            return
        cyl = self.reg.get(self.carrying)
        self.carrying = None
        pos = self._at_position()
        if pos is None:
            self.reg.move(cyl, "vc", "floor")
            self.diag(tick, "vc", f"cylinder {cyl.id} dropped away from a hand-over point")
            return
        self.reg.move(cyl, *HANDOFF[pos])

    def frames(self, tick: int) -> list[SensorFrame]:
        return [SensorFrame("vc", tick, [
            self.horizontal,
            self.vertical,
            self.rotation,
            1 if self.carrying is not None else 0,
            1 if self.reg.at("arrival", "bay") else 0,
            1 if self.reg.at("warehouse", "belt_outer") else 0,
        ])]

    def digest_parts(self) -> list[str]:
        return [
            f"vc:{self.horizontal}:{self.vertical}:{self.rotation}"
            f":{int(self.suction_on)}:{self.carrying}:{self.freeze_until}"
        ]
