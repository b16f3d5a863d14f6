"""Sorting station: conveyor, light barriers, color sensing and pistons.

A finished cylinder lands on the belt at the entry barrier, rides past
the color enclosure and the exit barrier, and is pushed into one of
three bays by the piston matching its color. A barrier reads as
interrupted while the cylinder body overlaps the beam: with the beam at
B and a body of length L centered at p, that is p in (B - L/2, B + L/2]
— exactly L / belt_rate ticks when L is a rate multiple.
"""

from __future__ import annotations

import random

from .base import JitterGate, SensorFrame, clamp
from .cylinders import CylinderRegistry

COILS = ("belt", "piston_white", "piston_red", "piston_blue")

BAYS = ("white", "red", "blue")


class SortingStation:
    frame_id = "sorting"

    def __init__(self, params: dict, registry: CylinderRegistry, jitter: JitterGate,
                 diag, color_rng: random.Random, color_noise_std: float):
        self.p = params
        self.reg = registry
        self.jitter = jitter
        self.diag = diag
        self.color_rng = color_rng
        self.color_noise_std = color_noise_std
        self.belt_encoder = 0
        self.belt_running = False
        self.positions: dict[int, int] = {}
        self.bays: dict[str, list[int]] = {c: [] for c in BAYS}
        self._stuck_warned = False

    def receive(self, cyl_id: int) -> None:
        """A workpiece pushed onto the belt by the MPU eject piston."""
        cyl = self.reg.get(cyl_id)
        self.reg.move(cyl, "sorting", "belt")
        self.positions[cyl_id] = self.p["pos_drop"]

    def _beam_broken(self, beam_pos: int) -> bool:
        half = self.p["cylinder_len_counts"] // 2
        for pos in self.positions.values():
            if beam_pos - half < pos <= beam_pos + half:
                return True
        return False

    def _color_reading(self) -> int:
        reading = self.p["color_baseline"]
        half = self.p["cylinder_len_counts"] // 2
        enc = self.p["pos_enclosure"]
        for cid, pos in self.positions.items():
            if enc - half < pos <= enc + half:
                reading = self.p[f"color_{self.reg.get(cid).color}"]
                break
        if self.color_noise_std > 0:
            reading += round(self.color_rng.gauss(0.0, self.color_noise_std))
        return clamp(reading, 0, 4000)

    def _fire_piston(self, tick: int, bay: str) -> None:
        window = self.p["piston_window_counts"] // 2
        piston_pos = self.p[f"pos_piston_{bay}"]
        for cid, pos in list(self.positions.items()):
            if abs(pos - piston_pos) <= window:
                del self.positions[cid]
                cyl = self.reg.get(cid)
                self.bays[bay].append(cid)
                self.reg.move(cyl, "sorting", f"bay_{bay}")
                self.reg.advance(cyl, "sorted")
                if cyl.color != bay:
                    self.diag(tick, "sorting", f"cylinder {cid} ({cyl.color}) in {bay} bay")
                return

    def step(self, tick: int, act: dict) -> None:
        self.belt_running = self.jitter.passes("belt", bool(act.get("belt")), tick)
        if self.belt_running:
            self.belt_encoder = (self.belt_encoder + self.p["belt_rate"]) % self.p[
                "belt_encoder_modulo"]
            end = self.p["pos_piston_blue"] + 40
            for cid in list(self.positions):
                pos = self.positions[cid] + self.p["belt_rate"]
                if pos > end:
                    pos = end
                    if not self._stuck_warned:
                        self.diag(tick, "sorting", f"cylinder {cid} reached belt end unsorted")
                        self._stuck_warned = True
                self.positions[cid] = pos
        for bay in BAYS:
            if bool(act.get(f"piston_{bay}")):
                self._fire_piston(tick, bay)

    def frames(self, tick: int) -> list[SensorFrame]:
        return [SensorFrame("sorting", tick, [
            self.belt_encoder,
            1 if self._beam_broken(self.p["pos_barrier_entry"]) else 0,
            1 if self._beam_broken(self.p["pos_barrier_exit"]) else 0,
            self._color_reading(),
            clamp(len(self.bays["white"]), 0, 99),
            clamp(len(self.bays["red"]), 0, 99),
            clamp(len(self.bays["blue"]), 0, 99),
        ])]

    def digest_parts(self) -> list[str]:
        pos = ",".join(f"{cid}@{p}" for cid, p in sorted(self.positions.items()))
        bays = ";".join(f"{b}={len(v)}" for b, v in self.bays.items())
        return [f"sort:{self.belt_encoder}:{int(self.belt_running)}:[{pos}]:[{bays}]"]
