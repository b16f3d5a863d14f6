"""Multi-processing unit: furnace platform, transfer transport and mill.

One physical assembly, two controllers: the furnace PLC owns the oven
platform and the firing process, the mill PLC owns the transfer
transport, the mill motor and the eject piston. The transport makes two
trips per workpiece (platform -> mill, then mill -> eject chute), which
shows up as two excursions of its position encoder.

Firing and milling run as countdowns latched from the ``fire_command``
and ``mill_command`` output words on their rising edge; the oven LED is
lit exactly while the firing countdown is positive.
"""

from __future__ import annotations

from .base import JitterGate, SensorFrame, clamp
from .cylinders import CylinderRegistry

FURNACE_COILS = ("platform_in", "platform_out")
FURNACE_WORDS = ("fire_command",)
MILL_COILS = ("transport_fwd", "transport_back", "grab", "eject")
MILL_WORDS = ("mill_command",)


class MpuStation:
    frame_id = "mpu"

    def __init__(self, params: dict, registry: CylinderRegistry, jitter: JitterGate, diag):
        self.p = params
        self.reg = registry
        self.jitter = jitter
        self.diag = diag
        self.platform_progress = 0
        self.was_inside = False
        self.firing_remaining = 0
        self.oven_led_on = False
        self._prev_fire_cmd = 0
        self.transport_pos = 0
        self.transport_carrying: int | None = None
        self.milling_remaining = 0
        self.mill_motor_on = False
        self._prev_mill_cmd = 0
        self.eject_pulse = 0
        self.sorting_receive = None  # wired by the world builder

    # -- furnace side -------------------------------------------------

    def _step_platform(self, tick: int, act: dict) -> None:
        transit = self.p["platform_transit_ticks"]
        inward = self.jitter.passes("plat+", bool(act.get("platform_in")), tick)
        outward = self.jitter.passes("plat-", bool(act.get("platform_out")), tick)
        if inward and outward:
            self.diag(tick, "furnace", "conflicting platform commands")
            return
        if inward:
            self.platform_progress = clamp(self.platform_progress + 1, 0, transit)
            if self.platform_progress == transit:
                cyl = self.reg.at("mpu", "platform")
                if cyl is not None and cyl.state != "firing":
                    self.reg.advance(cyl, "firing")
                self.was_inside = True
        elif outward:
            self.platform_progress = clamp(self.platform_progress - 1, 0, transit)
            if self.platform_progress == 0:
                self.was_inside = False

    def _step_firing(self, tick: int, act: dict) -> None:
        # countdown first so a fresh latch is visible for its full length
        if self.firing_remaining > 0:
            self.firing_remaining -= 1
            if self.firing_remaining == 0:
                self.oven_led_on = False
        cmd = int(act.get("fire_command", 0))
        if cmd > 0 and self._prev_fire_cmd == 0 and self.platform_inside:
            self.firing_remaining = cmd
            self.oven_led_on = True
        self._prev_fire_cmd = cmd

    @property
    def platform_inside(self) -> bool:
        return self.platform_progress >= self.p["platform_transit_ticks"]

    @property
    def platform_outside(self) -> bool:
        return self.platform_progress == 0

    def _platform_cyl(self):
        return self.reg.at("mpu", "platform")

    def _cyl_unfired(self) -> bool:
        cyl = self._platform_cyl()
        return bool(cyl and cyl.state != "firing" and self.platform_outside)

    def _cyl_fired(self) -> bool:
        cyl = self._platform_cyl()
        return bool(
            cyl and cyl.state == "firing" and self.platform_outside and not self.oven_led_on
        )

    # -- mill side ----------------------------------------------------

    def _step_transport(self, tick: int, act: dict) -> None:
        fwd = self.jitter.passes("tr+", bool(act.get("transport_fwd")), tick)
        back = self.jitter.passes("tr-", bool(act.get("transport_back")), tick)
        if fwd and back:
            self.diag(tick, "mill", "conflicting transport commands")
        elif fwd:
            self.transport_pos = clamp(
                self.transport_pos + self.p["transport_rate"], 0, self.p["transport_max"])
        elif back:
            self.transport_pos = clamp(
                self.transport_pos - self.p["transport_rate"], 0, self.p["transport_max"])

        near = lambda target: abs(self.transport_pos - target) < self.p["transport_rate"]
        grab = bool(act.get("grab"))
        if grab and self.transport_carrying is None:
            if near(self.p["pos_transport_platform"]) and self._cyl_fired():
                cyl = self._platform_cyl()
                self.transport_carrying = cyl.id
                self.reg.move(cyl, "mpu", "transport")
            elif near(0):
                cyl = self.reg.at("mpu", "mill")
                if cyl is not None:
                    self.transport_carrying = cyl.id
                    self.reg.move(cyl, "mpu", "transport")
                    if cyl.state != "finished":
                        self.reg.advance(cyl, "finished")
        elif not grab and self.transport_carrying is not None:
            cyl = self.reg.get(self.transport_carrying)
            self.transport_carrying = None
            if near(0):
                self.reg.move(cyl, "mpu", "mill")
                if cyl.state != "milling":
                    self.reg.advance(cyl, "milling")
            elif near(self.p["pos_transport_chute"]):
                self.reg.move(cyl, "mpu", "chute")
            else:
                self.reg.move(cyl, "mpu", "floor")
                self.diag(tick, "mill", f"cylinder {cyl.id} released mid-travel")

    def _step_mill(self, tick: int, act: dict) -> None:
        if self.milling_remaining > 0:
            self.milling_remaining -= 1
            if self.milling_remaining == 0:
                self.mill_motor_on = False
        cmd = int(act.get("mill_command", 0))
        if cmd > 0 and self._prev_mill_cmd == 0 and self.reg.at("mpu", "mill"):
            self.milling_remaining = cmd
            self.mill_motor_on = True
        self._prev_mill_cmd = cmd

    def _step_eject(self, tick: int, act: dict) -> None:
        if bool(act.get("eject")):
            if self.eject_pulse == 0:
                self.eject_pulse = self.p["eject_pulse_ticks"]
            cyl = self.reg.at("mpu", "chute")
            if cyl is not None and self.sorting_receive is not None:
                self.sorting_receive(cyl.id)
        if self.eject_pulse > 0:
            self.eject_pulse -= 1

    def step(self, tick: int, act: dict) -> None:
        self._step_platform(tick, act)
        self._step_firing(tick, act)
        self._step_transport(tick, act)
        self._step_mill(tick, act)
        self._step_eject(tick, act)

    def frames(self, tick: int) -> list[SensorFrame]:
        return [
            SensorFrame("furnace", tick, [
                1 if self._cyl_unfired() else 0,
                1 if self._cyl_fired() else 0,
                1 if self.platform_inside else 0,
                1 if self.platform_outside else 0,
                1 if self.oven_led_on else 0,
            ]),
            SensorFrame("mill", tick, [
                1 if self._cyl_fired() else 0,
                1 if self.reg.at("mpu", "mill") else 0,
                self.transport_pos,
                1 if self.mill_motor_on else 0,
            ]),
        ]

    def digest_parts(self) -> list[str]:
        return [
            f"mpu:{self.platform_progress}:{int(self.was_inside)}:{self.firing_remaining}"
            f":{int(self.oven_led_on)}:{self.transport_pos}:{self.transport_carrying}"
            f":{self.milling_remaining}:{int(self.mill_motor_on)}:{self.eject_pulse}"
        ]
