"""Scripted attack execution with exact ground-truth labeling.

Directives fire on an absolute tick or on the Nth rising edge of a
station sensor (process predicates). Network attacks run through the
attacker node's own Modbus client over the fabric — the same path any
real client would use; physical attacks go through the physics
injection API. Every executed directive emits a labeled ground-truth
interval; overlapping jam windows on one link merge into one interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigInvalid, TargetNotFound
from .modbus import codec
from .modbus.endpoint import ClientPort
from .plc.regmap import REGISTER_MAPS


@dataclass(slots=True)
class GroundTruth:
    label: str
    kind: str
    target: str
    start_tick: int
    end_tick: int | None = None


@dataclass(slots=True)
class _Scan:
    directive: dict
    sent: int = 0
    total: int = 0
    requests: list = field(default_factory=list)


class AttackEngine:
    """Executes the scenario's attack script inside the kernel loop."""

    def __init__(self, directives: list[dict], fabric_send, world, recorder,
                 tick_ms: int):
        self.directives = [dict(d) for d in directives]
        self.world = world
        self.recorder = recorder
        self.tick_ms = tick_ms
        self.client = ClientPort("attacker", fabric_send)
        self.intervals: list[GroundTruth] = []
        self.not_triggered: list[str] = []
        self._armed: list[tuple[int, dict]] = []
        self._active_scans: list[_Scan] = []
        self._restores: list[tuple[int, dict]] = []
        self._edge_prev: dict[tuple[str, str], int] = {}
        self._edge_count: dict[tuple[str, str], int] = {}
        for d in self.directives:
            d["_fired"] = False
        # a frame sent at tick t crosses the capture tap one hop later;
        # network-attack windows are padded so the last frame stays inside
        try:
            link = world.fabric.link_for("attacker")
            self._net_pad = max(1, int(link.latency_ms / tick_ms + 0.999))
        except Exception:
            self._net_pad = 1

    @property
    def enabled(self) -> bool:
        return bool(self.directives)

    # -- triggers ---------------------------------------------------------

    def on_tick_start(self, tick: int) -> None:
        """Fire absolute-tick triggers and continue multi-tick activities."""
        for d in self.directives:
            if d["_fired"]:
                continue
            trig = d["trigger"]
            if "at_tick" in trig and tick >= trig["at_tick"]:
                d["_fired"] = True
                try:
                    self._execute(tick, d)
                except TargetNotFound as exc:
                    self.world.diag(tick, "attacker", f"{d['label']}: {exc}")
        for tick_due, spec in list(self._restores):
            if tick >= tick_due:
                self._restores.remove((tick_due, spec))
                self._send_write(tick, spec["target"], spec["register_index"],
                                 spec["restore_value"], spec["label"])
                self._close(spec["label"], tick + self._net_pad)
        self._pump_scans(tick)

    def on_frames(self, tick: int, frames) -> None:
        """Evaluate sensor-rising predicates on fresh physics frames."""
        fired = []
        for frame in frames:
            for i, value in enumerate(frame.values):
                key = (frame.station, i)
                prev = self._edge_prev.get(key, 0)
                self._edge_prev[key] = value
                if value and not prev:
                    self._edge_count[key] = self._edge_count.get(key, 0) + 1
                    fired.append((frame.station, i, self._edge_count[key]))
        if not fired:
            return
        from .physics.base import frame_sensor_names

        for d in self.directives:
            if d["_fired"] or "sensor_rising" not in d["trigger"]:
                continue
            sr = d["trigger"]["sensor_rising"]
            names = frame_sensor_names(sr["station"])
            idx = names.index(sr["sensor"])
            occ = sr.get("occurrence", 1)
            for station, i, count in fired:
                if station == sr["station"] and i == idx and count == occ:
                    d["_fired"] = True
                    # effects land at the start of the next tick (plus any
                    # configured delay), before scans
                    due = tick + 1 + int(sr.get("delay_ticks", 0))
                    self._armed.append((due, d))

    def fire_armed(self, tick: int) -> None:
        due_now = [d for due, d in self._armed if due <= tick]
        self._armed = [(due, d) for due, d in self._armed if due > tick]
        for d in due_now:
            try:
                self._execute(tick, d)
            except TargetNotFound as exc:
                self.world.diag(tick, "attacker", f"{d['label']}: {exc}")

    # -- execution --------------------------------------------------------

    def _open(self, d: dict, tick: int, target: str, end: int | None = None) -> None:
        self.intervals.append(GroundTruth(d["label"], d["kind"], target, tick, end))

    def _close(self, label: str, tick: int) -> None:
        for gt in self.intervals:
            if gt.label == label and gt.end_tick is None:
                gt.end_tick = tick

    def _execute(self, tick: int, d: dict) -> None:
        kind = d["kind"]
        if kind == "remove_cylinder":
            target = self._resolve_cylinder(d)
            self.world.inject_remove(target)
            self._open(d, tick, f"cylinder:{target}", end=tick)
        elif kind == "block_gripper":
            dur = int(d["duration_ticks"])
            self.world.inject_block_gripper(tick, dur)
            self._open(d, tick, "vc", end=tick + dur)
        elif kind == "spawn_cylinder":
            cyl = self.world.inject_spawn(d["color"])
            self._open(d, tick, f"cylinder:{cyl.id}", end=tick)
        elif kind == "command_inject":
            self._command_inject(tick, d)
        elif kind == "modbus_scan":
            self._start_scan(tick, d)
        elif kind == "jam_link":
            dur = int(d["duration_ticks"])
            self.world.fabric.set_jam(d["target"], True, tick)
            self.world.schedule_unjam(d["target"], tick + dur)
            self._open(d, tick, d["target"], end=tick + dur)

    def _resolve_cylinder(self, d: dict) -> int:
        if d.get("cylinder_id") is not None:
            return int(d["cylinder_id"])
        station, slot = d["at"]
        cyl = self.world.registry.at(station, slot)
        if cyl is None:
            raise TargetNotFound(f"no cylinder at {station}/{slot}")
        return cyl.id

    def _register_index(self, plc_id: str, register) -> int:
        m = REGISTER_MAPS[plc_id]
        if isinstance(register, int):
            return register
        return m.holding_index(register)

    def _command_inject(self, tick: int, d: dict) -> None:
        plc_id = d["target"]
        idx = self._register_index(plc_id, d["register"])
        self._send_write(tick, plc_id, idx, int(d["value"]), d["label"])
        restore_after = d.get("restore_after_ticks")
        if restore_after:
            restore_value = d.get("restore_value")
            if restore_value is None:
                spec = REGISTER_MAPS[plc_id].holding
                restore_value = spec[idx].default if idx < len(spec) else 0
            self._open(d, tick, plc_id)
            self._restores.append((tick + int(restore_after), {
                "target": plc_id, "register_index": idx,
                "restore_value": int(restore_value), "label": d["label"],
            }))
        else:
            self._open(d, tick, plc_id, end=tick + self._net_pad)

    def _send_write(self, tick: int, plc_id: str, idx: int, value: int,
                    label: str) -> None:
        def on_response(frame, meta):
            if frame.is_exception:
                self.world.diag(tick, "attacker",
                                f"{label}: write rejected 0x{frame.exception_code:02x}")

        self.client.request(
            tick, plc_id,
            lambda t: codec.encode_write_single(
                t, 1, codec.FUNC_WRITE_SINGLE_REGISTER, idx, value),
            timeout_ticks=50, meta={}, on_response=on_response)

    def _start_scan(self, tick: int, d: dict) -> None:
        if int(d.get("rate_per_tick", 0)) <= 0:
            raise ConfigInvalid("attacks.rate_per_tick", "must be > 0")
        area_fc = {"holding": 3, "input": 4, "coils": 1, "discrete": 2}
        functions = d.get("functions", [area_fc.get(d.get("area", "holding"), 3)])
        start = int(d.get("start_address", 0))
        qty = int(d["quantity"])
        scan = _Scan(directive=d)
        for fc in functions:
            for addr in range(start, start + qty):
                scan.requests.append((fc, addr))
        scan.total = len(scan.requests)
        self._active_scans.append(scan)
        self._open(d, tick, d["target"])

    def _pump_scans(self, tick: int) -> None:
        for scan in list(self._active_scans):
            d = scan.directive
            rate = int(d["rate_per_tick"])
            plc_id = d["target"]
            for _ in range(min(rate, len(scan.requests))):
                fc, addr = scan.requests.pop(0)
                if fc in (1, 2, 3, 4):
                    builder = (lambda t, fc=fc, addr=addr:
                               codec.encode_read_request(t, 1, fc, addr, 1))
                else:
                    builder = (lambda t, fc=fc:
                               codec.encode_frame(t, 1, fc, b"\x00"))
                self.client.request(tick, plc_id, builder, timeout_ticks=100, meta={})
                scan.sent += 1
            if not scan.requests:
                self._active_scans.remove(scan)
                self._close(d["label"], tick + self._net_pad)

    # -- responses back to the attacker ----------------------------------

    def on_delivery(self, src: str, payload: bytes) -> None:
        self.client.feed(src, payload)

    def on_tick_end(self, tick: int) -> None:
        self.client.expire(tick)

    # -- finalization ------------------------------------------------------

    def finalize(self, tick: int) -> list[GroundTruth]:
        for d in self.directives:
            if not d["_fired"]:
                self.not_triggered.append(d["label"])
        for gt in self.intervals:
            if gt.end_tick is None:
                gt.end_tick = tick
        merged: list[GroundTruth] = []
        jams: dict[str, list[GroundTruth]] = {}
        for gt in self.intervals:
            if gt.kind == "jam_link":
                jams.setdefault(gt.target, []).append(gt)
            else:
                merged.append(gt)
        for target, windows in jams.items():
            windows.sort(key=lambda g: g.start_tick)
            current = windows[0]
            for nxt in windows[1:]:
                if nxt.start_tick <= current.end_tick:
                    current.end_tick = max(current.end_tick, nxt.end_tick)
                    current.label = current.label  # first label wins for merged window
                else:
                    merged.append(current)
                    current = nxt
            merged.append(current)
        merged.sort(key=lambda g: (g.start_tick, g.label))
        return merged
