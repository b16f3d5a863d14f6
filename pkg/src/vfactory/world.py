"""World assembly and the canonical tick loop.

Tick phases, in fixed order:

1. clock advance, kernel events (workload, un-jam timers)
2. attack directives armed by last tick's sensor edges, then
   absolute-tick directives, scan bursts and restore writes
3. fabric delivery into node inboxes (switch tap captures here)
4. node processing: supervisory service, attacker client, PLC servers
   (remote writes land here, strictly between scans)
5. external command queue (HTTP) drained at the tick boundary
6. PLC scans against the sensor frames of the previous tick
7. physics steps; fresh sensor frames
8. attack predicate evaluation on the fresh frames; capture sampling

Simulated timestamps derive from the tick index alone; run mode only
changes wall-clock pacing, never the simulated trace.
"""

from __future__ import annotations

import hashlib
import os
import threading
import time
from dataclasses import dataclass, field

from .attacks import AttackEngine
from .kernel import EventQueue, RngHub, SimClock, TickReport
from .modbus.endpoint import ServerEndpoint
from .names import ATTACKER, PLC_IDS, SCADA, default_links
from .net import Fabric
from .physics import (CylinderRegistry, GripperStation, MpuStation, PhysicsParams,
                      SortingStation, WarehouseStation)
from .physics.base import JitterGate, SensorFrame
from .plc.programs import PROGRAMS
from .plc.runtime import PlcInstance
from .scada import Scada
from .scenario import Scenario
from .trace.records import Recorder, canonical, file_sha256


@dataclass(slots=True)
class RunResult:
    scenario: str
    seed: int
    mode: str
    ticks: int
    sim_time_s: float
    wall_s: float
    orders: dict
    frames_captured: int
    records: dict
    ground_truth: int
    link_stats: dict
    out_dir: str | None
    diagnostics: int
    realtime_drift_ms: float | None = None
    not_triggered: list = field(default_factory=list)

    def summary(self) -> dict:
        """Deterministic portion, safe to write to disk."""
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "mode": self.mode,
            "ticks": self.ticks,
            "sim_time_s": self.sim_time_s,
            "orders": self.orders,
            "frames_captured": self.frames_captured,
            "records": self.records,
            "ground_truth": self.ground_truth,
            "link_stats": self.link_stats,
            "diagnostics": self.diagnostics,
            "not_triggered": self.not_triggered,
        }


class World:
    def __init__(self, scenario: Scenario, out_dir: str | None = None,
                 attacks_enabled: bool = True, capture_override: bool | None = None):
        self.scenario = scenario
        self.out_dir = out_dir
        self.clock = SimClock(scenario.tick_ms)
        self.events = EventQueue()
        self.rng = RngHub(scenario.seed)
        self.registry = CylinderRegistry()
        self.diagnostics: list[tuple[int, str, str]] = []
        self.stop_requested = False
        self.command_queue: list = []
        self._command_lock = threading.Lock()
        self.on_snapshot = None  # serve-mode hook
        self.on_alert = None

        noise = scenario.data.get("physics", {}).get("noise", {})
        jitter_std = float(noise.get("actuation_jitter_std_ticks", 0.0))
        color_std = float(noise.get("color_noise_std", 0.0))
        params = PhysicsParams.from_overrides(scenario.physics_overrides)
        self.params = params

        def gate(label):
            return JitterGate(jitter_std, self.rng.stream(f"jitter:{label}"))

        p = params.table
        self.vc = GripperStation(p["vc"], self.registry, gate("vc"), self.diag)
        self.warehouse = WarehouseStation(
            p["warehouse"], self.registry, gate("warehouse"), self.diag,
            self.rng.stream("color:warehouse"), color_std,
            {c: p["sorting"][f"color_{c}"] for c in ("white", "red", "blue")},
            p["sorting"]["color_baseline"])
        self.mpu = MpuStation(p["mpu"], self.registry, gate("mpu"), self.diag)
        self.sorting = SortingStation(p["sorting"], self.registry, gate("sorting"),
                                      self.diag, self.rng.stream("color:sorting"),
                                      color_std)
        self.mpu.sorting_receive = self.sorting.receive
        self.stations = {"vc": self.vc, "warehouse": self.warehouse, "mpu": self.mpu,
                         "sorting": self.sorting}

        capture_on = scenario.capture_enabled if capture_override is None else capture_override
        self.recorder = Recorder(out_dir, scenario.sample_period_ticks,
                                 enabled=capture_on and out_dir is not None)

        links = {lid: dict(scenario.links.get(lid, {})) for lid in default_links()}
        self.fabric = Fabric(self.rng, scenario.tick_ms, links,
                             capture=self.recorder.on_frame,
                             on_link_event=self.recorder.on_link_event)

        tick_ms = scenario.tick_ms
        self.plcs: dict[str, PlcInstance] = {}
        self.servers: dict[str, ServerEndpoint] = {}
        for plc_id in PLC_IDS:
            station_key, prog_cls = PROGRAMS[plc_id]
            section = {"vc": "vc", "warehouse": "warehouse", "mpu": "mpu",
                       "sorting": "sorting"}[station_key]
            prog = prog_cls(tick_ms, p[section])
            plc = PlcInstance(plc_id, prog, tick_ms)
            self.plcs[plc_id] = plc
            self.servers[plc_id] = ServerEndpoint(
                plc, scenario.net["request_capacity_per_tick"])

        self.scada = Scada(self._fabric_send, scenario.net, diag=self.diag)
        directives = scenario.attacks if attacks_enabled else []
        self.engine = AttackEngine(directives, self._fabric_send, self,
                                   self.recorder, tick_ms)

        self.latest_frames: dict[str, SensorFrame] = {}
        self._acts: dict[str, object] = {p: None for p in PLC_IDS}
        self._mpu_act: dict = {}
        self._emit_frames(0)
        self._schedule_workload()
        self.real_servers: dict[str, object] = {}
        self._maybe_real_sockets()

    # -- wiring helpers ----------------------------------------------------

    def diag(self, tick: int, src: str, message: str) -> None:
        self.diagnostics.append((tick, src, message))

    def _fabric_send(self, tick: int, src: str, dst: str, payload: bytes) -> None:
        conn = f"{src}>{dst}"
        self.fabric.send(tick, src, dst, conn, payload)

    def _schedule_workload(self) -> None:
        for i, item in enumerate(self.scenario.workload):
            self.events.schedule(0, item["at_tick"], ("workload", i, item))

    def _maybe_real_sockets(self) -> None:
        cfg = self.scenario.data.get("network", {}).get("real_sockets", {})
        if not cfg.get("enabled"):
            return
        from .net import LinkBridge
        from .names import DEFAULT_PORTS, link_id

        host = cfg.get("host", "127.0.0.1")
        ports = cfg.get("ports", {})
        for plc_id in PLC_IDS:
            port = int(ports.get(plc_id, DEFAULT_PORTS[plc_id]))
            link = self.fabric.get_link(link_id(plc_id, "switch"))
            bridge = LinkBridge(self.fabric, link, host, port, host, 0)
            bridge.start()
            self.real_servers[plc_id] = bridge

    # -- injection API (used by workload and the attack engine) -----------

    def inject_spawn(self, color: str):
        if self.registry.at("arrival", "bay") is not None:
            self.diag(self.clock.tick, "physics", "arrival bay occupied at spawn")
        return self.registry.spawn(color, "arrival", "bay")

    def inject_stock(self, color: str, x: int, y: int):
        cyl = self.registry.spawn(color, "warehouse", "pre")
        self.warehouse.stock(cyl.id, x, y)
        return cyl

    def inject_remove(self, cyl_id: int) -> None:
        self.registry.remove(self.registry.get(cyl_id))

    def inject_block_gripper(self, tick: int, duration_ticks: int) -> None:
        self.vc.block(tick, duration_ticks)

    def schedule_unjam(self, link: str, due_tick: int) -> None:
        self.events.schedule(self.clock.tick, due_tick, ("unjam", link))

    def submit_command(self, fn) -> None:
        """Queue a callable for execution at the next tick boundary."""
        with self._command_lock:
            self.command_queue.append(fn)

    # -- tick loop ----------------------------------------------------------

    def _emit_frames(self, tick: int) -> list[SensorFrame]:
        frames: list[SensorFrame] = []
        for station in (self.vc, self.warehouse, self.mpu, self.sorting):
            frames.extend(station.frames(tick))
        self.latest_frames = {f.station: f for f in frames}
        return frames

    def _run_workload_item(self, tick: int, item: dict) -> None:
        action = item["action"]
        if action == "spawn_cylinder":
            self.inject_spawn(item["color"])
        elif action == "stock_cylinder":
            try:
                self.inject_stock(item["color"], item["x"], item["y"])
            except ValueError as exc:
                self.diag(tick, "workload", str(exc))
        elif action == "place_order":
            from .errors import InvalidParameter, OutOfStock

            try:
                self.scada.place_order(tick, item["color"],
                                       item.get("firing_time_ms", 1000),
                                       item.get("milling_time_ms", 1000))
            except (OutOfStock, InvalidParameter) as exc:
                self.diag(tick, "workload", f"order rejected: {exc}")

    def advance_tick(self) -> TickReport:
        tick = self.clock.advance()
        events = self.events.pop_due(tick)
        for ev in events:
            kind = ev[0]
            if kind == "workload":
                self._run_workload_item(tick, ev[2])
            elif kind == "unjam":
                self.fabric.set_jam(ev[1], False, tick)
            elif kind == "call":
                ev[1](tick)

        if self.engine.enabled:
            self.engine.fire_armed(tick)
            self.engine.on_tick_start(tick)

        delivered = self.fabric.deliver_due(tick)

        for conn, src, payload in self.fabric.drain_inbox(SCADA):
            self.scada.on_delivery(src, payload)
        self.scada.on_tick(tick)

        if self.engine.enabled:
            for conn, src, payload in self.fabric.drain_inbox(ATTACKER):
                self.engine.on_delivery(src, payload)
            self.engine.on_tick_end(tick)

        for plc_id in PLC_IDS:
            server = self.servers[plc_id]
            for conn, src, payload in self.fabric.drain_inbox(plc_id):
                server.feed(conn, src, payload)
            for conn, client, response in server.process(tick):
                if client == "external":
                    bridge = self.real_servers.get(plc_id)
                    link = self.fabric.get_link(f"{plc_id}--switch")
                    if link.bridge is not None:
                        link.bridge.send_to(conn, response)
                    elif bridge is not None:
                        bridge.send_to(conn, response)
                else:
                    self.fabric.send(tick, plc_id, client, conn, response)

        if self.command_queue:
            with self._command_lock:
                commands, self.command_queue = self.command_queue, []
            for fn in commands:
                fn(tick)

        acts = self._acts
        for plc_id in PLC_IDS:
            plc = self.plcs[plc_id]
            if tick % plc.scan_period_ticks == 0:
                frame = self.latest_frames[plc.map.frame_id]
                acts[plc_id] = plc.scan(tick, frame.values)

        _EMPTY = {}

        def coils_of(plc_id):
            a = acts.get(plc_id)
            return a.coils if a is not None else _EMPTY

        def words_of(plc_id):
            a = acts.get(plc_id)
            return a.words if a is not None else _EMPTY

        self.vc.step(tick, coils_of("vc"))
        self.warehouse.step(tick, coils_of("warehouse"))
        mpu_act = self._mpu_act
        mpu_act.clear()
        mpu_act.update(coils_of("furnace"))
        mpu_act.update(coils_of("mill"))
        mpu_act.update(words_of("furnace"))
        mpu_act.update(words_of("mill"))
        self.mpu.step(tick, mpu_act)
        self.sorting.step(tick, coils_of("sorting"))

        frames = self._emit_frames(tick)
        if self.engine.enabled:
            self.engine.on_frames(tick, frames)
        self.recorder.on_samples(tick, frames)

        if self.on_snapshot is not None and tick % self.scada.poll_period == 0:
            snap = self.scada.snapshot(tick)
            snap["time_s"] = tick * self.clock.tick_ms / 1000.0
            self.on_snapshot(snap)

        return TickReport(tick, len(events), delivered)

    # -- full runs -----------------------------------------------------------

    def run(self) -> RunResult:
        import gc

        mode = self.scenario.mode
        duration = self.scenario.duration_ticks
        tick_s = self.clock.tick_ms / 1000.0
        start = time.perf_counter()
        drift_ms = None
        gc_was_enabled = gc.isenabled()
        gc.disable()  # the loop allocates heavily and builds no cycles
        try:
            if mode == "realtime":
                behind_total = 0.0
                for i in range(duration):
                    if self.stop_requested:
                        break
                    target = start + (i + 1) * tick_s
                    self.advance_tick()
                    now = time.perf_counter()
                    if now < target:
                        time.sleep(target - now)
                    else:
                        behind_total += (now - target) * 1000.0
                drift_ms = behind_total
            else:
                advance = self.advance_tick
                for _ in range(duration):
                    if self.stop_requested:
                        break
                    advance()
        finally:
            if gc_was_enabled:
                gc.enable()
        wall = time.perf_counter() - start
        return self.finalize(wall, drift_ms)

    def finalize(self, wall_s: float, drift_ms: float | None = None) -> RunResult:
        tick = self.clock.tick
        intervals = self.engine.finalize(tick)
        for gt in intervals:
            self.recorder.on_ground_truth(tick, gt.label, gt.kind, gt.target,
                                          gt.start_tick, gt.end_tick)
        self.recorder.finalize(self.scenario.name, self.scenario.seed,
                               self.scenario.config_sha256(), self.clock.tick_ms, tick)
        if self.scenario.pcap and self.recorder.enabled:
            from .trace.pcap import write_pcap

            write_pcap(os.path.join(self.out_dir, "frames.pcap"),
                       self.recorder.frame_payloads, self.clock.tick_ms)
        result = RunResult(
            scenario=self.scenario.name,
            seed=self.scenario.seed,
            mode=self.scenario.mode,
            ticks=tick,
            sim_time_s=tick * self.clock.tick_ms / 1000.0,
            wall_s=wall_s,
            orders=self.scada.order_counts(),
            frames_captured=self.recorder.counts["modbus_frame"],
            records=dict(self.recorder.counts),
            ground_truth=len(intervals),
            link_stats=self.fabric.stats_summary(),
            out_dir=self.out_dir,
            diagnostics=len(self.diagnostics),
            realtime_drift_ms=drift_ms,
            not_triggered=list(self.engine.not_triggered),
        )
        if self.out_dir and self.recorder.enabled:
            with open(os.path.join(self.out_dir, "summary.json"), "w",
                      encoding="utf-8") as fh:
                fh.write(canonical(result.summary()))
                fh.write("\n")
        for bridge in self.real_servers.values():
            bridge.close()
        return result

    # -- introspection --------------------------------------------------------

    def state_digest(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.clock.tick).encode())
        for part in self.registry.digest_parts():
            h.update(part.encode())
        for station in (self.vc, self.warehouse, self.mpu, self.sorting):
            for part in station.digest_parts():
                h.update(part.encode())
        for plc_id in PLC_IDS:
            for part in self.plcs[plc_id].digest_parts():
                h.update(part.encode())
        return h.hexdigest()


def run_scenario(scenario: Scenario, out_dir: str | None = None,
                 attacks_enabled: bool = True,
                 capture_override: bool | None = None) -> RunResult:
    world = World(scenario, out_dir=out_dir, attacks_enabled=attacks_enabled,
                  capture_override=capture_override)
    return world.run()


def dataset_hashes(out_dir: str) -> dict[str, str]:
    out = {}
    for name in ("trace.jsonl", "manifest.json", "summary.json"):
        path = os.path.join(out_dir, name)
        if os.path.exists(path):
            out[name] = file_sha256(path)
    return out
