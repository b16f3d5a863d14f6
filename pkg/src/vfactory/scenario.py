"""Scenario files: schema, validation, canonical hashing.

A scenario fully determines a run: seed, duration, physics parameter
overrides, network shape, the scripted workload (spawns, stock,
orders) and the attack script. Identical scenarios (same canonical
form, including seed) produce byte-identical datasets.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os

import yaml

from .errors import ConfigInvalid
from .names import COLORS, PLC_IDS, default_links
from .physics.params import merged_params

SCENARIO_SCHEMA_VERSION = 1

WORKLOAD_ACTIONS = ("spawn_cylinder", "stock_cylinder", "place_order")
ATTACK_KINDS = ("remove_cylinder", "block_gripper", "spawn_cylinder",
                "command_inject", "modbus_scan", "jam_link")

NETWORK_DEFAULTS = {
    "poll_period_ticks": 5,
    "request_capacity_per_tick": 4,
    "timeout_ticks": 15,
    "write_retries": 3,
    "retry_backoff_ticks": 2,
    "watchdog_ticks": 1500,
    # consecutive all-stale poll rounds before an active order is
    # declared failed (supervision lost, e.g. during a jam)
    "stale_fail_rounds": 5,
}


class Scenario:
    def __init__(self, data: dict, source: str = "<inline>"):
        self.source = source
        self.data = data
        self.name = data.get("name", "unnamed")
        self.seed = int(data.get("seed", 0))
        run = data.get("run", {})
        self.mode = run.get("mode", "fast")
        self.duration_ticks = int(run.get("duration_ticks", 1000))
        self.tick_ms = int(run.get("tick_ms", 20))
        physics = data.get("physics", {})
        self.physics_overrides = physics.get("params", {})
        network = data.get("network", {})
        self.links = {lid: dict(network.get("links", {}).get(lid, {}))
                      for lid in default_links()}
        self.net = {k: network.get(k, v) for k, v in NETWORK_DEFAULTS.items()}
        self.workload = data.get("workload", []) or []
        self.attacks = data.get("attacks", []) or []
        capture = data.get("capture", {})
        self.capture_enabled = bool(capture.get("enabled", True))
        self.sample_period_ticks = int(capture.get("sample_period_ticks", 1))
        self.pcap = bool(capture.get("pcap", False))

    def config_sha256(self) -> str:
        blob = json.dumps(self.normalized(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def normalized(self) -> dict:
        return {
            "schema_version": SCENARIO_SCHEMA_VERSION,
            "name": self.name,
            "seed": self.seed,
            "mode": self.mode,
            "duration_ticks": self.duration_ticks,
            "tick_ms": self.tick_ms,
            "physics": self.physics_overrides,
            "links": self.links,
            "net": self.net,
            "workload": self.workload,
            "attacks": self.attacks,
            "sample_period_ticks": self.sample_period_ticks,
        }

    def without_attacks(self) -> "Scenario":
        twin = copy.deepcopy(self.data)
        twin["attacks"] = []
        return Scenario(twin, source=self.source)

    def with_seed(self, seed: int) -> "Scenario":
        data = copy.deepcopy(self.data)
        data["seed"] = seed
        return Scenario(data, source=self.source)


def _require(cond: bool, field: str, message: str) -> None:
    if not cond:
        raise ConfigInvalid(field, message)


def _validate_trigger(trigger, field: str) -> None:
    _require(isinstance(trigger, dict), field, "must be a mapping")
    keys = set(trigger)
    _require(len(keys) == 1 and keys <= {"at_tick", "sensor_rising"}, field,
             "exactly one of at_tick / sensor_rising")
    if "at_tick" in trigger:
        _require(isinstance(trigger["at_tick"], int) and trigger["at_tick"] >= 0,
                 f"{field}.at_tick", "non-negative integer")
    else:
        sr = trigger["sensor_rising"]
        _require(isinstance(sr, dict), f"{field}.sensor_rising", "must be a mapping")
        from .physics.base import SENSOR_SCHEMAS

        station = sr.get("station")
        _require(station in SENSOR_SCHEMAS, f"{field}.sensor_rising.station",
                 f"one of {sorted(SENSOR_SCHEMAS)}")
        names = [n for n, _, _ in SENSOR_SCHEMAS[station]]
        _require(sr.get("sensor") in names, f"{field}.sensor_rising.sensor",
                 f"one of {names}")
        occ = sr.get("occurrence", 1)
        _require(isinstance(occ, int) and occ >= 1, f"{field}.sensor_rising.occurrence",
                 "integer >= 1")
        delay = sr.get("delay_ticks", 0)
        _require(isinstance(delay, int) and delay >= 0,
                 f"{field}.sensor_rising.delay_ticks", "integer >= 0")


def validate(sc: Scenario) -> None:
    _require(sc.data.get("schema_version") == SCENARIO_SCHEMA_VERSION, "schema_version",
             f"must be {SCENARIO_SCHEMA_VERSION}")
    _require(sc.mode in ("fast", "realtime"), "run.mode", "fast or realtime")
    _require(sc.duration_ticks > 0, "run.duration_ticks", "must be positive")
    _require(sc.tick_ms > 0, "run.tick_ms", "must be positive")
    try:
        merged_params(sc.physics_overrides)
    except KeyError as exc:
        raise ConfigInvalid(f"physics.params.{exc.args[0]}", "unknown parameter") from None
    noise = sc.data.get("physics", {}).get("noise", {})
    for key, value in noise.items():
        _require(key in ("actuation_jitter_std_ticks", "color_noise_std"),
                 f"physics.noise.{key}", "unknown noise knob")
        _require(float(value) >= 0, f"physics.noise.{key}", "must be >= 0")
    for lid, cfg in (sc.data.get("network", {}).get("links", {}) or {}).items():
        _require(lid in sc.links, f"network.links.{lid}", "unknown link")
        for k in cfg:
            _require(k in ("latency_ms", "bandwidth_bps", "loss_prob"),
                     f"network.links.{lid}.{k}", "unknown link attribute")
        if "loss_prob" in cfg:
            _require(0.0 <= float(cfg["loss_prob"]) <= 1.0,
                     f"network.links.{lid}.loss_prob", "must be in [0, 1]")

    for i, item in enumerate(sc.workload):
        field = f"workload[{i}]"
        action = item.get("action")
        _require(action in WORKLOAD_ACTIONS, f"{field}.action",
                 f"one of {WORKLOAD_ACTIONS}")
        _require(isinstance(item.get("at_tick"), int) and item["at_tick"] >= 0,
                 f"{field}.at_tick", "non-negative integer")
        if action in ("spawn_cylinder", "stock_cylinder", "place_order"):
            _require(item.get("color") in COLORS, f"{field}.color", f"one of {COLORS}")
        if action == "stock_cylinder":
            for axis in ("x", "y"):
                _require(item.get(axis) in (1, 2, 3), f"{field}.{axis}", "1..3")
        if action == "place_order":
            for p in ("firing_time_ms", "milling_time_ms"):
                v = item.get(p, 1000)
                _require(isinstance(v, int) and 0 <= v <= 60000, f"{field}.{p}",
                         "integer in [0, 60000]")

    for i, atk in enumerate(sc.attacks):
        field = f"attacks[{i}]"
        kind = atk.get("kind")
        _require(kind in ATTACK_KINDS, f"{field}.kind", f"one of {ATTACK_KINDS}")
        _require(bool(atk.get("label")), f"{field}.label", "required")
        _validate_trigger(atk.get("trigger"), f"{field}.trigger")
        if kind in ("command_inject", "modbus_scan"):
            _require(atk.get("target") in PLC_IDS, f"{field}.target",
                     f"one of {PLC_IDS}")
        if kind == "command_inject":
            _require(isinstance(atk.get("register"), (int, str)), f"{field}.register",
                     "holding register index or parameter name")
            _require(isinstance(atk.get("value"), int), f"{field}.value", "integer")
        if kind == "modbus_scan":
            _require(int(atk.get("rate_per_tick", 0)) > 0, f"{field}.rate_per_tick",
                     "must be > 0")
            _require(int(atk.get("quantity", 0)) > 0, f"{field}.quantity", "must be > 0")
            for fc in atk.get("functions", [3]):
                _require(isinstance(fc, int) and 0 < fc < 0x80, f"{field}.functions",
                         "function codes in [1, 127]")
        if kind == "jam_link":
            _require(atk.get("target") in sc.links, f"{field}.target",
                     f"one of {sorted(sc.links)}")
            _require(int(atk.get("duration_ticks", -1)) >= 0, f"{field}.duration_ticks",
                     "must be >= 0")
        if kind == "block_gripper":
            _require(int(atk.get("duration_ticks", 0)) > 0, f"{field}.duration_ticks",
                     "must be > 0")
        if kind == "spawn_cylinder":
            _require(atk.get("color") in COLORS, f"{field}.color", f"one of {COLORS}")
        if kind == "remove_cylinder":
            sel = atk.get("cylinder_id"), atk.get("at")
            _require(any(s is not None for s in sel), f"{field}",
                     "needs cylinder_id or at: [station, slot]")


def load_scenario(path: str) -> Scenario:
    if not os.path.exists(path):
        raise ConfigInvalid("scenario", f"file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigInvalid("scenario", f"yaml parse error: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigInvalid("scenario", "top level must be a mapping")
    sc = Scenario(data, source=path)
    validate(sc)
    return sc


def builtin_scenario_path(name: str) -> str | None:
    here = os.path.join(os.path.dirname(__file__), "scenarios", f"{name}.yaml")
    return here if os.path.exists(here) else None


def resolve_scenario(name_or_path: str) -> Scenario:
    """Accept a file path or the bare name of a shipped scenario."""
    if os.path.exists(name_or_path):
        return load_scenario(name_or_path)
    builtin = builtin_scenario_path(name_or_path)
    if builtin:
        return load_scenario(builtin)
    raise ConfigInvalid("scenario", f"no such file or built-in scenario: {name_or_path}")
