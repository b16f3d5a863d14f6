"""Soft-PLC instances: scan cycle, image binding, parameters.

A scan runs read-inputs -> program -> write-outputs against the
register image. Remote writes land between scans (the kernel's node
phase precedes the scan phase), so a remote read always observes either
the pre-scan or the post-scan image, never a half-updated one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import OutOfBounds, UnknownParameter
from .fsm import ControlProgram
from .image import RegisterImage
from .regmap import REGISTER_MAPS, PlcMap

# Coils owned by remote writers; the program consumes them instead of
# rewriting them every scan.
REMOTE_TRIGGER_COILS = {"warehouse": ("unload_request",)}


@dataclass(slots=True)
class ActuatorImage:
    """Per-scan actuator command set handed to the physics stepper."""

    plc_id: str
    coils: dict[str, int] = field(default_factory=dict)
    words: dict[str, int] = field(default_factory=dict)


class PlcInstance:
    def __init__(self, plc_id: str, program: ControlProgram, tick_ms: int,
                 scan_period_ticks: int = 1, port: int | None = None):
        if scan_period_ticks < 1:
            raise ValueError("scan_period_ticks must be >= 1")
        self.plc_id = plc_id
        self.map: PlcMap = REGISTER_MAPS[plc_id]
        self.program = program
        self.tick_ms = tick_ms
        self.scan_period_ticks = scan_period_ticks
        self.port = port if port is not None else self.map.port
        self.image = RegisterImage(
            n_discrete=len(self.map.discrete_names),
            n_coils=len(self.map.coils),
            n_input=len(self.map.input_names),
            n_holding=len(self.map.holding),
            holding_writable=[s.writable for s in self.map.holding],
        )
        for i, spec in enumerate(self.map.holding):
            self.image.holding_registers[i] = spec.default
        self._triggers = REMOTE_TRIGGER_COILS.get(plc_id, ())
        self._bool_idx = [
            self.map.input_names.index(n) for n in self.map.discrete_names
        ]
        # double-buffered so the program's edge detection sees distinct
        # previous/current snapshots despite dict reuse
        self._inputs_buf = ({}, {})
        self._buf_flip = 0
        self._coil_map: dict[str, int] = {}
        self._trigger_coil_idx = [self.map.coil_index(n) for n in self._triggers]
        program.bind(self._read_param)

    def _read_param(self, name: str) -> int:
        return self.image.holding_registers[self.map.holding_index(name)]

    @property
    def parameters(self) -> dict[str, int]:
        return {s.name: self.image.holding_registers[i]
                for i, s in enumerate(self.map.holding)}

    def set_parameter(self, name: str, value: int) -> None:
        try:
            spec = self.map.holding_spec(name)
        except KeyError:
            raise UnknownParameter(f"{self.plc_id} has no parameter {name!r}") from None
        if not spec.lo <= value <= spec.hi:
            raise OutOfBounds(
                f"{self.plc_id}.{name}={value} outside [{spec.lo}, {spec.hi}]")
        self.image.holding_registers[self.map.holding_index(name)] = value

    def refresh_inputs(self, sensor_values: list[int]) -> None:
        self.image.input_registers[:] = sensor_values
        di = self.image.discrete_inputs
        for j, i in enumerate(self._bool_idx):
            di[j] = 1 if sensor_values[i] else 0

    def scan(self, tick: int, sensor_values: list[int]) -> ActuatorImage:
        self.refresh_inputs(sensor_values)
        self._buf_flip ^= 1
        inputs = self._inputs_buf[self._buf_flip]
        inputs.update(zip(self.map.input_names, sensor_values))
        for name, idx in zip(self._triggers, self._trigger_coil_idx):
            inputs[name] = self.image.coils[idx]
        out = self.program.scan(tick, inputs)
        consume = getattr(self.program, "consume_request_flag", None)
        clear_triggers = bool(consume and consume())
        coil_map = self._coil_map
        coils = self.image.coils
        for i, name in enumerate(self.map.coils):
            if name in self._triggers:
                if clear_triggers:
                    coils[i] = 0
            else:
                coils[i] = 1 if out.get(name) else 0
            coil_map[name] = coils[i]
        words = {k: int(v) for k, v in out.items() if k not in self.map.coils}
        return ActuatorImage(self.plc_id, coil_map, words)

    def digest_parts(self) -> list[str]:
        return [f"plc:{self.plc_id}:{self.program.state}:{self.program.ticks_in_state}",
                *self.image.digest_parts()]
