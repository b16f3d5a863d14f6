"""Transcription of captured traffic into detector inputs.

Two views are derived from the modbus_frame records of a dataset:

- channel events: one symbol per frame, keyed by (src, dst, function,
  address bucket). Responses inherit the address of the request they
  answer (matched via transaction id), since read responses do not
  carry one on the wire.
- process observations: (tick, variable, value) extracted from read
  responses and write requests, named through the register maps. This
  is the network-derived process view: what an observer of the traffic
  can know, which is exactly what the process-aware detectors consume.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..names import PLC_IDS
from ..physics.base import SENSOR_SCHEMAS
from ..plc.regmap import REGISTER_MAPS

READ_FCS = (1, 2, 3, 4)

_AREA_OF_FC = {1: "coils", 2: "discrete", 3: "holding", 4: "input",
               5: "coils", 6: "holding", 15: "coils", 16: "holding"}


def _names_for(plc_id: str, area: str) -> list[str]:
    m = REGISTER_MAPS[plc_id]
    if area == "input":
        return m.input_names
    if area == "discrete":
        return m.discrete_names
    if area == "coils":
        return list(m.coils)
    if area == "holding":
        return [s.name for s in m.holding]
    return []


@dataclass(slots=True)
class ChannelEvent:
    tick: int
    key: str


@dataclass(slots=True)
class Observation:
    tick: int
    variable: str
    value: int


class Transcriber:
    """Streaming request/response correlation over frame records."""

    def __init__(self, address_bucket: int = 0):
        # bucket 0 means exact addresses
        self.bucket = address_bucket
        self._pending: dict[tuple[str, str, int], dict] = {}
        self.channel_events: list[ChannelEvent] = []
        self.observations: list[Observation] = []

    def _bucketed(self, addr) -> str:
        if addr is None:
            return "?"
        if self.bucket and self.bucket > 1:
            return f"b{addr // self.bucket}"
        return str(addr)

    def feed(self, rec: dict) -> None:
        if rec.get("kind") != "modbus_frame" or rec.get("decode_error"):
            return
        tick, src, dst = rec["tick"], rec["src"], rec["dst"]
        fc = rec.get("fc", 0)
        base_fc = fc & 0x7F
        txn = rec.get("txn")
        if dst in PLC_IDS:
            addr = rec.get("addr")
            self._pending[(dst, src, txn)] = rec
            self.channel_events.append(
                ChannelEvent(tick, f"{src}>{dst}/{base_fc}/{self._bucketed(addr)}"))
            if fc in (5, 6):
                self._observe_write(tick, dst, fc, rec.get("addr"), [rec.get("value")])
            elif fc == 16:
                self._observe_write(tick, dst, fc, rec.get("addr"),
                                    rec.get("values", []))
            elif fc == 15:
                self._observe_write(tick, dst, fc, rec.get("addr"), rec.get("bits", []))
            return
        if src in PLC_IDS:
            req = self._pending.pop((src, dst, txn), None)
            addr = req.get("addr") if req else None
            self.channel_events.append(
                ChannelEvent(tick, f"{src}>{dst}/{base_fc}/{self._bucketed(addr)}"))
            if rec.get("exception") is not None or req is None:
                return
            if base_fc in READ_FCS:
                values = rec.get("values") or rec.get("bits") or []
                qty = req.get("qty") or len(values)
                self._observe_read(tick, src, base_fc, addr, values[:qty])

    def _observe_read(self, tick, plc_id, fc, addr, values) -> None:
        area = _AREA_OF_FC.get(fc)
        names = _names_for(plc_id, area)
        for i, value in enumerate(values):
            idx = (addr or 0) + i
            if idx < len(names):
                self.observations.append(
                    Observation(tick, f"{plc_id}.{names[idx]}", int(value)))

    def _observe_write(self, tick, plc_id, fc, addr, values) -> None:
        if addr is None:
            return
        area = _AREA_OF_FC.get(fc)
        names = _names_for(plc_id, area)
        for i, value in enumerate(v for v in values if v is not None):
            idx = addr + i
            if idx < len(names):
                raw = int(value)
                if fc == 5:
                    raw = 1 if raw else 0
                self.observations.append(
                    Observation(tick, f"{plc_id}.{names[idx]}", raw))


def transcribe(records, address_bucket: int = 0) -> Transcriber:
    tr = Transcriber(address_bucket)
    for rec in records:
        tr.feed(rec)
    return tr


def variable_names() -> set[str]:
    """All transcribable variable names (used to sanity-check uniqueness)."""
    out = set()
    for plc_id in PLC_IDS:
        for area in ("input", "coils", "holding"):
            for name in _names_for(plc_id, area):
                out.add(f"{plc_id}.{name}")
    return out


def sensor_variable(plc_id: str, sensor: str) -> str:
    names = [n for n, _, _ in SENSOR_SCHEMAS[REGISTER_MAPS[plc_id].frame_id]]
    if sensor not in names:
        raise KeyError(f"{plc_id}.{sensor}")
    return f"{plc_id}.{sensor}"
