"""Append-only run capture: one JSON line per record.

Record kinds share a global (tick, seq) order:

- ``process_sample``: one station's sensor frame, values in schema order.
- ``modbus_frame``: one message as seen by the switch tap, raw bytes
  plus a best-effort decode (requests decode with addresses; responses
  carry values and are correlated offline).
- ``ground_truth``: one labeled attack interval, emitted when it closes.
- ``link_event``: jam transitions.

Lines are built with a fixed field order, so a rerun of the same
scenario produces byte-identical files. The writer formats lines by
hand on the hot paths; the structure of every record kind is documented
in docs/dataset.md and round-trips through ``json.loads``.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct

from ..modbus import codec
from ..names import PLC_IDS
from ..physics.base import SENSOR_SCHEMAS, frame_sensor_names

SCHEMA_VERSION = 1

_MBAP = struct.Struct(">HHHB")


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class Recorder:
    def __init__(self, out_dir: str | None, sample_period_ticks: int = 1,
                 enabled: bool = True):
        self.enabled = enabled and out_dir is not None
        self.out_dir = out_dir
        self.sample_period = max(1, sample_period_ticks)
        self._seq = 0
        self._fh = None
        self.counts = {"process_sample": 0, "modbus_frame": 0, "ground_truth": 0,
                       "link_event": 0}
        self.frame_payloads: list[tuple[int, str, str, bytes]] = []
        self.consumers: list = []  # live taps (attached detectors)
        # per-station preformatted line templates for the sample fast path
        self._sample_fmt = {}
        for fid in SENSOR_SCHEMAS:
            body = ",".join(f'"{name}":{{}}' for name in frame_sensor_names(fid))
            self._sample_fmt[fid] = (
                '{{"kind":"process_sample","tick":{},"seq":{}'
                ',"station":"' + fid + '","values":{{' + body + "}}}}")
        self._buf: list[str] = []
        if self.enabled:
            os.makedirs(out_dir, exist_ok=True)
            self._fh = open(os.path.join(out_dir, "trace.jsonl"), "w", encoding="utf-8")

    def attach(self, consumer) -> None:
        """Live tap: consumer(record_dict) for every record as it is cut."""
        self.consumers.append(consumer)

    def _write(self, kind: str, line: str, parsed: dict | None = None) -> None:
        if self._fh is not None:
            buf = self._buf
            buf.append(line)
            if len(buf) >= 512:
                self._fh.write("\n".join(buf) + "\n")
                buf.clear()
        self.counts[kind] += 1
        if self.consumers:
            rec = parsed if parsed is not None else json.loads(line)
            for consumer in self.consumers:
                consumer(rec)

    def _flush(self) -> None:
        if self._fh is not None and self._buf:
            self._fh.write("\n".join(self._buf) + "\n")
            self._buf.clear()

    # -- capture hooks --------------------------------------------------

    def on_frame(self, tick: int, src: str, dst: str, link: str, conn: str,
                 payload: bytes) -> None:
        if not self.enabled and not self.consumers:
            return
        self._seq += 1
        parts = [f'{{"kind":"modbus_frame","tick":{tick},"seq":{self._seq}',
                 f',"src":"{src}","dst":"{dst}","link":"{link}","conn":"{conn}"',
                 f',"raw":"{payload.hex()}"']
        if len(payload) >= 8:
            txn, proto, length, unit = _MBAP.unpack_from(payload)
            fc = payload[7]
            if proto == 0 and length == len(payload) - 6:
                known = (fc & 0x7F) in codec.SUPPORTED_FUNCTIONS
                parts.append(f',"txn":{txn},"unit":{unit},"fc":{fc}'
                             f',"known":{"true" if known else "false"}')
                if fc & 0x80:
                    exc = payload[8] if len(payload) > 8 else 0
                    parts.append(f',"exception":{exc}')
                elif known:
                    try:
                        self._decode_fields(parts, fc, payload, dst in PLC_IDS)
                    except Exception:
                        parts.append(',"decode_error":true')
            else:
                parts.append(',"decode_error":true')
        else:
            parts.append(',"decode_error":true')
        parts.append("}")
        self.frame_payloads.append((tick, src, dst, payload))
        self._write("modbus_frame", "".join(parts))

    @staticmethod
    def _decode_fields(parts: list[str], fc: int, payload: bytes,
                       is_request: bool) -> None:
        # hot path: hand-rolled per-function decode, mirrors codec.decode_pdu
        if fc in (1, 2, 3, 4):
            if is_request:
                addr, qty = struct.unpack_from(">HH", payload, 8)
                parts.append(f',"addr":{addr},"qty":{qty}')
            else:
                nbytes = payload[8]
                body = payload[9:9 + nbytes]
                if fc in (3, 4):
                    words = struct.unpack(f">{len(body) // 2}H",
                                          body[: len(body) // 2 * 2])
                    parts.append(f',"values":[{",".join(map(str, words))}]')
                else:
                    bits = [(body[i // 8] >> (i % 8)) & 1
                            for i in range(len(body) * 8)]
                    parts.append(f',"bits":[{",".join(map(str, bits))}]')
        elif fc in (5, 6):
            addr, value = struct.unpack_from(">HH", payload, 8)
            parts.append(f',"addr":{addr},"value":{value}')
        elif fc == 16:
            if is_request:
                addr, qty, nbytes = struct.unpack_from(">HHB", payload, 8)
                body = payload[13:13 + nbytes]
                words = struct.unpack(f">{len(body) // 2}H", body[: len(body) // 2 * 2])
                parts.append(
                    f',"addr":{addr},"qty":{qty}'
                    f',"values":[{",".join(map(str, words))}]')
            else:
                addr, qty = struct.unpack_from(">HH", payload, 8)
                parts.append(f',"addr":{addr},"qty":{qty}')
        elif fc == 15:
            if is_request:
                addr, qty, nbytes = struct.unpack_from(">HHB", payload, 8)
                body = payload[13:13 + nbytes]
                bits = [(body[i // 8] >> (i % 8)) & 1 for i in range(qty)]
                parts.append(f',"addr":{addr},"qty":{qty}'
                             f',"bits":[{",".join(map(str, bits))}]')
            else:
                addr, qty = struct.unpack_from(">HH", payload, 8)
                parts.append(f',"addr":{addr},"qty":{qty}')

    def on_samples(self, tick: int, frames) -> None:
        if (not self.enabled and not self.consumers) or tick % self.sample_period:
            return
        for frame in frames:
            self._seq += 1
            line = self._sample_fmt[frame.station].format(tick, self._seq,
                                                          *frame.values)
            self._write("process_sample", line)

    def on_ground_truth(self, tick: int, label: str, kind: str, target: str,
                        start_tick: int, end_tick: int) -> None:
        self._seq += 1
        self._write(
            "ground_truth",
            f'{{"kind":"ground_truth","tick":{tick},"seq":{self._seq}'
            f',"label":"{label}","attack":"{kind}","target":"{target}"'
            f',"start_tick":{start_tick},"end_tick":{end_tick}}}')

    def on_link_event(self, tick: int, link: str, event: str) -> None:
        self._seq += 1
        self._write(
            "link_event",
            f'{{"kind":"link_event","tick":{tick},"seq":{self._seq}'
            f',"link":"{link}","event":"{event}"}}')

    # -- finalization -----------------------------------------------------

    def finalize(self, scenario_name: str, seed: int, config_sha256: str,
                 tick_ms: int, duration_ticks: int) -> dict:
        manifest = {
            "kind": "manifest",
            "schema_version": SCHEMA_VERSION,
            "scenario": scenario_name,
            "seed": seed,
            "config_sha256": config_sha256,
            "tick_ms": tick_ms,
            "duration_ticks": duration_ticks,
            "counts": dict(sorted(self.counts.items())),
            "sensor_schema": {
                fid: [[n, lo, hi] for n, lo, hi in SENSOR_SCHEMAS[fid]]
                for fid in sorted(SENSOR_SCHEMAS)
            },
        }
        if self.enabled:
            self._flush()
            self._fh.close()
            self._fh = None
            path = os.path.join(self.out_dir, "manifest.json")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(canonical(manifest))
                fh.write("\n")
        return manifest

    def close(self) -> None:
        if self._fh is not None:
            self._flush()
            self._fh.close()
            self._fh = None


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
