"""Server and client endpoints speaking the codec over the fabric.

The server answers reads of all four areas and writes to coils and
holding registers against a PLC's register image, with a per-tick
request budget: requests beyond the budget queue FIFO, which is what
makes floods (scans) visibly delay legitimate poll responses.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

from ..errors import ModbusError
from ..plc.image import IllegalAddress, IllegalValue
from ..plc.runtime import PlcInstance
from . import codec
from .codec import ModbusFrame

AREA_BY_FUNC = {
    codec.FUNC_READ_COILS: "coils",
    codec.FUNC_READ_DISCRETE_INPUTS: "discrete",
    codec.FUNC_READ_HOLDING_REGISTERS: "holding",
    codec.FUNC_READ_INPUT_REGISTERS: "input",
}


class ServerEndpoint:
    """One PLC's Modbus server: per-connection decoders, FIFO request queue."""

    def __init__(self, plc: PlcInstance, capacity_per_tick: int = 4):
        self.plc = plc
        self.capacity = capacity_per_tick
        self._decoders: dict[str, codec.StreamDecoder] = {}
        self._queue: deque[tuple[str, str, ModbusFrame]] = deque()

    def feed(self, conn: str, client: str, data: bytes) -> None:
        dec = self._decoders.setdefault(conn, codec.StreamDecoder())
        try:
            for frame in dec.feed(data):
                self._queue.append((conn, client, frame))
        except ModbusError:
            # malformed header: drop this connection's buffer, stay up
            self._decoders.pop(conn, None)

    def backlog(self) -> int:
        return len(self._queue)

    def process(self, tick: int) -> list[tuple[str, str, bytes]]:
        out = []
        for _ in range(min(self.capacity, len(self._queue))):
            conn, client, frame = self._queue.popleft()
            out.append((conn, client, self._handle(frame)))
        return out

    def _handle(self, frame: ModbusFrame) -> bytes:
        txn, unit, fc = frame.transaction_id, frame.unit_id, frame.function
        if not frame.known:
            return codec.encode_exception(txn, unit, fc, codec.EXC_ILLEGAL_FUNCTION)
        try:
            pdu = codec.decode_pdu(fc, frame.payload, is_request=True)
        except Exception:
            return codec.encode_exception(txn, unit, fc, codec.EXC_ILLEGAL_VALUE)
        image = self.plc.image
        try:
            if fc in (codec.FUNC_READ_COILS, codec.FUNC_READ_DISCRETE_INPUTS):
                if not 1 <= (pdu.quantity or 0) <= codec.MAX_READ_BITS:
                    raise IllegalValue(str(pdu.quantity))
                bits = image.read_bits(AREA_BY_FUNC[fc], pdu.address, pdu.quantity)
                return codec.encode_read_response_bits(txn, unit, fc, bits)
            if fc in (codec.FUNC_READ_HOLDING_REGISTERS, codec.FUNC_READ_INPUT_REGISTERS):
                if not 1 <= (pdu.quantity or 0) <= codec.MAX_READ_WORDS:
                    raise IllegalValue(str(pdu.quantity))
                words = image.read_words(AREA_BY_FUNC[fc], pdu.address, pdu.quantity)
                return codec.encode_read_response_words(txn, unit, fc, words)
            if fc == codec.FUNC_WRITE_SINGLE_COIL:
                if pdu.value not in (0x0000, 0xFF00):
                    raise IllegalValue(f"0x{pdu.value:04x}")
                image.write_coil(pdu.address, 1 if pdu.value else 0)
                return codec.encode_write_single(txn, unit, fc, pdu.address, pdu.value)
            if fc == codec.FUNC_WRITE_SINGLE_REGISTER:
                self._checked_holding_write(pdu.address, pdu.value)
                return codec.encode_write_single(txn, unit, fc, pdu.address, pdu.value)
            if fc == codec.FUNC_WRITE_MULTIPLE_COILS:
                for i in range(pdu.quantity):
                    image.read_bits("coils", pdu.address + i, 1)
                for i, bit in enumerate(pdu.bits[: pdu.quantity]):
                    image.write_coil(pdu.address + i, bit)
                return codec.encode_write_ack(txn, unit, fc, pdu.address, pdu.quantity)
            if fc == codec.FUNC_WRITE_MULTIPLE_REGISTERS:
                for i, value in enumerate(pdu.values):
                    self._check_holding_value(pdu.address + i, value)
                for i, value in enumerate(pdu.values):
                    self._checked_holding_write(pdu.address + i, value)
                return codec.encode_write_ack(txn, unit, fc, pdu.address, pdu.quantity)
        except IllegalAddress:
            return codec.encode_exception(txn, unit, fc, codec.EXC_ILLEGAL_ADDRESS)
        except IllegalValue:
            return codec.encode_exception(txn, unit, fc, codec.EXC_ILLEGAL_VALUE)
        return codec.encode_exception(txn, unit, fc, codec.EXC_ILLEGAL_FUNCTION)

    def _check_holding_value(self, address: int, value: int) -> None:
        holding = self.plc.map.holding
        if not 0 <= address < len(holding):
            raise IllegalAddress(f"holding[{address}]")
        spec = holding[address]
        if not spec.lo <= value <= spec.hi:
            raise IllegalValue(f"{spec.name}={value}")

    def _checked_holding_write(self, address: int, value: int) -> None:
        self._check_holding_value(address, value)
        self.plc.image.write_holding(address, value)


@dataclass(slots=True)
class Pending:
    meta: dict
    deadline_tick: int
    on_response: Callable[[ModbusFrame, dict], None] | None
    on_timeout: Callable[[dict], None] | None


class ClientPort:
    """Transaction-matching Modbus client bound to one fabric node."""

    def __init__(self, node: str, send_fn: Callable[[int, str, str, bytes], None]):
        self.node = node
        self._send = send_fn
        self._txn = 0
        self._pending: dict[tuple[str, int], Pending] = {}
        self._decoders: dict[str, codec.StreamDecoder] = {}

    def next_txn(self) -> int:
        self._txn = (self._txn + 1) & 0xFFFF
        return self._txn

    def request(self, tick: int, dst: str, payload_builder, timeout_ticks: int,
                meta: dict | None = None, on_response=None, on_timeout=None) -> int:
        """Send one request; ``payload_builder(txn)`` returns the frame bytes."""
        txn = self.next_txn()
        data = payload_builder(txn)
        self._pending[(dst, txn)] = Pending(
            meta or {}, tick + timeout_ticks, on_response, on_timeout)
        self._send(tick, self.node, dst, data)
        return txn

    def feed(self, src: str, data: bytes) -> None:
        dec = self._decoders.setdefault(src, codec.StreamDecoder())
        try:
            frames = dec.feed(data)
        except ModbusError:
            self._decoders.pop(src, None)
            return
        for frame in frames:
            pending = self._pending.pop((src, frame.transaction_id), None)
            if pending is not None and pending.on_response is not None:
                pending.on_response(frame, pending.meta)

    def expire(self, tick: int) -> None:
        expired = [key for key, p in self._pending.items() if tick >= p.deadline_tick]
        for key in expired:
            pending = self._pending.pop(key)
            if pending.on_timeout is not None:
                pending.on_timeout(pending.meta)

    def pending_count(self) -> int:
        return len(self._pending)
