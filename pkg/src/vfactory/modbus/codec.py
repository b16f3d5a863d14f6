"""Modbus TCP codec: MBAP header plus function-coded PDU.

Wire layout (all multi-byte fields big-endian):

    transaction_id:2  protocol_id:2  length:2  unit_id:1  function:1  data:n

``length`` counts unit_id + function + data. Eight core functions are
handled; any other function code is still framed by the declared length
and surfaced with ``known=False`` so scans using odd codes remain
capturable instead of desynchronizing the stream.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..errors import BadProtocolId, InvalidQuantity, LengthMismatch, PayloadTooLarge

FUNC_READ_COILS = 0x01
FUNC_READ_DISCRETE_INPUTS = 0x02
FUNC_READ_HOLDING_REGISTERS = 0x03
FUNC_READ_INPUT_REGISTERS = 0x04
FUNC_WRITE_SINGLE_COIL = 0x05
FUNC_WRITE_SINGLE_REGISTER = 0x06
FUNC_WRITE_MULTIPLE_COILS = 0x0F
FUNC_WRITE_MULTIPLE_REGISTERS = 0x10

SUPPORTED_FUNCTIONS = frozenset(
    {0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x0F, 0x10}
)

READ_FUNCTIONS = frozenset({0x01, 0x02, 0x03, 0x04})
WRITE_FUNCTIONS = frozenset({0x05, 0x06, 0x0F, 0x10})

# Per-function quantity ceilings from the application protocol.
MAX_READ_BITS = 2000
MAX_READ_WORDS = 125
MAX_WRITE_BITS = 1968
MAX_WRITE_WORDS = 123

EXC_ILLEGAL_FUNCTION = 0x01
EXC_ILLEGAL_ADDRESS = 0x02
EXC_ILLEGAL_VALUE = 0x03

_MBAP = struct.Struct(">HHHB")
_HDR_LEN = 7


@dataclass(slots=True)
class ModbusFrame:
    """One framed MBAP+PDU message plus decode metadata."""

    transaction_id: int
    unit_id: int
    function: int
    payload: bytes
    raw: bytes = b""
    known: bool = True

    @property
    def is_exception(self) -> bool:
        return bool(self.function & 0x80)

    @property
    def exception_code(self) -> int | None:
        if self.is_exception and self.payload:
            return self.payload[0]
        return None

    @property
    def base_function(self) -> int:
        return self.function & 0x7F


def encode_frame(transaction_id: int, unit_id: int, function: int, payload: bytes) -> bytes:
    """Assemble the wire bytes for one frame."""
    length = 2 + len(payload)
    if length > 0xFFFF:
        raise PayloadTooLarge(f"pdu length {length} exceeds MBAP capacity")
    return _MBAP.pack(transaction_id & 0xFFFF, 0, length, unit_id & 0xFF) + bytes(
        [function & 0xFF]
    ) + payload


def encode_read_request(
    transaction_id: int, unit_id: int, function: int, address: int, quantity: int
) -> bytes:
    limit = MAX_READ_BITS if function in (0x01, 0x02) else MAX_READ_WORDS
    if not 1 <= quantity <= limit:
        raise InvalidQuantity(f"function 0x{function:02x} quantity {quantity} not in [1, {limit}]")
    return encode_frame(transaction_id, unit_id, function, struct.pack(">HH", address, quantity))


def encode_read_response_bits(
    transaction_id: int, unit_id: int, function: int, bits: list[int]
) -> bytes:
    nbytes = (len(bits) + 7) // 8
    packed = bytearray(nbytes)
    for i, b in enumerate(bits):
        if b:
            packed[i // 8] |= 1 << (i % 8)
    return encode_frame(
        transaction_id, unit_id, function, bytes([nbytes]) + bytes(packed)
    )


def encode_read_response_words(
    transaction_id: int, unit_id: int, function: int, words: list[int]
) -> bytes:
    data = struct.pack(f">{len(words)}H", *[w & 0xFFFF for w in words])
    return encode_frame(transaction_id, unit_id, function, bytes([len(data)]) + data)


def encode_write_single(
    transaction_id: int, unit_id: int, function: int, address: int, value: int
) -> bytes:
    """0x05 / 0x06 request; the success response is byte-identical."""
    if function == FUNC_WRITE_SINGLE_COIL and value not in (0x0000, 0xFF00):
        raise InvalidQuantity(f"coil value 0x{value:04x} must be 0x0000 or 0xFF00")
    return encode_frame(
        transaction_id, unit_id, function, struct.pack(">HH", address, value & 0xFFFF)
    )


def encode_write_multiple_registers(
    transaction_id: int, unit_id: int, address: int, values: list[int]
) -> bytes:
    if not 1 <= len(values) <= MAX_WRITE_WORDS:
        raise InvalidQuantity(f"write quantity {len(values)} not in [1, {MAX_WRITE_WORDS}]")
    data = struct.pack(f">{len(values)}H", *[v & 0xFFFF for v in values])
    payload = struct.pack(">HHB", address, len(values), len(data)) + data
    return encode_frame(transaction_id, unit_id, FUNC_WRITE_MULTIPLE_REGISTERS, payload)


def encode_write_multiple_coils(
    transaction_id: int, unit_id: int, address: int, bits: list[int]
) -> bytes:
    if not 1 <= len(bits) <= MAX_WRITE_BITS:
        raise InvalidQuantity(f"write quantity {len(bits)} not in [1, {MAX_WRITE_BITS}]")
    nbytes = (len(bits) + 7) // 8
    packed = bytearray(nbytes)
    for i, b in enumerate(bits):
        if b:
            packed[i // 8] |= 1 << (i % 8)
    payload = struct.pack(">HHB", address, len(bits), nbytes) + bytes(packed)
    return encode_frame(transaction_id, unit_id, FUNC_WRITE_MULTIPLE_COILS, payload)


def encode_write_ack(
    transaction_id: int, unit_id: int, function: int, address: int, quantity: int
) -> bytes:
    """Response for 0x0F / 0x10: echoes address and quantity."""
    return encode_frame(
        transaction_id, unit_id, function, struct.pack(">HH", address, quantity)
    )


def encode_exception(transaction_id: int, unit_id: int, function: int, code: int) -> bytes:
    return encode_frame(transaction_id, unit_id, (function & 0x7F) | 0x80, bytes([code]))


@dataclass(slots=True)
class DecodedPdu:
    """Typed view of a PDU; fields populated per function."""

    function: int
    is_exception: bool = False
    exception_code: int | None = None
    address: int | None = None
    quantity: int | None = None
    value: int | None = None
    values: list[int] = field(default_factory=list)
    bits: list[int] = field(default_factory=list)
    byte_count: int | None = None


def decode_pdu(function: int, payload: bytes, is_request: bool) -> DecodedPdu:
    """Interpret a supported-function PDU body.

    Responses for read functions carry no address; correlating them back
    to a register address is the caller's job (via transaction ids).
    """
    d = DecodedPdu(function=function)
    if function & 0x80:
        d.is_exception = True
        d.exception_code = payload[0] if payload else None
        return d
    if function in READ_FUNCTIONS:
        if is_request:
            d.address, d.quantity = struct.unpack(">HH", payload[:4])
        else:
            d.byte_count = payload[0] if payload else 0
            body = payload[1 : 1 + (d.byte_count or 0)]
            if function in (0x01, 0x02):
                for i in range(len(body) * 8):
                    d.bits.append((body[i // 8] >> (i % 8)) & 1)
            else:
                d.values = list(struct.unpack(f">{len(body) // 2}H", body[: len(body) // 2 * 2]))
        return d
    if function in (FUNC_WRITE_SINGLE_COIL, FUNC_WRITE_SINGLE_REGISTER):
        d.address, d.value = struct.unpack(">HH", payload[:4])
        return d
    if function == FUNC_WRITE_MULTIPLE_REGISTERS:
        if is_request:
            d.address, d.quantity, d.byte_count = struct.unpack(">HHB", payload[:5])
            body = payload[5 : 5 + d.byte_count]
            d.values = list(struct.unpack(f">{len(body) // 2}H", body[: len(body) // 2 * 2]))
        else:
            d.address, d.quantity = struct.unpack(">HH", payload[:4])
        return d
    if function == FUNC_WRITE_MULTIPLE_COILS:
        if is_request:
            d.address, d.quantity, d.byte_count = struct.unpack(">HHB", payload[:5])
            body = payload[5 : 5 + d.byte_count]
            for i in range(d.quantity):
                d.bits.append((body[i // 8] >> (i % 8)) & 1)
        else:
            d.address, d.quantity = struct.unpack(">HH", payload[:4])
        return d
    return d


class StreamDecoder:
    """Incremental frame extractor over a TCP-like byte stream.

    Frames split across arbitrary segment boundaries are reassembled;
    malformed headers raise without consuming past the bad frame, and
    resynchronization relies on the declared MBAP length.
    """

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[ModbusFrame]:
        if not self._buf and len(data) >= _HDR_LEN:
            # fast path: buffer empty and the chunk is exactly one frame
            txn, proto, length, unit = _MBAP.unpack(data[:_HDR_LEN])
            if proto == 0 and length >= 2 and len(data) == 6 + length:
                function = data[7]
                return [ModbusFrame(
                    transaction_id=txn, unit_id=unit, function=function,
                    payload=data[8:], raw=data,
                    known=(function & 0x7F) in SUPPORTED_FUNCTIONS)]
        self._buf.extend(data)
        frames = []
        while True:
            frame = self._try_next()
            if frame is None:
                break
            frames.append(frame)
        return frames

    def pending(self) -> int:
        return len(self._buf)

    def _try_next(self) -> ModbusFrame | None:
        if len(self._buf) < _HDR_LEN:
            return None
        txn, proto, length, unit = _MBAP.unpack(bytes(self._buf[:_HDR_LEN]))
        if proto != 0:
            # resync by the declared length so following frames survive
            del self._buf[: min(6 + length, len(self._buf))]
            raise BadProtocolId(f"protocol id 0x{proto:04x}")
        if length < 2:
            del self._buf[:_HDR_LEN]
            raise LengthMismatch(f"declared length {length} < 2")
        total = 6 + length
        if len(self._buf) < total:
            return None
        raw = bytes(self._buf[:total])
        del self._buf[:total]
        function = raw[7]
        payload = raw[8:]
        known = (function & 0x7F) in SUPPORTED_FUNCTIONS
        return ModbusFrame(
            transaction_id=txn,
            unit_id=unit,
            function=function,
            payload=payload,
            raw=raw,
            known=known,
        )


def decode_one(data: bytes) -> ModbusFrame:
    """Decode exactly one complete frame from ``data``."""
    dec = StreamDecoder()
    frames = dec.feed(data)
    if not frames:
        raise LengthMismatch("incomplete frame")
    if dec.pending() or len(frames) != 1:
        raise LengthMismatch("extra bytes beyond one frame")
    return frames[0]
