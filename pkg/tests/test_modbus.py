"""Codec conformance and stream robustness.

The reference encoders in this file are written independently against
the wire layout used by third-party Modbus TCP clients (MBAP header
``>HHHB`` with length = PDU bytes + 1, read/write PDUs ``>BHH`` etc.)
and deliberately do not import the codec under test.
"""

import random
import struct

import pytest
from hypothesis import given, settings, strategies as st

from vfactory.errors import BadProtocolId, InvalidQuantity
from vfactory.modbus import codec


# -- independent reference encoders (do not touch to "fix" tests) ---------

def ref_mbap(txn: int, unit: int, pdu: bytes) -> bytes:
    return struct.pack(">HHHB", txn, 0, len(pdu) + 1, unit) + pdu


def ref_read_request(txn, unit, fc, addr, qty) -> bytes:
    return ref_mbap(txn, unit, struct.pack(">BHH", fc, addr, qty))


def ref_write_single(txn, unit, fc, addr, value) -> bytes:
    return ref_mbap(txn, unit, struct.pack(">BHH", fc, addr, value))


def ref_write_multiple_registers(txn, unit, addr, values) -> bytes:
    body = b"".join(struct.pack(">H", v) for v in values)
    pdu = struct.pack(">BHHB", 0x10, addr, len(values), len(body)) + body
    return ref_mbap(txn, unit, pdu)


def ref_write_multiple_coils(txn, unit, addr, bits) -> bytes:
    nbytes = (len(bits) + 7) // 8
    packed = bytearray(nbytes)
    for i, b in enumerate(bits):
        if b:
            packed[i // 8] |= 1 << (i % 8)
    pdu = struct.pack(">BHHB", 0x0F, addr, len(bits), nbytes) + bytes(packed)
    return ref_mbap(txn, unit, pdu)


class TestGoldenBytes:
    def test_read_holding_registers_golden(self):
        # txn=1 unit=1 addr=0 qty=2, cross-checked against an independent
        # third-party client's framing
        wire = codec.encode_read_request(1, 1, 0x03, 0, 2)
        assert wire == bytes.fromhex("000100000006010300000002")

    def test_all_read_functions_match_reference(self):
        for fc in (0x01, 0x02, 0x03, 0x04):
            assert codec.encode_read_request(7, 3, fc, 10, 5) == \
                ref_read_request(7, 3, fc, 10, 5)

    def test_write_single_register_matches_reference(self):
        assert codec.encode_write_single(2, 1, 0x06, 0, 1000) == \
            ref_write_single(2, 1, 0x06, 0, 1000)

    def test_write_single_coil_matches_reference(self):
        assert codec.encode_write_single(2, 1, 0x05, 7, 0xFF00) == \
            ref_write_single(2, 1, 0x05, 7, 0xFF00)

    def test_write_multiple_registers_matches_reference(self):
        assert codec.encode_write_multiple_registers(9, 1, 4, [1, 2, 65535]) == \
            ref_write_multiple_registers(9, 1, 4, [1, 2, 65535])

    def test_write_multiple_coils_matches_reference(self):
        bits = [1, 0, 1, 1, 0, 0, 0, 1, 1]
        assert codec.encode_write_multiple_coils(9, 1, 4, bits) == \
            ref_write_multiple_coils(9, 1, 4, bits)

    def test_write_single_response_echoes_request(self):
        req = codec.encode_write_single(5, 1, 0x06, 3, 42)
        resp = codec.encode_write_single(5, 1, 0x06, 3, 42)
        assert req == resp


class TestQuantityBounds:
    def test_read_words_quantity_over_125_rejected(self):
        with pytest.raises(InvalidQuantity):
            codec.encode_read_request(1, 1, 0x03, 0, 126)

    def test_read_zero_quantity_rejected(self):
        with pytest.raises(InvalidQuantity):
            codec.encode_read_request(1, 1, 0x03, 0, 0)

    def test_read_bits_quantity_up_to_2000(self):
        codec.encode_read_request(1, 1, 0x01, 0, 2000)
        with pytest.raises(InvalidQuantity):
            codec.encode_read_request(1, 1, 0x01, 0, 2001)

    def test_coil_value_restricted(self):
        with pytest.raises(InvalidQuantity):
            codec.encode_write_single(1, 1, 0x05, 0, 0x0001)


class TestStreamDecode:
    def test_header_only_prefix_needs_more(self):
        wire = codec.encode_read_request(1, 1, 0x03, 0, 2)
        dec = codec.StreamDecoder()
        assert dec.feed(wire[:7]) == []
        frames = dec.feed(wire[7:])
        assert len(frames) == 1
        assert frames[0].raw == wire

    def test_roundtrip_decode(self):
        wire = codec.encode_read_request(1, 1, 0x03, 0, 2)
        frame = codec.decode_one(wire)
        pdu = codec.decode_pdu(frame.function, frame.payload, is_request=True)
        assert (frame.transaction_id, frame.unit_id, frame.function) == (1, 1, 3)
        assert (pdu.address, pdu.quantity) == (0, 2)

    def test_unknown_function_still_framed(self):
        wire = codec.encode_frame(4, 1, 0x2B, b"\x0e\x01\x00")
        frame = codec.decode_one(wire)
        assert frame.known is False
        assert frame.function == 0x2B
        assert frame.raw == wire

    def test_nonzero_protocol_id_rejected_then_resyncs(self):
        bad = struct.pack(">HHHB", 1, 5, 2, 1) + b"\x03"
        good = codec.encode_read_request(2, 1, 0x03, 0, 1)
        dec = codec.StreamDecoder()
        with pytest.raises(BadProtocolId):
            dec.feed(bad + good)
        assert [f.transaction_id for f in dec.feed(b"")] == [2]

    def test_exception_frame_decodes(self):
        wire = codec.encode_exception(9, 1, 0x03, 0x02)
        frame = codec.decode_one(wire)
        assert frame.is_exception
        assert frame.exception_code == 0x02
        assert frame.base_function == 0x03

    @given(st.data())
    @settings(max_examples=120, deadline=None)
    def test_arbitrary_chunking_yields_same_frames(self, data):
        frames_in = []
        blob = b""
        for _ in range(data.draw(st.integers(1, 5))):
            txn = data.draw(st.integers(0, 0xFFFF))
            addr = data.draw(st.integers(0, 200))
            qty = data.draw(st.integers(1, 100))
            wire = codec.encode_read_request(txn, 1, 0x04, addr, qty)
            frames_in.append(wire)
            blob += wire
        dec = codec.StreamDecoder()
        out = []
        i = 0
        while i < len(blob):
            step = data.draw(st.integers(1, 17))
            out.extend(dec.feed(blob[i:i + step]))
            i += step
        assert [f.raw for f in out] == frames_in
        assert dec.pending() == 0


def random_valid_frame(rng: random.Random) -> bytes:
    fc = rng.choice([0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x0F, 0x10])
    txn = rng.randrange(0x10000)
    unit = rng.randrange(256)
    if fc in (0x01, 0x02):
        return codec.encode_read_request(txn, unit, fc, rng.randrange(0x10000),
                                         rng.randint(1, 2000))
    if fc in (0x03, 0x04):
        return codec.encode_read_request(txn, unit, fc, rng.randrange(0x10000),
                                         rng.randint(1, 125))
    if fc == 0x05:
        return codec.encode_write_single(txn, unit, fc, rng.randrange(0x10000),
                                         rng.choice([0x0000, 0xFF00]))
    if fc == 0x06:
        return codec.encode_write_single(txn, unit, fc, rng.randrange(0x10000),
                                         rng.randrange(0x10000))
    if fc == 0x0F:
        bits = [rng.randint(0, 1) for _ in range(rng.randint(1, 64))]
        return codec.encode_write_multiple_coils(txn, unit, rng.randrange(0x10000),
                                                 bits)
    values = [rng.randrange(0x10000) for _ in range(rng.randint(1, 32))]
    return codec.encode_write_multiple_registers(txn, unit, rng.randrange(0x10000),
                                                 values)


def test_roundtrip_reencode_sample():
    # the bulk 1e5-frame fuzz lives in the acceptance suite; this is the
    # quick development-loop version
    rng = random.Random(1234)
    for _ in range(2000):
        wire = random_valid_frame(rng)
        frame = codec.decode_one(wire)
        assert frame.raw == wire
        assert frame.known
