"""Minimal pcap export: captured frames wrapped in Ethernet/IPv4/TCP.

Synthetic but well-formed headers so external tooling can dissect the
Modbus payloads; timestamps derive from tick index, never wall-clock.
Sequence numbers advance per (src, dst) flow by payload length.
"""

from __future__ import annotations

import struct

from ..names import DEFAULT_PORTS, NODES

_NODE_IPS = {node: f"10.0.0.{i + 1}" for i, node in enumerate(NODES)}
_CLIENT_PORT_BASE = 40000

PCAP_MAGIC = 0xA1B2C3D4
LINKTYPE_ETHERNET = 1


def _ip(node: str) -> bytes:
    addr = _NODE_IPS.get(node, "10.0.0.254")
    return bytes(int(x) for x in addr.split("."))


def _mac(node: str) -> bytes:
    idx = NODES.index(node) + 1 if node in NODES else 0xFE
    return bytes([0x02, 0, 0, 0, 0, idx])


def _tcp_port(node: str) -> int:
    if node in DEFAULT_PORTS:
        return DEFAULT_PORTS[node]
    return _CLIENT_PORT_BASE + (NODES.index(node) if node in NODES else 99)


def _checksum(data: bytes) -> int:
    if len(data) % 2:
        data += b"\x00"
    total = sum(struct.unpack(f">{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return (~total) & 0xFFFF


def _packet(src: str, dst: str, payload: bytes, seq: int, ack: int) -> bytes:
    sport, dport = _tcp_port(src), _tcp_port(dst)
    tcp = struct.pack(">HHIIBBHHH", sport, dport, seq & 0xFFFFFFFF,
                      ack & 0xFFFFFFFF, 5 << 4, 0x18, 65535, 0, 0) + payload
    total_len = 20 + len(tcp)
    ip_hdr = struct.pack(">BBHHHBBH4s4s", 0x45, 0, total_len, 0, 0x4000, 64, 6, 0,
                         _ip(src), _ip(dst))
    ip_hdr = ip_hdr[:10] + struct.pack(">H", _checksum(ip_hdr)) + ip_hdr[12:]
    eth = _mac(dst) + _mac(src) + b"\x08\x00"
    return eth + ip_hdr + tcp


def write_pcap(path: str, frames: list[tuple[int, str, str, bytes]],
               tick_ms: int) -> int:
    """``frames``: (tick, src, dst, payload) in capture order."""
    seqs: dict[tuple[str, str], int] = {}
    count = 0
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IHHiIII", PCAP_MAGIC, 2, 4, 0, 0, 65535,
                             LINKTYPE_ETHERNET))
        for tick, src, dst, payload in frames:
            flow = (src, dst)
            seq = seqs.get(flow, 1)
            pkt = _packet(src, dst, payload, seq, seqs.get((dst, src), 1))
            seqs[flow] = seq + len(payload)
            ts_us = tick * tick_ms * 1000
            fh.write(struct.pack(">IIII", ts_us // 1_000_000, ts_us % 1_000_000,
                                 len(pkt), len(pkt)))
            fh.write(pkt)
            count += 1
    return count


def read_pcap_payloads(path: str) -> list[bytes]:
    """Strip the synthetic headers back off (used by tests)."""
    out = []
    with open(path, "rb") as fh:
        header = fh.read(24)
        if len(header) < 24:
            return out
        while True:
            rec = fh.read(16)
            if len(rec) < 16:
                break
            _, _, incl, _ = struct.unpack(">IIII", rec)
            pkt = fh.read(incl)
            out.append(pkt[14 + 20 + 20:])
    return out
