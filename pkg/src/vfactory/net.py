"""Emulated network fabric: links, a switch, jam control, real bridges.

Every message crosses two hops (node -> switch -> node). A hop models
serialization over the link's bandwidth (busy-until accounting, so
floods queue), adds the link latency, and rounds the arrival to a
delivery tick half-up. Per direction, delivery order equals send order.
While a link is jammed nothing crosses it in either direction.

With ``swap_link_real`` the messages of one link leave and enter the
process through real TCP sockets instead of the emulated queue; socket
I/O runs on worker threads that only touch the kernel via inject
queues drained at tick boundaries.
"""

from __future__ import annotations

import heapq
import socket
import threading
from dataclasses import dataclass, field

from .errors import BindFailed, UnknownLink
from .kernel import RngHub
from .names import SWITCH, link_id

DEFAULT_LATENCY_MS = 20.0
DEFAULT_BANDWIDTH_BPS = 10_000_000  # bytes per second
DEFAULT_LOSS = 0.0


@dataclass(slots=True)
class LinkStats:
    sent: int = 0
    delivered: int = 0
    dropped_loss: int = 0
    dropped_jam: int = 0
    jam_windows: list[tuple[int, int]] = field(default_factory=list)


class _Direction:
    __slots__ = ("next_free_ms",)

    def __init__(self):
        self.next_free_ms = 0.0


class VirtualLink:
    def __init__(self, lid: str, a: str, b: str, latency_ms: float,
                 bandwidth_bps: float, loss_prob: float):
        self.id = lid
        self.ends = (a, b)
        self.latency_ms = latency_ms
        self.bandwidth_bps = bandwidth_bps
        self.loss_prob = loss_prob
        self.jammed = False
        self.jam_started: int | None = None
        self.stats = LinkStats()
        self.directions = {a: _Direction(), b: _Direction()}
        self.bridge: "LinkBridge | None" = None


@dataclass(slots=True)
class Message:
    conn: str
    src: str
    dst: str
    payload: bytes


class Fabric:
    """Tick-driven message fabric for the star topology."""

    def __init__(self, rng: RngHub, tick_ms: int, links: dict[str, dict] | None = None,
                 capture=None, on_link_event=None):
        self.tick_ms = tick_ms
        self.rng = rng
        self.capture = capture
        self.on_link_event = on_link_event
        self.links: dict[str, VirtualLink] = {}
        self._heap: list[tuple[int, int, int, object]] = []  # (tick, seq, kind, item)
        self._seq = 0
        self._inboxes: dict[str, list[tuple[str, str, bytes]]] = {}
        self.delivered_total = 0
        self._node_link: dict[str, VirtualLink] = {}
        for lid, cfg in (links or {}).items():
            a, b = lid.split("--")
            link = VirtualLink(
                lid, a, b,
                latency_ms=cfg.get("latency_ms", DEFAULT_LATENCY_MS),
                bandwidth_bps=cfg.get("bandwidth_bps", DEFAULT_BANDWIDTH_BPS),
                loss_prob=cfg.get("loss_prob", DEFAULT_LOSS),
            )
            self.links[lid] = link
            node = a if b == SWITCH else b
            self._node_link[node] = link

    def link_for(self, node: str) -> VirtualLink:
        link = self._node_link.get(node)
        if link is None:
            raise UnknownLink(link_id(node, SWITCH))
        return link

    def get_link(self, lid: str) -> VirtualLink:
        if lid not in self.links:
            raise UnknownLink(lid)
        return self.links[lid]

    # -- sending --------------------------------------------------------

    def send(self, tick: int, src: str, dst: str, conn: str, payload: bytes) -> None:
        if not payload:
            raise ValueError("empty payload")
        msg = Message(conn, src, dst, payload)
        self._hop(tick, self.link_for(src), src, msg, at_switch=False)

    def _hop(self, tick: int, link: VirtualLink, sender: str, msg: Message,
             at_switch: bool) -> None:
        link.stats.sent += 1
        if link.bridge is not None:
            # the link is swapped for real sockets: egress instead of queueing
            link.bridge.egress(msg)
            return
        if link.jammed:
            link.stats.dropped_jam += 1
            return
        if link.loss_prob > 0:
            if self.rng.stream(f"net:{link.id}").random() < link.loss_prob:
                link.stats.dropped_loss += 1
                return
        direction = link.directions[sender]
        now_ms = tick * self.tick_ms
        start = max(now_ms, direction.next_free_ms)
        ser = len(msg.payload) / link.bandwidth_bps * 1000.0
        finish = start + ser
        direction.next_free_ms = finish
        arrival_ms = finish + link.latency_ms
        due = int(arrival_ms / self.tick_ms + 0.5)
        if due <= tick:
            due = tick + 1
        self._seq += 1
        kind = 1 if at_switch else 0  # 0: arriving at switch, 1: arriving at node
        heapq.heappush(self._heap, (due, self._seq, kind, (link, msg)))

    # -- delivery -------------------------------------------------------

    def deliver_due(self, tick: int) -> int:
        count = 0
        while self._heap and self._heap[0][0] <= tick:
            _, _, kind, (link, msg) = heapq.heappop(self._heap)
            if link.jammed:
                link.stats.dropped_jam += 1
                continue
            if kind == 0:
                # crossed the first hop; the switch forwards and the tap records
                link.stats.delivered += 1
                if self.capture is not None:
                    self.capture(tick, msg.src, msg.dst, link.id, msg.conn, msg.payload)
                try:
                    out_link = self.link_for(msg.dst)
                except UnknownLink:
                    continue
                self._hop(tick, out_link, SWITCH, msg, at_switch=True)
            else:
                link.stats.delivered += 1
                self._inboxes.setdefault(msg.dst, []).append((msg.conn, msg.src, msg.payload))
                count += 1
                self.delivered_total += 1
        return count

    def drain_inbox(self, node: str) -> list[tuple[str, str, bytes]]:
        box = self._inboxes.get(node)
        if not box:
            return []
        self._inboxes[node] = []
        return box

    def inject_delivery(self, node: str, conn: str, src: str, payload: bytes) -> None:
        """Entry point for bridge threads; drained at the next tick boundary."""
        self._inboxes.setdefault(node, []).append((conn, src, payload))

    # -- jam control ------------------------------------------------------

    def set_jam(self, lid: str, on: bool, tick: int) -> None:
        link = self.get_link(lid)
        if on and not link.jammed:
            link.jammed = True
            link.jam_started = tick
            if self.on_link_event:
                self.on_link_event(tick, lid, "jam_on")
        elif not on and link.jammed:
            link.jammed = False
            link.stats.jam_windows.append((link.jam_started or 0, tick))
            link.jam_started = None
            if self.on_link_event:
                self.on_link_event(tick, lid, "jam_off")

    def stats_summary(self) -> dict:
        return {
            lid: {
                "sent": l.stats.sent,
                "delivered": l.stats.delivered,
                "dropped_loss": l.stats.dropped_loss,
                "dropped_jam": l.stats.dropped_jam,
                "jam_windows": list(l.stats.jam_windows),
            }
            for lid, l in sorted(self.links.items())
        }

    def swap_link_real(self, lid: str, listen_host: str, listen_port: int,
                       peer_host: str, peer_port: int) -> "LinkBridge":
        link = self.get_link(lid)
        bridge = LinkBridge(self, link, listen_host, listen_port, peer_host, peer_port)
        link.bridge = bridge
        bridge.start()
        return bridge


class LinkBridge:
    """Replaces one emulated link with a pair of real TCP endpoints.

    Egress messages are written to an outbound connection to the peer
    address; bytes arriving on the listening port are injected into the
    fabric as deliveries to this link's non-switch end.
    """

    def __init__(self, fabric: Fabric, link: VirtualLink, listen_host: str,
                 listen_port: int, peer_host: str, peer_port: int):
        self.fabric = fabric
        self.link = link
        self.node = link.ends[0] if link.ends[1] == SWITCH else link.ends[1]
        self.listen_addr = (listen_host, listen_port)
        self.peer_addr = (peer_host, peer_port)
        self._server: socket.socket | None = None
        self._out: socket.socket | None = None
        self._conns: dict[str, socket.socket] = {}
        self._lock = threading.Lock()
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()

    def start(self) -> None:
        try:
            srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            srv.bind(self.listen_addr)
            srv.listen(4)
        except OSError as exc:
            raise BindFailed(f"{self.listen_addr}: {exc}") from exc
        self._server = srv
        t = threading.Thread(target=self._accept_loop, daemon=True)
        t.start()
        self._threads.append(t)

    def egress(self, msg: Message) -> None:
        with self._lock:
            if self._out is None:
                try:
                    self._out = socket.create_connection(self.peer_addr, timeout=2.0)
                except OSError:
                    self.link.stats.dropped_loss += 1
                    return
            try:
                self._out.sendall(msg.payload)
                self.link.stats.sent += 1
            except OSError:
                self._out = None
                self.link.stats.dropped_loss += 1

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, addr = self._server.accept()
            except OSError:
                return
            t = threading.Thread(target=self._reader, args=(conn, addr), daemon=True)
            t.start()
            self._threads.append(t)

    def _reader(self, conn: socket.socket, addr) -> None:
        conn_id = f"bridge:{addr[0]}:{addr[1]}"
        with self._lock:
            self._conns[conn_id] = conn
        try:
            while not self._stop.is_set():
                try:
                    data = conn.recv(4096)
                except OSError:
                    return
                if not data:
                    return
                self.fabric.inject_delivery(self.node, conn_id, "external", data)
        finally:
            with self._lock:
                self._conns.pop(conn_id, None)
            try:
                conn.close()
            except OSError:
                pass

    def send_to(self, conn_id: str, data: bytes) -> None:
        """Route a response back to the external connection it came from."""
        with self._lock:
            sock = self._conns.get(conn_id)
        if sock is None:
            self.link.stats.dropped_loss += 1
            return
        try:
            sock.sendall(data)
            self.link.stats.sent += 1
        except OSError:
            self.link.stats.dropped_loss += 1

    def close(self) -> None:
        self._stop.set()
        if self._server is not None:
            try:
                self._server.close()
            except OSError:
                pass
        with self._lock:
            if self._out is not None:
                try:
                    self._out.close()
                except OSError:
                    pass
