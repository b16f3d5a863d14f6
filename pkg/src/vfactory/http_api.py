"""HTTP API for the live testbed (serve mode).

Endpoints:

- ``GET /state`` latest factory snapshot
- ``GET /orders`` / ``POST /orders``
- ``PUT /plcs/{id}/params/{name}`` parameter write with read-back
- ``GET /alerts`` alerts from the attached detection suite, if any
- ``GET /events`` server-sent events: snapshot and alert pushes

Handlers never touch simulation state directly: mutations are queued
into the kernel and executed at the next tick boundary; responses wait
on a completion event. Snapshots are published by the kernel once per
poll period and served from a lock-protected slot.
"""

from __future__ import annotations

import json
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import BindFailed, InvalidParameter, OutOfStock
from .names import PLC_IDS

COMMAND_TIMEOUT_S = 30.0


class ApiState:
    """Shared state between the kernel loop and HTTP handlers."""

    def __init__(self, world):
        self.world = world
        self._snapshot: dict = {}
        self._lock = threading.Lock()
        self._subscribers: list[queue.Queue] = []
        world.on_snapshot = self.publish_snapshot

    def publish_snapshot(self, snap: dict) -> None:
        with self._lock:
            self._snapshot = snap
            subscribers = list(self._subscribers)
        for q in subscribers:
            try:
                q.put_nowait(("snapshot", snap))
            except queue.Full:
                pass

    def publish_alert(self, alert: dict) -> None:
        with self._lock:
            subscribers = list(self._subscribers)
        for q in subscribers:
            try:
                q.put_nowait(("alert", alert))
            except queue.Full:
                pass

    def snapshot(self) -> dict:
        with self._lock:
            return self._snapshot

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=64)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def run_in_kernel(self, fn):
        """Execute ``fn(tick)`` at the next tick boundary, return its result."""
        done = threading.Event()
        slot: dict = {}

        def wrapped(tick):
            try:
                slot["result"] = fn(tick)
            except Exception as exc:  # surfaced to the HTTP layer
                slot["error"] = exc
            done.set()

        self.world.submit_command(wrapped)
        if not done.wait(COMMAND_TIMEOUT_S):
            raise TimeoutError("kernel did not process the command in time")
        if "error" in slot:
            raise slot["error"]
        return slot.get("result")


class _Handler(BaseHTTPRequestHandler):
    api: ApiState = None  # set by serve_api
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, code: int, payload) -> None:
        body = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if not length:
            return {}
        try:
            return json.loads(self.rfile.read(length))
        except json.JSONDecodeError:
            return {}

    def do_GET(self):
        api = self.api
        if self.path == "/state":
            snap = dict(api.snapshot())
            snap.setdefault("tick", api.world.clock.tick)
            self._send_json(200, snap)
        elif self.path == "/orders":
            snap = api.snapshot()
            self._send_json(200, snap.get("orders", []))
        elif self.path == "/alerts":
            self._send_json(200, list(api.world.scada.alerts))
        elif self.path == "/events":
            self._serve_events()
        elif self.path == "/":
            self._send_json(200, {
                "service": "vfactory",
                "scenario": api.world.scenario.name,
                "endpoints": ["/state", "/orders", "/alerts", "/events"],
            })
        else:
            self._send_json(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/orders":
            self._send_json(404, {"error": "not found"})
            return
        body = self._read_body()
        color = body.get("color")
        firing = int(body.get("firing_time_ms", 1000))
        milling = int(body.get("milling_time_ms", 1000))
        api = self.api
        try:
            order = api.run_in_kernel(
                lambda tick: api.world.scada.place_order(tick, color, firing, milling))
        except OutOfStock as exc:
            self._send_json(409, {"error": "out_of_stock", "detail": str(exc)})
            return
        except InvalidParameter as exc:
            self._send_json(422, {"error": "invalid_parameter", "detail": str(exc)})
            return
        except TimeoutError as exc:
            self._send_json(504, {"error": "timeout", "detail": str(exc)})
            return
        self._send_json(201, order.as_dict())

    def do_PUT(self):
        parts = self.path.strip("/").split("/")
        if len(parts) != 4 or parts[0] != "plcs" or parts[2] != "params":
            self._send_json(404, {"error": "not found"})
            return
        plc_id, name = parts[1], parts[3]
        if plc_id not in PLC_IDS:
            self._send_json(404, {"error": f"unknown plc {plc_id!r}"})
            return
        body = self._read_body()
        if "value" not in body:
            self._send_json(422, {"error": "missing value"})
            return
        value = int(body["value"])
        api = self.api
        done = threading.Event()
        slot: dict = {}

        def cb(result):
            slot.update(result)
            done.set()

        try:
            api.run_in_kernel(
                lambda tick: api.world.scada.request_param_write(
                    tick, plc_id, name, value, cb))
        except TimeoutError as exc:
            self._send_json(504, {"error": "timeout", "detail": str(exc)})
            return
        if not done.wait(COMMAND_TIMEOUT_S):
            self._send_json(504, {"error": "timeout", "detail": "no write ack"})
            return
        if slot.get("ok"):
            self._send_json(200, {"written": True, "plc": plc_id, "name": name,
                                  "value": value})
        elif slot.get("error") == "unknown_parameter":
            self._send_json(404, {"error": "unknown_parameter"})
        elif slot.get("error") == "out_of_bounds":
            self._send_json(422, {"error": "out_of_bounds",
                                  "bounds": slot.get("bounds")})
        else:
            self._send_json(504, {"error": slot.get("error", "failed")})

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def _serve_events(self):
        api = self.api
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        q = api.subscribe()
        try:
            snap = api.snapshot()
            if snap:
                self._sse("snapshot", snap)
            while True:
                try:
                    event, payload = q.get(timeout=5.0)
                except queue.Empty:
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                self._sse(event, payload)
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            api.unsubscribe(q)

    def _sse(self, event: str, payload) -> None:
        data = json.dumps(payload)
        self.wfile.write(f"event: {event}\ndata: {data}\n\n".encode())
        self.wfile.flush()


def serve_api(world, host: str, port: int) -> tuple[ThreadingHTTPServer, ApiState]:
    api = ApiState(world)
    handler = type("BoundHandler", (_Handler,), {"api": api})
    try:
        server = ThreadingHTTPServer((host, port), handler)
    except OSError as exc:
        raise BindFailed(f"{host}:{port}: {exc}") from exc
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, api
