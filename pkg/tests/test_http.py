import json
import socket
import threading
import time
import urllib.error
import urllib.request

import pytest

from vfactory.http_api import serve_api
from vfactory.world import World

from conftest import make_scenario


def _free_port() -> int:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


class _Testbed:
    """World + API driven by a background thread at accelerated pace."""

    def __init__(self, scenario):
        self.world = World(scenario, out_dir=None)
        self.port = _free_port()
        self.server, self.api = serve_api(self.world, "127.0.0.1", self.port)
        self.base = f"http://127.0.0.1:{self.port}"
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._drive, daemon=True)
        self._thread.start()

    def _drive(self):
        while not self._stop.is_set():
            self.world.advance_tick()
            time.sleep(0.0005)

    def get(self, path):
        return json.loads(urllib.request.urlopen(self.base + path, timeout=10).read())

    def post(self, path, payload):
        req = urllib.request.Request(
            self.base + path, data=json.dumps(payload).encode(),
            headers={"Content-Type": "application/json"}, method="POST")
        resp = urllib.request.urlopen(req, timeout=30)
        return resp.status, json.loads(resp.read())

    def put(self, path, payload):
        req = urllib.request.Request(
            self.base + path, data=json.dumps(payload).encode(),
            headers={"Content-Type": "application/json"}, method="PUT")
        resp = urllib.request.urlopen(req, timeout=30)
        return resp.status, json.loads(resp.read())

    def close(self):
        self._stop.set()
        self._thread.join(timeout=2)
        self.server.shutdown()


@pytest.fixture()
def bed():
    sc = make_scenario(duration_ticks=10**9, workload=[
        {"at_tick": 0, "action": "stock_cylinder", "color": "red", "x": 1, "y": 1},
    ])
    bed = _Testbed(sc)
    deadline = time.time() + 10
    while time.time() < deadline:
        snap = bed.get("/state")
        if snap.get("stations", {}).get("warehouse", {}).get("fresh"):
            break
        time.sleep(0.05)
    yield bed
    bed.close()


class TestApi:
    def test_state_reports_all_stations(self, bed):
        snap = bed.get("/state")
        assert set(snap["stations"]) == {"vc", "warehouse", "furnace", "mill",
                                         "sorting"}
        assert snap["inventory"] == [{"x": 1, "y": 1, "color": "red"}]

    def test_place_order_and_track_to_done(self, bed):
        status, order = bed.post("/orders", {"color": "red", "firing_time_ms": 200,
                                             "milling_time_ms": 200})
        assert status == 201
        assert order["status"] == "queued"
        deadline = time.time() + 30
        final = None
        while time.time() < deadline:
            orders = bed.get("/orders")
            if orders and orders[0]["status"] in ("done", "failed"):
                final = orders[0]
                break
            time.sleep(0.2)
        assert final and final["status"] == "done"

    def test_out_of_stock_409(self, bed):
        with pytest.raises(urllib.error.HTTPError) as err:
            bed.post("/orders", {"color": "blue"})
        assert err.value.code == 409

    def test_invalid_parameter_422(self, bed):
        with pytest.raises(urllib.error.HTTPError) as err:
            bed.post("/orders", {"color": "red", "firing_time_ms": 70000})
        assert err.value.code == 422

    def test_param_put_bounds(self, bed):
        with pytest.raises(urllib.error.HTTPError) as err:
            bed.put("/plcs/furnace/params/firing_time_ms", {"value": 70000})
        assert err.value.code == 422
        status, body = bed.put("/plcs/furnace/params/firing_time_ms", {"value": 1500})
        assert status == 200 and body["written"] is True
        deadline = time.time() + 10
        while time.time() < deadline:
            snap = bed.get("/state")
            params = snap["stations"]["furnace"].get("params", {})
            if params.get("firing_time_ms") == 1500:
                break
            time.sleep(0.05)
        assert params.get("firing_time_ms") == 1500

    def test_unknown_param_404(self, bed):
        with pytest.raises(urllib.error.HTTPError) as err:
            bed.put("/plcs/sorting/params/firing_time_ms", {"value": 10})
        assert err.value.code == 404

    def test_alerts_empty_without_attached_suite(self, bed):
        assert bed.get("/alerts") == []

    def test_events_stream_pushes_snapshots(self, bed):
        s = socket.create_connection(("127.0.0.1", bed.port), timeout=10)
        s.sendall(b"GET /events HTTP/1.1\r\nHost: t\r\n\r\n")
        buf = b""
        deadline = time.time() + 10
        while buf.count(b"event: snapshot") < 2 and time.time() < deadline:
            buf += s.recv(4096)
        s.close()
        assert buf.count(b"event: snapshot") >= 2
        data_line = [l for l in buf.split(b"\n") if l.startswith(b"data:")][0]
        snap = json.loads(data_line[5:])
        assert "stations" in snap


class TestJamVisibility:
    def test_state_all_stale_during_jam(self):
        sc = make_scenario(duration_ticks=10**9, attacks=[
            {"label": "jam", "kind": "jam_link", "target": "scada--switch",
             "duration_ticks": 100000, "trigger": {"at_tick": 100}}])
        bed = _Testbed(sc)
        try:
            deadline = time.time() + 15
            stale = False
            while time.time() < deadline:
                snap = bed.get("/state")
                links = snap.get("links", {})
                if links and all(v == "stale" for v in links.values()):
                    stale = True
                    break
                time.sleep(0.1)
            assert stale, "stations never went stale under a jam"
        finally:
            bed.close()
