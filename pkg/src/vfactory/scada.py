"""Supervisory service: polling, orders, parameter writes.

All supervision runs over Modbus through the fabric — there is no side
channel to the PLCs, so everything the supervisory layer does is
visible in the captured traffic. Polling reads every PLC's input
registers, coils and holding registers on a fixed cadence; order
dispatch is a short sequence of parameter writes followed by the
warehouse unload trigger. Order progress is inferred from polled state,
never pushed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import InvalidParameter, OutOfStock
from .modbus import codec
from .modbus.endpoint import ClientPort
from .names import CODE_COLORS, COLOR_CODES, PLC_IDS
from .physics.base import SENSOR_SCHEMAS
from .plc.regmap import REGISTER_MAPS

ORDER_PHASES = ("queued", "fetching", "firing", "milling", "sorting", "done")
_PHASE_INDEX = {p: i for i, p in enumerate(ORDER_PHASES)}

_WH = [n for n, _, _ in SENSOR_SCHEMAS["warehouse"]]
_RACK_IDX = {(x, y): _WH.index(f"rack_{x}_{y}") for x in (1, 2, 3) for y in (1, 2, 3)}
_SLOT_ORDER = [(x, y) for y in (1, 2, 3) for x in (1, 2, 3)]
_FURNACE_LED_IDX = [n for n, _, _ in SENSOR_SCHEMAS["furnace"]].index("oven_led")
_MILL_MOTOR_IDX = [n for n, _, _ in SENSOR_SCHEMAS["mill"]].index("mill_motor")
_SORT_NAMES = [n for n, _, _ in SENSOR_SCHEMAS["sorting"]]
_SORT_ENTRY_IDX = _SORT_NAMES.index("barrier_entry")
_SORT_EXIT_IDX = _SORT_NAMES.index("barrier_exit")
_BAY_IDX = {c: _SORT_NAMES.index(f"bay_{c}") for c in ("white", "red", "blue")}


@dataclass(slots=True)
class Order:
    order_id: int
    color: str
    firing_time_ms: int
    milling_time_ms: int
    status: str = "queued"
    created_tick: int = 0
    status_ticks: dict = field(default_factory=dict)
    bay_base: int | None = None
    slot: tuple[int, int] | None = None
    error: str | None = None
    dispatching: bool = False

    def as_dict(self) -> dict:
        return {
            "order_id": self.order_id,
            "color": self.color,
            "firing_time_ms": self.firing_time_ms,
            "milling_time_ms": self.milling_time_ms,
            "status": self.status,
            "created_tick": self.created_tick,
            "status_ticks": dict(self.status_ticks),
            "error": self.error,
        }


@dataclass(slots=True)
class _StationView:
    inputs: list[int] = field(default_factory=list)
    coils: list[int] = field(default_factory=list)
    holding: list[int] = field(default_factory=list)
    fresh: bool = False
    round_tick: int = -1


class Scada:
    """Poll loop plus order pipeline over one Modbus client port."""

    def __init__(self, send_fn, net_cfg: dict, diag=None):
        self.client = ClientPort("scada", send_fn)
        self.poll_period = net_cfg["poll_period_ticks"]
        self.timeout_ticks = net_cfg["timeout_ticks"]
        self.write_retries = net_cfg["write_retries"]
        self.retry_backoff = net_cfg["retry_backoff_ticks"]
        self.watchdog_ticks = net_cfg["watchdog_ticks"]
        self.stale_fail_rounds = net_cfg.get("stale_fail_rounds", 5)
        self._stale_rounds = 0
        self.diag = diag or (lambda *a: None)
        self.views: dict[str, _StationView] = {p: _StationView() for p in PLC_IDS}
        self.orders: dict[int, Order] = {}
        self._next_order_id = 1
        self._active_order: Order | None = None
        self._round_pending: dict[str, set[int]] = {}
        self._round_tick = -1
        self._round_results: dict[str, dict] = {}
        self._writes: list[dict] = []
        self._write_active: dict | None = None
        self.alerts: list[dict] = []
        self.snapshot_tick = -1
        self._pending_param_retries: list = []

    # -- wiring ---------------------------------------------------------

    def reset(self) -> None:
        """Simulates a restart: all supervisory state is lost."""
        self.views = {p: _StationView() for p in PLC_IDS}
        self.orders.clear()
        self._active_order = None
        self._round_pending.clear()
        self._round_results.clear()
        self._round_tick = -1
        self._writes.clear()
        self._write_active = None
        self._pending_param_retries = []
        self.client = ClientPort("scada", self.client._send)

    def on_delivery(self, src: str, payload: bytes) -> None:
        self.client.feed(src, payload)

    # -- polling ----------------------------------------------------------

    def _start_round(self, tick: int) -> None:
        self._round_tick = tick
        self._round_pending = {}
        self._round_results = {}
        for plc_id in PLC_IDS:
            m = REGISTER_MAPS[plc_id]
            reqs: set[int] = set()
            self._round_results[plc_id] = {}

            def make(area, fc, qty, plc_id=plc_id, reqs=reqs):
                if qty == 0:
                    return
                txn = self.client.request(
                    tick, plc_id,
                    lambda t, fc=fc, qty=qty: codec.encode_read_request(t, 1, fc, 0, qty),
                    self.timeout_ticks,
                    meta={"plc": plc_id, "area": area, "round": tick, "qty": qty},
                    on_response=self._on_poll_response,
                    on_timeout=self._on_poll_timeout,
                )
                reqs.add(txn)

            make("input", codec.FUNC_READ_INPUT_REGISTERS, len(m.input_names))
            make("holding", codec.FUNC_READ_HOLDING_REGISTERS, len(m.holding))
            self._round_pending[plc_id] = reqs

    def _on_poll_response(self, frame, meta) -> None:
        plc_id, area = meta["plc"], meta["area"]
        if meta["round"] != self._round_tick:
            return  # stale response from an earlier round
        pend = self._round_pending.get(plc_id)
        if pend is not None:
            pend.discard(frame.transaction_id)
        if frame.is_exception:
            self._round_results[plc_id][area] = None
            return
        payload = frame.payload
        nbytes = payload[0] if payload else 0
        body = payload[1:1 + nbytes]
        if area == "coils":
            qty = meta.get("qty", len(body) * 8)
            values = [(body[i // 8] >> (i % 8)) & 1 for i in range(qty)]
        else:
            values = list(struct.unpack(f">{len(body) // 2}H",
                                        body[: len(body) // 2 * 2]))
        self._round_results[plc_id][area] = values

    def _on_poll_timeout(self, meta) -> None:
        if meta["round"] != self._round_tick:
            return
        plc_id = meta["plc"]
        self._round_results[plc_id].setdefault("_timeout", True)
        pend = self._round_pending.get(plc_id)
        if pend is not None:
            pend.clear()
            pend.add(-1)  # poison: this PLC's round failed

    def _finish_round_if_done(self, tick: int) -> None:
        if self._round_tick < 0:
            return
        all_done = all(
            not pend or (-1 in pend and len(pend) == 1)
            for pend in self._round_pending.values())
        if not (all_done or tick >= self._round_tick + self.timeout_ticks + 1):
            return
        for plc_id in PLC_IDS:
            res = self._round_results.get(plc_id, {})
            view = self.views[plc_id]
            ok = (
                "_timeout" not in res
                and self._round_pending.get(plc_id) not in ({-1},)
                and res.get("input") is not None
            )
            if ok:
                view.inputs = list(res.get("input") or [])
                view.coils = list(res.get("coils") or [])
                view.holding = list(res.get("holding") or [])
                view.fresh = True
                view.round_tick = self._round_tick
            else:
                view.fresh = False
        self.snapshot_tick = self._round_tick
        self._round_tick = -1
        if all(not self.views[p].fresh for p in PLC_IDS):
            self._stale_rounds += 1
        else:
            self._stale_rounds = 0
        order = self._active_order
        if (order is not None and order.status not in ("done", "failed")
                and not order.dispatching
                and self._stale_rounds >= self.stale_fail_rounds):
            self._fail_order(tick, order, "supervision lost (all stations stale)")
        self._update_order_status()

    # -- orders -----------------------------------------------------------

    def inventory(self) -> list[dict]:
        view = self.views["warehouse"]
        out = []
        if not view.inputs:
            return out
        for (x, y), idx in sorted(_RACK_IDX.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            code = view.inputs[idx] if idx < len(view.inputs) else 0
            if code:
                out.append({"x": x, "y": y, "color": CODE_COLORS.get(code, "?")})
        return out

    def place_order(self, tick: int, color: str, firing_time_ms: int,
                    milling_time_ms: int) -> Order:
        if color not in COLOR_CODES:
            raise InvalidParameter(f"color {color!r}")
        for plc_id, name, value in (("furnace", "firing_time_ms", firing_time_ms),
                                    ("mill", "milling_time_ms", milling_time_ms)):
            spec = REGISTER_MAPS[plc_id].holding_spec(name)
            if not spec.lo <= value <= spec.hi:
                raise InvalidParameter(f"{name}={value} outside [{spec.lo}, {spec.hi}]")
        slot = self._find_slot(color)
        if slot is None:
            raise OutOfStock(color)
        order = Order(self._next_order_id, color, firing_time_ms, milling_time_ms,
                      created_tick=tick)
        order.status_ticks["queued"] = tick
        self._next_order_id += 1
        self.orders[order.order_id] = order
        return order

    def _find_slot(self, color: str) -> tuple[int, int] | None:
        view = self.views["warehouse"]
        if not view.inputs:
            return None
        want = COLOR_CODES[color]
        for x, y in _SLOT_ORDER:
            idx = _RACK_IDX[(x, y)]
            if idx < len(view.inputs) and view.inputs[idx] == want:
                return (x, y)
        return None

    def _dispatch(self, tick: int, order: Order) -> None:
        slot = self._find_slot(order.color)
        if slot is None:
            self._fail_order(tick, order, "out of stock at dispatch")
            return
        order.slot = slot
        x, y = slot
        bay_idx = _BAY_IDX[order.color]
        sorting = self.views["sorting"]
        order.bay_base = sorting.inputs[bay_idx] if sorting.inputs else 0
        wh_map = REGISTER_MAPS["warehouse"]
        unload_coil = wh_map.coil_index("unload_request")
        self._writes = [
            {"plc": "furnace", "fc": codec.FUNC_WRITE_SINGLE_REGISTER, "addr": 0,
             "value": order.firing_time_ms},
            {"plc": "mill", "fc": codec.FUNC_WRITE_SINGLE_REGISTER, "addr": 0,
             "value": order.milling_time_ms},
            {"plc": "warehouse", "fc": codec.FUNC_WRITE_MULTIPLE_REGISTERS, "addr": 0,
             "values": [x, y, COLOR_CODES[order.color]]},
            {"plc": "warehouse", "fc": codec.FUNC_WRITE_SINGLE_COIL,
             "addr": unload_coil, "value": 0xFF00},
        ]
        self._write_active = None
        order.dispatching = True

    def _step_writes(self, tick: int, order: Order) -> None:
        if self._write_active is not None:
            wa = self._write_active
            if wa.get("done"):
                self._write_active = None
            elif wa.get("failed"):
                if wa["attempts"] <= self.write_retries:
                    if tick >= wa["retry_at"]:
                        self._send_write(tick, wa)
                else:
                    self._fail_order(tick, order, f"write to {wa['spec']['plc']} failed")
                    self._writes = []
                    self._write_active = None
                return
            else:
                return  # in flight
        if self._write_active is None and self._writes:
            spec = self._writes.pop(0)
            self._write_active = {"spec": spec, "attempts": 0}
            self._send_write(tick, self._write_active)
        elif self._write_active is None and not self._writes and order.dispatching:
            order.dispatching = False
            self._advance(order, "fetching", tick)

    def _send_write(self, tick: int, wa: dict) -> None:
        spec = wa["spec"]
        wa["attempts"] += 1
        wa["failed"] = False
        fc = spec["fc"]

        def build(txn):
            if fc == codec.FUNC_WRITE_MULTIPLE_REGISTERS:
                return codec.encode_write_multiple_registers(txn, 1, spec["addr"],
                                                             spec["values"])
            return codec.encode_write_single(txn, 1, fc, spec["addr"], spec["value"])

        def on_response(frame, meta):
            if frame.is_exception:
                wa["failed"] = True
                wa["retry_at"] = tick + self.retry_backoff
            else:
                wa["done"] = True

        def on_timeout(meta):
            wa["failed"] = True
            wa["retry_at"] = meta["sent"] + self.timeout_ticks + self.retry_backoff

        self.client.request(tick, spec["plc"], build, self.timeout_ticks,
                            meta={"sent": tick}, on_response=on_response,
                            on_timeout=on_timeout)

    def _fail_order(self, tick: int, order: Order, reason: str) -> None:
        order.status = "failed"
        order.dispatching = False
        order.error = reason
        order.status_ticks["failed"] = tick
        self.diag(tick, "scada", f"order {order.order_id} failed: {reason}")

    def _advance(self, order: Order, phase: str, tick: int) -> None:
        order.status = phase
        order.status_ticks[phase] = tick

    def _update_order_status(self) -> None:
        order = self._active_order
        if order is None or order.status not in ("fetching", "firing", "milling",
                                                 "sorting"):
            return
        tick = self.snapshot_tick
        furnace = self.views["furnace"]
        mill = self.views["mill"]
        sorting = self.views["sorting"]
        current = _PHASE_INDEX.get(order.status, 0)
        observed = current
        if furnace.fresh and furnace.inputs and furnace.inputs[_FURNACE_LED_IDX]:
            observed = max(observed, _PHASE_INDEX["firing"])
        if mill.fresh and mill.inputs and mill.inputs[_MILL_MOTOR_IDX]:
            observed = max(observed, _PHASE_INDEX["milling"])
        if sorting.fresh and sorting.inputs and (
                sorting.inputs[_SORT_ENTRY_IDX] or sorting.inputs[_SORT_EXIT_IDX]):
            observed = max(observed, _PHASE_INDEX["sorting"])
        if sorting.fresh and sorting.inputs and order.bay_base is not None:
            if sorting.inputs[_BAY_IDX[order.color]] > order.bay_base:
                observed = _PHASE_INDEX["done"]
        if observed > current:
            self._advance(order, ORDER_PHASES[observed], tick)

    # -- parameter writes (HTTP path) ------------------------------------

    def request_param_write(self, tick: int, plc_id: str, name: str, value: int,
                            done_cb) -> None:
        m = REGISTER_MAPS[plc_id]
        try:
            spec = m.holding_spec(name)
        except KeyError:
            done_cb({"ok": False, "error": "unknown_parameter"})
            return
        if not spec.lo <= value <= spec.hi:
            done_cb({"ok": False, "error": "out_of_bounds",
                     "bounds": [spec.lo, spec.hi]})
            return
        state = {"attempts": 0}

        def send(now):
            state["attempts"] += 1
            self.client.request(
                now, plc_id,
                lambda t: codec.encode_write_single(
                    t, 1, codec.FUNC_WRITE_SINGLE_REGISTER, m.holding_index(name), value),
                self.timeout_ticks,
                meta={"sent": now},
                on_response=lambda fr, meta: done_cb(
                    {"ok": not fr.is_exception,
                     "error": "exception" if fr.is_exception else None}),
                on_timeout=lambda meta: (
                    self._pending_param_retries.append((meta["sent"] + self.timeout_ticks
                                                        + self.retry_backoff, send))
                    if state["attempts"] <= self.write_retries
                    else done_cb({"ok": False, "error": "timeout"})),
            )

        send(tick)

    # -- per-tick driver ----------------------------------------------------

    def on_tick(self, tick: int) -> None:
        self.client.expire(tick)
        due = [x for x in self._pending_param_retries if x[0] <= tick]
        self._pending_param_retries = [x for x in self._pending_param_retries
                                       if x[0] > tick]
        for _, fn in due:
            fn(tick)
        self._finish_round_if_done(tick)
        # rounds never overlap: a new one starts on the poll grid only
        # after the previous completed or timed out
        if tick % self.poll_period == 0 and self._round_tick < 0:
            self._start_round(tick)
        order = self._active_order
        if order is not None and order.status in ("done", "failed"):
            self._active_order = order = None
        if order is None:
            queued = [o for o in self.orders.values() if o.status == "queued"]
            if queued:
                order = self._active_order = min(queued, key=lambda o: o.order_id)
                self._dispatch(tick, order)
        if order is not None and order.dispatching:
            self._step_writes(tick, order)
        if order is not None and order.status not in ("done", "failed"):
            last_change = max(order.status_ticks.values())
            if tick - last_change > self.watchdog_ticks:
                self._fail_order(tick, order, f"stalled in {order.status}")

    # -- snapshot -----------------------------------------------------------

    def snapshot(self, tick: int) -> dict:
        stations = {}
        for plc_id in PLC_IDS:
            view = self.views[plc_id]
            names = REGISTER_MAPS[plc_id].input_names
            stations[plc_id] = {
                "fresh": view.fresh,
                "tick": view.round_tick,
                "values": dict(zip(names, view.inputs)) if view.inputs else {},
                "params": {
                    s.name: view.holding[i]
                    for i, s in enumerate(REGISTER_MAPS[plc_id].holding)
                    if i < len(view.holding)
                } if view.holding else {},
            }
        return {
            "tick": tick,
            "snapshot_tick": self.snapshot_tick,
            "time_s": None,  # filled by caller with tick * tick_ms / 1000
            "stations": stations,
            "inventory": self.inventory(),
            "orders": [o.as_dict() for o in
                       sorted(self.orders.values(), key=lambda o: o.order_id)],
            "alerts": len(self.alerts),
            "links": {p: ("fresh" if self.views[p].fresh else "stale") for p in PLC_IDS},
        }

    def order_counts(self) -> dict:
        done = sum(1 for o in self.orders.values() if o.status == "done")
        failed = sum(1 for o in self.orders.values() if o.status == "failed")
        return {"placed": len(self.orders), "done": done, "failed": failed}
