"""Control programs for the five stations.

Each program reproduces the behavior of its production step: the
gripper runs point-to-point transport routes, the warehouse stores and
unloads over belt plus cantilever, the furnace times the firing
process, the mill fetches, mills and delivers, and the sorter routes by
color off a timer started at the exit barrier.

Hand-over points between stations are sensed, never messaged: a
station reacts to workpieces appearing at its boundary, so local
control keeps running when the supervisory link is down.
"""

from __future__ import annotations

from .fsm import ControlProgram, drive


class GripperProgram(ControlProgram):
    """Transport routes: arrival -> warehouse belt, warehouse belt -> MPU.

    After dropping a workpiece on the warehouse belt the arm waits until
    the belt has moved it away; anything present at the hand-over point
    while idle is therefore an unload to carry onward, which removes the
    need for any cross-PLC signalling.
    """

    plc_id = "vc"
    STATES = ("IDLE", "GOTO_SRC", "LOWER_SRC", "PICK", "RAISE_SRC", "GOTO_DST",
              "LOWER_DST", "DROP", "RAISE_DST", "WAIT_CLEAR", "RETURN_HOME")

    def __init__(self, tick_ms: int, params: dict):
        super().__init__(tick_ms)
        self.p = params
        self.route = ("arrival", "warehouse")
        self.dwell = params["suction_dwell_ticks"]
        self._table = {
            "IDLE": [
                (lambda: bool(self.inp.get("cyl_at_warehouse_io")), "GOTO_SRC",
                 lambda: self._set_route("warehouse", "mpu")),
                (lambda: bool(self.inp.get("cyl_at_arrival")), "GOTO_SRC",
                 lambda: self._set_route("arrival", "warehouse")),
            ],
            "GOTO_SRC": [(self._at_src_xy, "LOWER_SRC", None)],
            "LOWER_SRC": [(self._at_src_v, "PICK", None)],
            "PICK": [
                (lambda: self._dwelled() and bool(self.inp.get("has_cylinder")),
                 "RAISE_SRC", None),
                (lambda: self._dwelled() and not self.inp.get("has_cylinder"),
                 "RETURN_HOME", lambda: self.diag("pick failed, nothing held")),
            ],
            "RAISE_SRC": [(self._v_raised, "GOTO_DST", None)],
            "GOTO_DST": [(self._at_dst_xy, "LOWER_DST", None)],
            "LOWER_DST": [(self._at_dst_v, "DROP", None)],
            "DROP": [(self._dwelled, "RAISE_DST", None)],
            "RAISE_DST": [
                (lambda: self._v_raised() and self.route[1] == "warehouse",
                 "WAIT_CLEAR", None),
                (lambda: self._v_raised() and self.route[1] != "warehouse",
                 "RETURN_HOME", None),
            ],
            "WAIT_CLEAR": [
                (lambda: not self.inp.get("cyl_at_warehouse_io"), "RETURN_HOME", None)],
            "RETURN_HOME": [(self._at_home, "IDLE", None)],
        }

    def _set_route(self, src: str, dst: str) -> None:
        self.route = (src, dst)

    def _pos(self, name: str) -> tuple[int, int, int]:
        rot, hor, ver = self.p[f"pos_{name}"]
        return rot, hor, ver

    def _xy_reached(self, name: str) -> bool:
        rot, hor, _ = self._pos(name)
        return (abs(self.inp["rotation"] - rot) < self.p["rate_rotation"]
                and abs(self.inp["horizontal"] - hor) < self.p["rate_horizontal"])

    def _v_reached(self, name: str) -> bool:
        _, _, ver = self._pos(name)
        return abs(self.inp["vertical"] - ver) < self.p["rate_vertical"]

    def _at_src_xy(self):
        return self._xy_reached(self.route[0])

    def _at_src_v(self):
        return self._v_reached(self.route[0])

    def _at_dst_xy(self):
        return self._xy_reached(self.route[1])

    def _at_dst_v(self):
        return self._v_reached(self.route[1])

    def _v_raised(self):
        return self.inp["vertical"] < self.p["rate_vertical"]

    def _at_home(self):
        return (abs(self.inp["rotation"]) < self.p["rate_rotation"]
                and abs(self.inp["horizontal"]) < self.p["rate_horizontal"])

    def _dwelled(self):
        return self.ticks_in_state >= self.dwell

    def emit(self, out: dict) -> None:
        st = self.state
        suction = st in ("PICK", "RAISE_SRC", "GOTO_DST", "LOWER_DST")
        if suction:
            out["suction"] = 1
        if st in ("GOTO_SRC", "GOTO_DST", "RETURN_HOME"):
            target = {"GOTO_SRC": self.route[0], "GOTO_DST": self.route[1],
                      "RETURN_HOME": "home"}[st]
            rot, hor, _ = self._pos(target)
            drive(out, self.inp["rotation"], rot, self.p["rate_rotation"],
                  "rot_cw", "rot_ccw")
            drive(out, self.inp["horizontal"], hor, self.p["rate_horizontal"],
                  "h_fwd", "h_back")
            drive(out, self.inp["vertical"], 0, self.p["rate_vertical"], "v_down", "v_up")
        elif st in ("LOWER_SRC", "LOWER_DST"):
            _, _, ver = self._pos(self.route[0] if st == "LOWER_SRC" else self.route[1])
            drive(out, self.inp["vertical"], ver, self.p["rate_vertical"], "v_down", "v_up")
        elif st in ("RAISE_SRC", "RAISE_DST"):
            drive(out, self.inp["vertical"], 0, self.p["rate_vertical"], "v_down", "v_up")


class WarehouseProgram(ControlProgram):
    """Store arrivals into the first free slot; unload on remote request.

    The unload request is a remote-set coil plus target (X, Y, color)
    holding registers; the request is consumed (and the coil cleared) the
    moment it is accepted or rejected.
    """

    plc_id = "warehouse"
    STATES = ("IDLE", "S_BELT_IN", "S_TO_BELT", "S_GRAB", "S_TO_SLOT", "S_RELEASE",
              "U_TO_SLOT", "U_GRAB", "U_TO_BELT", "U_RELEASE", "U_BELT_OUT",
              "U_WAIT_CLEAR", "RET_HOME")

    SLOT_ORDER = [(x, y) for y in (1, 2, 3) for x in (1, 2, 3)]

    def __init__(self, tick_ms: int, params: dict):
        super().__init__(tick_ms)
        self.p = params
        self.dwell = params["grab_dwell_ticks"]
        self.target_slot = (1, 1)
        self._consume_request = False
        self._table = {
            "IDLE": [
                (self._unload_requested, "U_TO_SLOT", self._accept_or_reject),
                (lambda: bool(self.inp.get("cyl_at_belt_outer")), "S_BELT_IN", None),
            ],
            "S_BELT_IN": [(lambda: bool(self.inp.get("cyl_at_belt_inner")), "S_TO_BELT", None)],
            "S_TO_BELT": [(self._at_belt, "S_GRAB", None)],
            "S_GRAB": [
                (lambda: self._dwelled() and bool(self.inp.get("carrying")), "S_TO_SLOT",
                 self._choose_free_slot),
                (lambda: self._dwelled() and not self.inp.get("carrying"), "RET_HOME",
                 lambda: self.diag("store grab failed")),
            ],
            "S_TO_SLOT": [(self._at_slot, "S_RELEASE", None)],
            "S_RELEASE": [(self._dwelled, "RET_HOME", None)],
            "U_TO_SLOT": [(self._at_slot, "U_GRAB", None)],
            "U_GRAB": [
                (lambda: self._dwelled() and bool(self.inp.get("carrying")), "U_TO_BELT", None),
                (lambda: self._dwelled() and not self.inp.get("carrying"), "RET_HOME",
                 lambda: self.diag("unload grab failed")),
            ],
            "U_TO_BELT": [(self._at_belt, "U_RELEASE", None)],
            "U_RELEASE": [(self._dwelled, "U_BELT_OUT", None)],
            "U_BELT_OUT": [(lambda: bool(self.inp.get("cyl_at_belt_outer")),
                            "U_WAIT_CLEAR", None)],
            # hold until the gripper collects it, or the unload re-stores itself
            "U_WAIT_CLEAR": [(lambda: not self.inp.get("cyl_at_belt_outer"),
                              "RET_HOME", None)],
            "RET_HOME": [(self._at_origin, "IDLE", None)],
        }

    def _unload_requested(self):
        return (bool(self.inp.get("unload_request"))
                and not self.inp.get("cyl_at_belt_outer")
                and not self.inp.get("cyl_at_belt_inner"))

    def _accept_or_reject(self) -> str | None:
        self._consume_request = True
        x, y = self.param("target_x"), self.param("target_y")
        if not (1 <= x <= 3 and 1 <= y <= 3) or not self.inp.get(f"rack_{x}_{y}"):
            self.diag(f"unload request for empty or invalid slot ({x},{y})")
            return "IDLE"
        self.target_slot = (x, y)
        return None

    def _choose_free_slot(self) -> str | None:
        for x, y in self.SLOT_ORDER:
            if not self.inp.get(f"rack_{x}_{y}"):
                self.target_slot = (x, y)
                return None
        self.diag("rack full, cannot store")
        return "RET_HOME"

    def _slot_coords(self, x: int, y: int) -> tuple[int, int]:
        return (self.p["slot_base_x"] + (x - 1) * self.p["slot_pitch_x"],
                self.p["slot_base_y"] + (y - 1) * self.p["slot_pitch_y"])

    def _near(self, x: int, y: int) -> bool:
        return (abs(self.inp["cantilever_x"] - x) < self.p["rate_x"]
                and abs(self.inp["cantilever_y"] - y) < self.p["rate_y"])

    def _at_belt(self):
        return self._near(*self.p["pos_belt"])

    def _at_slot(self):
        return self._near(*self._slot_coords(*self.target_slot))

    def _at_origin(self):
        return self._near(0, 0)

    def _dwelled(self):
        return self.ticks_in_state >= self.dwell

    def consume_request_flag(self) -> bool:
        """Runtime clears the unload_request coil when this returns True."""
        if self._consume_request:
            self._consume_request = False
            return True
        return False

    def emit(self, out: dict) -> None:
        st = self.state
        if st == "S_BELT_IN":
            out["belt_in"] = 1
        elif st == "U_BELT_OUT":
            out["belt_out"] = 1
        if st in ("S_TO_BELT", "U_TO_BELT"):
            self._drive_to(out, *self.p["pos_belt"])
        elif st in ("S_TO_SLOT", "U_TO_SLOT"):
            self._drive_to(out, *self._slot_coords(*self.target_slot))
        elif st == "RET_HOME":
            self._drive_to(out, 0, 0)
        if st in ("S_GRAB", "S_TO_SLOT", "U_GRAB", "U_TO_BELT"):
            out["grab"] = 1

    def _drive_to(self, out: dict, x: int, y: int) -> None:
        drive(out, self.inp["cantilever_x"], x, self.p["rate_x"], "x_fwd", "x_back")
        drive(out, self.inp["cantilever_y"], y, self.p["rate_y"], "y_fwd", "y_back")


class FurnaceProgram(ControlProgram):
    """Oven platform cycle with a per-order firing time.

    The firing duration is latched from the ``firing_time_ms`` holding
    register when a raw workpiece is accepted, so remote writes apply to
    the next firing, not a running one.
    """

    plc_id = "furnace"
    STATES = ("IDLE", "LOAD", "FIRE", "UNLOAD")

    def __init__(self, tick_ms: int, params: dict):
        super().__init__(tick_ms)
        self.p = params
        self.fire_ticks = 0
        self._table = {
            "IDLE": [
                (lambda: bool(self.inp.get("cyl_unfired")) and bool(
                    self.inp.get("platform_outside")), "LOAD", None)],
            # duration latches on entry, so a parameter write during the
            # platform travel still applies to this firing
            "LOAD": [
                (lambda: bool(self.inp.get("platform_inside")), "FIRE",
                 self._latch_time)],
            "FIRE": [(lambda: self.ticks_in_state >= self.fire_ticks, "UNLOAD", None)],
            "UNLOAD": [(lambda: bool(self.inp.get("platform_outside")), "IDLE", None)],
        }

    def _latch_time(self) -> None:
        self.fire_ticks = (self.param("firing_time_ms") + self.tick_ms // 2) // self.tick_ms

    def emit(self, out: dict) -> None:
        if self.state == "LOAD":
            out["platform_in"] = 1
        elif self.state == "FIRE":
            out["fire_command"] = self.fire_ticks
        elif self.state == "UNLOAD":
            out["platform_out"] = 1


class MillProgram(ControlProgram):
    """Fetch the fired workpiece, mill it, deliver it to the sorter.

    The transport makes two trips (platform -> mill, mill -> chute); the
    milling duration is latched from ``milling_time_ms`` at fetch start.
    A workpiece that disappears mid-cycle abandons the remainder of the
    cycle with a diagnostic instead of delivering nothing.
    """

    plc_id = "mill"
    STATES = ("IDLE", "FETCH_GO", "FETCH_GRAB", "FETCH_RET", "FETCH_REL", "MILL",
              "DELIVER_GRAB", "DELIVER_GO", "DELIVER_REL", "EJECT", "RETURN")

    def __init__(self, tick_ms: int, params: dict):
        super().__init__(tick_ms)
        self.p = params
        self.mill_ticks = 0
        self.dwell = params["transport_dwell_ticks"]
        self._table = {
            "IDLE": [
                (lambda: bool(self.inp.get("fired_on_platform")), "FETCH_GO", None)],
            "FETCH_GO": [(lambda: self._near(self.p["pos_transport_platform"]),
                          "FETCH_GRAB", None)],
            "FETCH_GRAB": [(self._dwelled, "FETCH_RET", None)],
            "FETCH_RET": [(lambda: self._near(0), "FETCH_REL", None)],
            # duration latches when milling actually starts (MILL entry)
            "FETCH_REL": [
                (lambda: self._dwelled() and bool(self.inp.get("cyl_at_mill")),
                 "MILL", self._latch_time),
                (lambda: self._dwelled() and not self.inp.get("cyl_at_mill"), "RETURN",
                 lambda: self.diag("workpiece lost before milling")),
            ],
            "MILL": [
                (lambda: self.ticks_in_state >= self.mill_ticks and bool(
                    self.inp.get("cyl_at_mill")), "DELIVER_GRAB", None),
                (lambda: self.ticks_in_state >= self.mill_ticks and not self.inp.get(
                    "cyl_at_mill"), "RETURN",
                 lambda: self.diag("workpiece lost during milling")),
            ],
            "DELIVER_GRAB": [(self._dwelled, "DELIVER_GO", None)],
            "DELIVER_GO": [(lambda: self._near(self.p["pos_transport_chute"]),
                            "DELIVER_REL", None)],
            "DELIVER_REL": [(self._dwelled, "EJECT", None)],
            "EJECT": [(lambda: self.ticks_in_state >= self.p["eject_pulse_ticks"],
                       "RETURN", None)],
            "RETURN": [(lambda: self._near(0), "IDLE", None)],
        }

    def _latch_time(self) -> None:
        self.mill_ticks = (self.param("milling_time_ms") + self.tick_ms // 2) // self.tick_ms

    def _near(self, target: int) -> bool:
        return abs(self.inp["transport_pos"] - target) < self.p["transport_rate"]

    def _dwelled(self):
        return self.ticks_in_state >= self.dwell

    def emit(self, out: dict) -> None:
        st = self.state
        if st in ("FETCH_GO", "DELIVER_GO"):
            out["transport_fwd"] = 1
        elif st in ("FETCH_RET", "RETURN"):
            out["transport_back"] = 1
        if st in ("FETCH_GRAB", "FETCH_RET", "DELIVER_GRAB", "DELIVER_GO"):
            out["grab"] = 1
        if st == "MILL":
            out["mill_command"] = self.mill_ticks
        if st == "EJECT":
            out["eject"] = 1


class SortingProgram(ControlProgram):
    """Color-route finished workpieces off a timer from the exit barrier."""

    plc_id = "sorting"
    STATES = ("IDLE", "RUN", "PUSH")

    # classification bands over the reflection reading
    WHITE_BELOW = 1400
    RED_BELOW = 1900
    ACTIVE_ABOVE = 1050

    def __init__(self, tick_ms: int, params: dict):
        super().__init__(tick_ms)
        self.p = params
        rate = params["belt_rate"]
        exit_pos = params["pos_barrier_exit"]
        self.timer_target = {
            color: (params[f"pos_piston_{color}"] - exit_pos) // rate
            for color in ("white", "red", "blue")
        }
        self.color_class: str | None = None
        self.timer_active = False
        self.timer = 0
        self._table = {
            "IDLE": [(lambda: bool(self.inp.get("barrier_entry")), "RUN", self._reset)],
            "RUN": [
                (self._timer_at_target, "PUSH", None),
                (self._stuck, "IDLE", lambda: self.diag("no piston window reached")),
            ],
            "PUSH": [(lambda: self.ticks_in_state >= 2, "IDLE", None)],
        }

    def _reset(self) -> None:
        self.color_class = None
        self.timer_active = False
        self.timer = 0

    def pre(self) -> None:
        if self.state != "RUN":
            return
        reading = self.inp.get("color_reading", 0)
        if self.color_class is None and reading >= self.ACTIVE_ABOVE:
            if reading < self.WHITE_BELOW:
                self.color_class = "white"
            elif reading < self.RED_BELOW:
                self.color_class = "red"
            else:
                self.color_class = "blue"
        if self.rising("barrier_exit"):
            self.timer_active = True
            self.timer = 0
        elif self.timer_active:
            self.timer += 1

    def _timer_at_target(self) -> bool:
        if not self.timer_active:
            return False
        color = self.color_class or "red"
        return self.timer >= self.timer_target[color]

    def _stuck(self) -> bool:
        return self.timer_active and self.timer > self.timer_target["blue"] + 15

    def emit(self, out: dict) -> None:
        if self.state in ("RUN", "PUSH"):
            out["belt"] = 1
        if self.state == "PUSH":
            out[f"piston_{self.color_class or 'red'}"] = 1


PROGRAMS = {
    "vc": ("vc", GripperProgram),
    "warehouse": ("warehouse", WarehouseProgram),
    "furnace": ("mpu", FurnaceProgram),
    "mill": ("mpu", MillProgram),
    "sorting": ("sorting", SortingProgram),
}
