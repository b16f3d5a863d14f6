"""Normative register maps for the five PLCs.

Input registers mirror the station's sensors in sensor-schema order;
the boolean subset additionally appears as discrete inputs (same
relative order). Coils are the actuator commands plus any remote
trigger bits. Holding registers carry per-order parameters with
declared bounds. Unit id is 1 everywhere; default TCP ports for
real-socket mode are 1502-1506.

``python -m vfactory.plc.regmap`` renders docs/registers.md from this
table, so the published document can never drift from the code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..names import DEFAULT_PORTS, PLC_IDS
from ..physics.base import SENSOR_SCHEMAS

UNIT_ID = 1


@dataclass(slots=True)
class HoldingSpec:
    name: str
    lo: int
    hi: int
    default: int
    writable: bool = True


@dataclass(slots=True)
class PlcMap:
    plc_id: str
    station: str          # physics stepper feeding this PLC's sensors
    frame_id: str         # sensor frame mirrored into the input table
    coils: tuple[str, ...]
    holding: tuple[HoldingSpec, ...] = ()
    port: int = 0
    input_names: list[str] = field(default_factory=list)
    discrete_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        schema = SENSOR_SCHEMAS[self.frame_id]
        self.input_names = [n for n, _, _ in schema]
        self.discrete_names = [n for n, lo, hi in schema if (lo, hi) == (0, 1)]
        if not self.port:
            self.port = DEFAULT_PORTS[self.plc_id]

    def holding_index(self, name: str) -> int:
        for i, spec in enumerate(self.holding):
            if spec.name == name:
                return i
        raise KeyError(name)

    def holding_spec(self, name: str) -> HoldingSpec:
        return self.holding[self.holding_index(name)]

    def coil_index(self, name: str) -> int:
        return self.coils.index(name)


REGISTER_MAPS: dict[str, PlcMap] = {
    "vc": PlcMap(
        plc_id="vc", station="vc", frame_id="vc",
        coils=("rot_cw", "rot_ccw", "h_fwd", "h_back", "v_down", "v_up", "suction"),
    ),
    "warehouse": PlcMap(
        plc_id="warehouse", station="warehouse", frame_id="warehouse",
        coils=("belt_in", "belt_out", "x_fwd", "x_back", "y_fwd", "y_back", "grab",
               "unload_request"),
        holding=(
            HoldingSpec("target_x", 1, 3, 1),
            HoldingSpec("target_y", 1, 3, 1),
            HoldingSpec("color_code", 1, 3, 1),
        ),
    ),
    "furnace": PlcMap(
        plc_id="furnace", station="mpu", frame_id="furnace",
        coils=("platform_in", "platform_out"),
        holding=(HoldingSpec("firing_time_ms", 0, 60000, 1000),),
    ),
    "mill": PlcMap(
        plc_id="mill", station="mpu", frame_id="mill",
        coils=("transport_fwd", "transport_back", "grab", "eject"),
        holding=(HoldingSpec("milling_time_ms", 0, 60000, 1000),),
    ),
    "sorting": PlcMap(
        plc_id="sorting", station="sorting", frame_id="sorting",
        coils=("belt", "piston_white", "piston_red", "piston_blue"),
    ),
}


def parameter_schema(plc_id: str) -> dict[str, tuple[int, int]]:
    return {s.name: (s.lo, s.hi) for s in REGISTER_MAPS[plc_id].holding}


def render_register_docs() -> str:
    lines = [
        "# Register map reference",
        "",
        "Normative for the supervisory poller, the detection suite and the",
        "operator dashboard. Unit id is 1 on every PLC. Booleans read as",
        "0/1 words in the input table and as discrete inputs.",
        "",
    ]
    for plc_id in PLC_IDS:
        m = REGISTER_MAPS[plc_id]
        lines.append(f"## {plc_id} (tcp port {m.port})")
        lines.append("")
        lines.append("| area | address | name | range | writable |")
        lines.append("|---|---|---|---|---|")
        schema = SENSOR_SCHEMAS[m.frame_id]
        for i, (name, lo, hi) in enumerate(schema):
            lines.append(f"| input_register | {i} | {name} | {lo}..{hi} | no |")
        for i, name in enumerate(m.discrete_names):
            lines.append(f"| discrete_input | {i} | {name} | 0..1 | no |")
        for i, name in enumerate(m.coils):
            lines.append(f"| coil | {i} | {name} | 0..1 | yes |")
        for i, spec in enumerate(m.holding):
            w = "yes" if spec.writable else "no"
            lines.append(
                f"| holding_register | {i} | {spec.name} | {spec.lo}..{spec.hi}"
                f" (default {spec.default}) | {w} |")
        lines.append("")
    return "\n".join(lines)


if __name__ == "__main__":
    print(render_register_docs())
