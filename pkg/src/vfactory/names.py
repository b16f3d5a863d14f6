"""Stable identifiers for stations, PLCs, network nodes and links."""

# Physical station steppers (the MPU hosts two PLCs).
STATIONS = ("vc", "warehouse", "mpu", "sorting")

# One PLC per production component; scan order is fixed for determinism.
PLC_IDS = ("vc", "warehouse", "furnace", "mill", "sorting")

# Frame/station ids as they appear in sensor exports (MPU splits in two).
FRAME_IDS = ("vc", "warehouse", "furnace", "mill", "sorting")

SCADA = "scada"
ATTACKER = "attacker"
SWITCH = "switch"

NODES = (SCADA, ATTACKER, SWITCH) + PLC_IDS

COLORS = ("white", "red", "blue")
COLOR_CODES = {"white": 1, "red": 2, "blue": 3}
CODE_COLORS = {v: k for k, v in COLOR_CODES.items()}

# Unprivileged defaults for real-socket mode; 502 remains configurable.
DEFAULT_PORTS = {
    "vc": 1502,
    "warehouse": 1503,
    "furnace": 1504,
    "mill": 1505,
    "sorting": 1506,
}


def link_id(a: str, b: str) -> str:
    return f"{a}--{b}"


def default_links() -> list[str]:
    """Star topology: SCADA, attacker and each PLC hang off one switch."""
    out = [link_id(SCADA, SWITCH), link_id(ATTACKER, SWITCH)]
    out.extend(link_id(p, SWITCH) for p in PLC_IDS)
    return out
