"""Default motion rates, positions and sensor nominals.

All values are configuration defaults standing in for recordings of the
physical reference hardware; they carry no ground-truth claim and every
one can be overridden from the scenario file.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

DEFAULTS: dict = {
    "vc": {
        # encoder counts per tick while the matching motor is commanded
        "rate_horizontal": 10,
        "rate_vertical": 15,
        "rate_rotation": 12,
        "max_horizontal": 600,
        "max_vertical": 900,
        "max_rotation": 1000,
        # named destinations: (rotation, horizontal, vertical)
        "pos_home": [0, 0, 0],
        "pos_arrival": [900, 300, 780],
        "pos_warehouse": [504, 150, 600],
        "pos_mpu": [120, 450, 720],
        "suction_dwell_ticks": 5,
    },
    "warehouse": {
        "rate_x": 10,
        "rate_y": 12,
        "max_x": 900,
        "max_y": 600,
        # cantilever targets: belt hand-over point and rack slot grid
        "pos_belt": [60, 48],
        "slot_base_x": 150,
        "slot_base_y": 120,
        "slot_pitch_x": 250,
        "slot_pitch_y": 156,
        "belt_transit_ticks": 25,
        "grab_dwell_ticks": 3,
    },
    "mpu": {
        "platform_transit_ticks": 15,
        "transport_rate": 20,
        "transport_max": 600,
        "pos_transport_platform": 500,
        "pos_transport_chute": 300,
        "transport_dwell_ticks": 3,
        "eject_pulse_ticks": 5,
    },
    "sorting": {
        "belt_rate": 8,
        "belt_encoder_modulo": 4096,
        "cylinder_len_counts": 24,
        "pos_drop": 40,
        "pos_barrier_entry": 40,
        "pos_enclosure": 120,
        "pos_barrier_exit": 200,
        "pos_piston_white": 264,
        "pos_piston_red": 328,
        "pos_piston_blue": 392,
        "piston_window_counts": 16,
        "color_baseline": 900,
        "color_white": 1200,
        "color_red": 1600,
        "color_blue": 2200,
    },
    "noise": {
        # std-dev of per-actuation-event start jitter, in ticks; 0 = off
        "actuation_jitter_std_ticks": 0.0,
        # gaussian noise on the sorting color reading, in sensor counts
        "color_noise_std": 0.0,
    },
}


def merged_params(overrides: dict | None) -> dict:
    """Deep-merge scenario overrides onto the defaults."""
    params = copy.deepcopy(DEFAULTS)
    for section, values in (overrides or {}).items():
        if section not in params:
            raise KeyError(section)
        for key, val in values.items():
            if key not in params[section]:
                raise KeyError(f"{section}.{key}")
            params[section][key] = val
    return params


@dataclass(slots=True)
class PhysicsParams:
    """Typed wrapper over the merged parameter table."""

    table: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __getitem__(self, section: str) -> dict:
        return self.table[section]

    @classmethod
    def from_overrides(cls, overrides: dict | None) -> "PhysicsParams":
        return cls(merged_params(overrides))
