"""Relative deviation between two trajectories of one variable.

The metric is the maximum absolute pointwise difference over aligned
ticks, normalized by the variable's schema range (hi - lo). Alignment
is either by raw tick index or by a per-trajectory anchor event (e.g.
order placement), which absorbs start-offset shifts between runs. Only
the overlapping span is compared; tail lengths are reported.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import SchemaMismatch


@dataclass(slots=True)
class Trajectory:
    variable: str
    ticks: list[int]
    values: list[float]
    lo: float
    hi: float
    anchor_tick: int | None = None

    def __post_init__(self):
        for i in range(1, len(self.ticks)):
            if self.ticks[i] <= self.ticks[i - 1]:
                raise ValueError("ticks must be strictly increasing")


def extract_trajectory(dataset, variable: str, anchor_tick: int | None = None) -> Trajectory:
    """Pull ``station.sensor`` out of a dataset's process samples."""
    station, sensor = variable.split(".", 1)
    schema = dataset.manifest.get("sensor_schema", {}).get(station)
    if schema is None:
        raise SchemaMismatch(f"station {station!r} not in dataset schema")
    rng = next(((lo, hi) for name, lo, hi in schema if name == sensor), None)
    if rng is None:
        raise SchemaMismatch(f"sensor {variable!r} not in dataset schema")
    ticks, values = [], []
    for rec in dataset.records:
        if rec["kind"] == "process_sample" and rec["station"] == station:
            ticks.append(rec["tick"])
            values.append(rec["values"][sensor])
    return Trajectory(variable, ticks, values, rng[0], rng[1], anchor_tick)


def deviation(a: Trajectory, b: Trajectory, alignment: str = "by_tick") -> dict:
    if a.variable != b.variable or (a.lo, a.hi) != (b.lo, b.hi):
        raise SchemaMismatch(
            f"{a.variable} [{a.lo},{a.hi}] vs {b.variable} [{b.lo},{b.hi}]")
    if a.hi <= a.lo:
        raise SchemaMismatch(f"degenerate range [{a.lo},{a.hi}]")
    if alignment == "by_event":
        shift_a = a.anchor_tick or 0
        shift_b = b.anchor_tick or 0
    elif alignment == "by_tick":
        shift_a = shift_b = 0
    else:
        raise ValueError(f"alignment {alignment!r}")
    map_a = {t - shift_a: v for t, v in zip(a.ticks, a.values)}
    map_b = {t - shift_b: v for t, v in zip(b.ticks, b.values)}
    common = sorted(set(map_a) & set(map_b))
    span = a.hi - a.lo
    worst = 0.0
    worst_tick = None
    for t in common:
        d = abs(map_a[t] - map_b[t]) / span
        if d > worst:
            worst = d
            worst_tick = t
    return {
        "variable": a.variable,
        "alignment": alignment,
        "normalization": "schema_range",
        "range": [a.lo, a.hi],
        "deviation_fraction": worst,
        "deviation_percent": worst * 100.0,
        "overlap_ticks": len(common),
        "tail_a": len(map_a) - len(common),
        "tail_b": len(map_b) - len(common),
        "max_at_tick": worst_tick,
    }
