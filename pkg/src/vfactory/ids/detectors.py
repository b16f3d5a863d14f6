"""Four anomaly detectors with a train phase and a detect phase.

- minmax: per process variable, learned value range.
- steadytime: per (variable, value), learned persistence durations, plus
  a per-variable update-cadence bound. Duration checks apply only to
  variables with a small value alphabet and to values with at least
  ``min_runs`` completed runs; the trailing (cut-off) run of a capture
  widens only the upper bound. The cadence bound is what catches floods
  that delay register updates, with an inherent detection delay.
- iat: per channel, learned inter-arrival range; frames on channels
  never seen in training alert immediately.
- dtmc: first-order Markov chain over the global channel-symbol
  sequence; transitions absent from training (or rarer than p_min)
  alert.

Every alert cites the learned bound it violated. Training is
deterministic: equal traces give byte-identical serialized models.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from ..errors import EmptyTraining
from .features import Transcriber, transcribe

DETECTOR_KINDS = ("minmax", "steadytime", "iat", "dtmc")

DEFAULT_MARGIN = 0.05
DEFAULT_P_MIN = 0.0
STEADY_MAX_VALUES = 16
STEADY_MIN_RUNS = 2

MODEL_SCHEMA_VERSION = 1


@dataclass(slots=True)
class Alert:
    detector: str
    tick: int
    subject: str
    observed: float
    bound: str
    message: str

    def as_dict(self) -> dict:
        return {
            "detector": self.detector, "tick": self.tick, "subject": self.subject,
            "observed": self.observed, "bound": self.bound, "message": self.message,
        }


def _model(kind: str, params: dict, data: dict, record_count: int) -> dict:
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "detector": kind,
        "params": params,
        "record_count": record_count,
        "model": data,
    }


def save_model(model: dict, path: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        model = json.load(fh)
    if model.get("schema_version") != MODEL_SCHEMA_VERSION:
        from ..errors import SchemaUnsupported

        raise SchemaUnsupported(f"model schema {model.get('schema_version')}")
    return model


# -- minmax ---------------------------------------------------------------

def train_minmax(records, margin: float = DEFAULT_MARGIN) -> dict:
    tr = transcribe(records)
    if not tr.observations:
        raise EmptyTraining("no process observations in training trace")
    ranges: dict[str, list[int]] = {}
    for obs in tr.observations:
        r = ranges.get(obs.variable)
        if r is None:
            ranges[obs.variable] = [obs.value, obs.value]
        else:
            if obs.value < r[0]:
                r[0] = obs.value
            if obs.value > r[1]:
                r[1] = obs.value
    return _model("minmax", {"margin": margin}, {"ranges": ranges},
                  len(tr.observations))


class MinMaxStream:
    """Streaming detection against a trained minmax model."""

    def __init__(self, model: dict):
        self.margin = model["params"]["margin"]
        self.ranges = model["model"]["ranges"]
        self._tr = Transcriber()
        self._done = 0

    def feed(self, rec: dict) -> list[Alert]:
        self._tr.feed(rec)
        alerts = []
        obs_list = self._tr.observations
        while self._done < len(obs_list):
            obs = obs_list[self._done]
            self._done += 1
            r = self.ranges.get(obs.variable)
            if r is None:
                alerts.append(Alert(
                    "minmax", obs.tick, obs.variable, obs.value, "untrained",
                    f"variable {obs.variable} not in training"))
                continue
            lo, hi = r[0] * (1 - self.margin), r[1] * (1 + self.margin)
            if obs.value < lo or obs.value > hi:
                alerts.append(Alert(
                    "minmax", obs.tick, obs.variable, obs.value,
                    f"[{r[0]}, {r[1]}] margin {self.margin}",
                    f"{obs.variable}={obs.value} outside learned range"))
        return alerts


def detect_minmax(model: dict, records) -> list[Alert]:
    stream = MinMaxStream(model)
    alerts = []
    for rec in records:
        alerts.extend(stream.feed(rec))
    return alerts


# -- steadytime -------------------------------------------------------------

def train_steadytime(records, margin: float = DEFAULT_MARGIN,
                     max_values: int = STEADY_MAX_VALUES,
                     min_runs: int = STEADY_MIN_RUNS) -> dict:
    tr = transcribe(records)
    if not tr.observations:
        raise EmptyTraining("no process observations in training trace")
    values_seen: dict[str, set[int]] = {}
    runs: dict[str, dict[str, dict]] = {}
    gaps: dict[str, int] = {}
    state: dict[str, tuple[int, int, int]] = {}  # var -> (value, run_start, last_tick)
    for obs in tr.observations:
        var, val, tick = obs.variable, obs.value, obs.tick
        values_seen.setdefault(var, set()).add(val)
        prev = state.get(var)
        if prev is None:
            state[var] = (val, tick, tick)
            continue
        pval, pstart, plast = prev
        gap = tick - plast
        if gap > gaps.get(var, 0):
            gaps[var] = gap
        if val == pval:
            state[var] = (pval, pstart, tick)
            continue
        length = tick - pstart
        entry = runs.setdefault(var, {}).setdefault(
            str(pval), {"min": None, "max": 0, "completed": 0})
        entry["completed"] += 1
        entry["min"] = length if entry["min"] is None else min(entry["min"], length)
        entry["max"] = max(entry["max"], length)
        state[var] = (val, tick, tick)
    # the trailing run is cut off by the capture: it only widens the max
    for var, (val, start, last) in state.items():
        length = last - start
        if length > 0:
            entry = runs.setdefault(var, {}).setdefault(
                str(val), {"min": None, "max": 0, "completed": 0})
            entry["max"] = max(entry["max"], length)
    tracked = sorted(v for v, s in values_seen.items() if len(s) <= max_values)
    data = {
        "tracked": tracked,
        "runs": {v: runs.get(v, {}) for v in tracked},
        "values": {v: sorted(values_seen[v]) for v in tracked},
        "max_gap": dict(sorted(gaps.items())),
    }
    return _model("steadytime",
                  {"margin": margin, "max_values": max_values, "min_runs": min_runs},
                  data, len(tr.observations))


class SteadyTimeStream:
    """Streaming detection against a trained steadytime model."""

    def __init__(self, model: dict):
        p = model["params"]
        self.margin, self.min_runs = p["margin"], p["min_runs"]
        self.tracked = set(model["model"]["tracked"])
        self.runs = model["model"]["runs"]
        self.known_values = {v: set(vals)
                             for v, vals in model["model"]["values"].items()}
        self.max_gap = model["model"]["max_gap"]
        self._state: dict[str, list] = {}  # var -> [value, run_start, last, alerted]
        self._tr = Transcriber()
        self._done = 0

    def _bounds(self, var: str, val: int):
        entry = self.runs.get(var, {}).get(str(val))
        if entry is None or entry["completed"] < self.min_runs:
            return None
        return entry

    def feed(self, rec: dict) -> list[Alert]:
        self._tr.feed(rec)
        alerts: list[Alert] = []
        obs_list = self._tr.observations
        margin = self.margin
        while self._done < len(obs_list):
            obs = obs_list[self._done]
            self._done += 1
            var, val, tick = obs.variable, obs.value, obs.tick
            g = self.max_gap.get(var)
            st = self._state.get(var)
            if st is not None and g is not None:
                gap = tick - st[2]
                if gap > g * (1 + margin):
                    alerts.append(Alert(
                        "steadytime", tick, var, gap,
                        f"max_gap {g} margin {margin}",
                        f"{var} update stalled for {gap} ticks"))
            if var not in self.tracked:
                if st is None:
                    self._state[var] = [val, tick, tick, False]
                else:
                    if st[0] != val:
                        st[1] = tick
                    st[0], st[2] = val, tick
                continue
            if st is None:
                self._state[var] = [val, tick, tick, False]
                if val not in self.known_values.get(var, set()):
                    alerts.append(Alert(
                        "steadytime", tick, var, val, "known values",
                        f"{var}={val} never seen in training"))
                continue
            pval, pstart, plast, alerted = st
            if val == pval:
                length = tick - pstart
                entry = self._bounds(var, val)
                if (entry is not None and not alerted
                        and length > entry["max"] * (1 + margin)):
                    alerts.append(Alert(
                        "steadytime", tick, var, length,
                        f"duration [{entry['min']}, {entry['max']}] margin {margin}",
                        f"{var}={val} persisted {length} ticks, beyond learned maximum"))
                    st[3] = True
                st[2] = tick
                continue
            # run terminated
            length = tick - pstart
            entry = self._bounds(var, pval)
            if (entry is not None and entry["min"] is not None
                    and length < entry["min"] * (1 - margin)):
                alerts.append(Alert(
                    "steadytime", tick, var, length,
                    f"duration [{entry['min']}, {entry['max']}] margin {margin}",
                    f"{var}={pval} changed after {length} ticks, quicker than learned"))
            if val not in self.known_values.get(var, set()):
                alerts.append(Alert(
                    "steadytime", tick, var, val, "known values",
                    f"{var}={val} never seen in training"))
            self._state[var] = [val, tick, tick, False]
        return alerts


def detect_steadytime(model: dict, records) -> list[Alert]:
    stream = SteadyTimeStream(model)
    alerts = []
    for rec in records:
        alerts.extend(stream.feed(rec))
    return alerts


# -- iat ---------------------------------------------------------------------

def train_iat(records, margin: float = DEFAULT_MARGIN,
              address_bucket: int = 0) -> dict:
    tr = transcribe(records, address_bucket)
    if not tr.channel_events:
        raise EmptyTraining("no frames in training trace")
    last: dict[str, int] = {}
    ranges: dict[str, list[int]] = {}
    for ev in tr.channel_events:
        prev = last.get(ev.key)
        last[ev.key] = ev.tick
        if prev is None:
            continue
        gap = ev.tick - prev
        r = ranges.get(ev.key)
        if r is None:
            ranges[ev.key] = [gap, gap]
        else:
            if gap < r[0]:
                r[0] = gap
            if gap > r[1]:
                r[1] = gap
    channels = sorted(last)
    return _model("iat", {"margin": margin, "address_bucket": address_bucket},
                  {"channels": channels, "ranges": ranges},
                  len(tr.channel_events))


class IatStream:
    """Streaming detection against a trained iat model."""

    def __init__(self, model: dict):
        p = model["params"]
        self.margin = p["margin"]
        self.known = set(model["model"]["channels"])
        self.ranges = model["model"]["ranges"]
        self._last: dict[str, int] = {}
        self._tr = Transcriber(p.get("address_bucket", 0))
        self._done = 0

    def feed(self, rec: dict) -> list[Alert]:
        self._tr.feed(rec)
        alerts = []
        events = self._tr.channel_events
        while self._done < len(events):
            ev = events[self._done]
            self._done += 1
            if ev.key not in self.known:
                alerts.append(Alert("iat", ev.tick, ev.key, 0, "known channels",
                                    f"channel {ev.key} never seen in training"))
                continue
            prev = self._last.get(ev.key)
            self._last[ev.key] = ev.tick
            if prev is None:
                continue
            gap = ev.tick - prev
            r = self.ranges.get(ev.key)
            if r is None:
                continue  # single frame in training: no learned gap range
            lo, hi = r[0] * (1 - self.margin), r[1] * (1 + self.margin)
            if gap < lo or gap > hi:
                alerts.append(Alert(
                    "iat", ev.tick, ev.key, gap,
                    f"[{r[0]}, {r[1]}] margin {self.margin}",
                    f"inter-arrival {gap} outside learned range on {ev.key}"))
        return alerts


def detect_iat(model: dict, records) -> list[Alert]:
    stream = IatStream(model)
    alerts = []
    for rec in records:
        alerts.extend(stream.feed(rec))
    return alerts


# -- dtmc ----------------------------------------------------------------------

def train_dtmc(records, p_min: float = DEFAULT_P_MIN,
               address_bucket: int = 0) -> dict:
    tr = transcribe(records, address_bucket)
    if not tr.channel_events:
        raise EmptyTraining("no frames in training trace")
    counts: dict[str, dict[str, int]] = {}
    symbols: set[str] = set()
    prev = None
    for ev in tr.channel_events:
        symbols.add(ev.key)
        if prev is not None:
            row = counts.setdefault(prev, {})
            row[ev.key] = row.get(ev.key, 0) + 1
        prev = ev.key
    data = {
        "symbols": sorted(symbols),
        "transitions": {a: dict(sorted(row.items())) for a, row in
                        sorted(counts.items())},
    }
    return _model("dtmc", {"p_min": p_min, "address_bucket": address_bucket}, data,
                  len(tr.channel_events))


class DtmcStream:
    """Streaming detection against a trained dtmc model."""

    def __init__(self, model: dict):
        p = model["params"]
        self.p_min = p["p_min"]
        self.symbols = set(model["model"]["symbols"])
        self.transitions = model["model"]["transitions"]
        self.totals = {a: sum(row.values()) for a, row in self.transitions.items()}
        self._prev: str | None = None
        self._tr = Transcriber(p.get("address_bucket", 0))
        self._done = 0

    def feed(self, rec: dict) -> list[Alert]:
        self._tr.feed(rec)
        alerts = []
        events = self._tr.channel_events
        while self._done < len(events):
            ev = events[self._done]
            self._done += 1
            if ev.key not in self.symbols:
                alerts.append(Alert("dtmc", ev.tick, ev.key, 0, "alphabet",
                                    f"symbol {ev.key} never seen in training"))
                self._prev = ev.key
                continue
            if self._prev is not None:
                row = self.transitions.get(self._prev, {})
                count = row.get(ev.key, 0)
                if count == 0:
                    alerts.append(Alert(
                        "dtmc", ev.tick, f"{self._prev} -> {ev.key}", 0,
                        "seen transitions", "transition never seen in training"))
                elif self.p_min > 0 and self.totals.get(self._prev):
                    prob = count / self.totals[self._prev]
                    if prob < self.p_min:
                        alerts.append(Alert(
                            "dtmc", ev.tick, f"{self._prev} -> {ev.key}", prob,
                            f"p_min {self.p_min}", "transition rarer than threshold"))
            self._prev = ev.key
        return alerts


def detect_dtmc(model: dict, records) -> list[Alert]:
    stream = DtmcStream(model)
    alerts = []
    for rec in records:
        alerts.extend(stream.feed(rec))
    return alerts


TRAINERS = {
    "minmax": train_minmax,
    "steadytime": train_steadytime,
    "iat": train_iat,
    "dtmc": train_dtmc,
}

DETECTORS = {
    "minmax": detect_minmax,
    "steadytime": detect_steadytime,
    "iat": detect_iat,
    "dtmc": detect_dtmc,
}

STREAMS = {
    "minmax": MinMaxStream,
    "steadytime": SteadyTimeStream,
    "iat": IatStream,
    "dtmc": DtmcStream,
}
