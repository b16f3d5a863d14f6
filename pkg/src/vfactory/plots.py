"""Matplotlib figure rendering for the report paths.

All renderers write PNG files next to the machine-readable outputs and
never require a display (Agg backend).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .names import FRAME_IDS
from .trace.deviation import Trajectory

_STATION_VARS = {
    "vc": ("horizontal", "vertical", "rotation"),
    "warehouse": ("cantilever_x", "cantilever_y", "color_reading"),
    "furnace": ("oven_led", "platform_inside"),
    "mill": ("transport_pos", "mill_motor"),
    "sorting": ("belt_pos", "color_reading", "barrier_exit"),
}


def plot_station_trajectories(dataset, out_path: str) -> str:
    """One subplot per station with its most telling sensors."""
    series: dict[tuple[str, str], tuple[list, list]] = {}
    for rec in dataset.records:
        if rec["kind"] != "process_sample":
            continue
        station = rec["station"]
        for var in _STATION_VARS.get(station, ()):
            key = (station, var)
            if key not in series:
                series[key] = ([], [])
            series[key][0].append(rec["tick"])
            series[key][1].append(rec["values"][var])
    fig, axes = plt.subplots(len(FRAME_IDS), 1, figsize=(10, 12), sharex=True)
    for ax, station in zip(axes, FRAME_IDS):
        for var in _STATION_VARS.get(station, ()):
            ticks, values = series.get((station, var), ([], []))
            ax.plot(ticks, values, label=var, linewidth=0.9)
        ax.set_ylabel(station)
        ax.legend(loc="upper right", fontsize=7)
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("tick")
    fig.suptitle("station sensor trajectories")
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
    return out_path


def plot_deviation_overlay(a: Trajectory, b: Trajectory, report: dict,
                           out_path: str, label_a: str = "run A",
                           label_b: str = "run B") -> str:
    fig, ax = plt.subplots(figsize=(10, 4))
    shift_a = a.anchor_tick or 0 if report["alignment"] == "by_event" else 0
    shift_b = b.anchor_tick or 0 if report["alignment"] == "by_event" else 0
    ax.plot([t - shift_a for t in a.ticks], a.values, label=label_a, linewidth=1.0)
    ax.plot([t - shift_b for t in b.ticks], b.values, label=label_b,
            linewidth=1.0, linestyle="--")
    if report.get("max_at_tick") is not None:
        ax.axvline(report["max_at_tick"], color="red", alpha=0.4,
                   label=f"max dev {report['deviation_percent']:.2f}%")
    ax.set_xlabel("tick" + (" (event-aligned)" if report["alignment"] == "by_event" else ""))
    ax.set_ylabel(a.variable)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
    return out_path


def plot_detection_timeline(report: dict, alerts_by_detector: dict, out_path: str) -> str:
    """Ground-truth bars on top, one alert lane per detector below."""
    kinds = sorted(alerts_by_detector)
    fig, ax = plt.subplots(figsize=(11, 1.2 + 0.8 * (len(kinds) + 1)))
    y_truth = len(kinds)
    for attack in report["attacks"]:
        ax.barh(y_truth, attack["end_tick"] - attack["start_tick"] + 1,
                left=attack["start_tick"], height=0.5, color="red", alpha=0.75)
        ax.text(attack["start_tick"], y_truth + 0.32, attack["label"], fontsize=7)
    for i, kind in enumerate(kinds):
        ticks = [a.tick for a in alerts_by_detector[kind]]
        ax.scatter(ticks, [i] * len(ticks), marker="|", s=120, linewidths=0.8)
    ax.set_yticks(list(range(len(kinds))) + [y_truth])
    ax.set_yticklabels(kinds + ["ground truth"])
    ax.set_xlim(0, report["total_ticks"])
    ax.set_xlabel("tick")
    ax.grid(axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
    return out_path
