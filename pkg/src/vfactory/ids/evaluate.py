"""Alert scoring against labeled ground-truth intervals.

An attack counts as detected by a detector when at least one of its
alerts falls inside [start, end + grace]; the grace window credits
inherently delayed detections. Alerts outside every (padded) attack
window are false alarms, rated per minute of benign time.
"""

from __future__ import annotations

from ..errors import TimelineMismatch
from .detectors import Alert

DEFAULT_GRACE_TICKS = 250


def _merge(intervals: list[tuple[int, int]]) -> list[tuple[int, int]]:
    if not intervals:
        return []
    intervals = sorted(intervals)
    out = [list(intervals[0])]
    for start, end in intervals[1:]:
        if start <= out[-1][1]:
            out[-1][1] = max(out[-1][1], end)
        else:
            out.append([start, end])
    return [tuple(x) for x in out]


def evaluate(alerts_by_detector: dict[str, list[Alert]], ground_truth: list[dict],
             total_ticks: int, tick_ms: int = 20,
             grace_ticks: int = DEFAULT_GRACE_TICKS,
             metadata: dict | None = None) -> dict:
    for gt in ground_truth:
        if gt["end_tick"] > total_ticks or gt["start_tick"] < 0:
            raise TimelineMismatch(
                f"interval {gt['label']} [{gt['start_tick']}, {gt['end_tick']}] "
                f"outside run of {total_ticks} ticks")
    padded = [(gt["start_tick"], gt["end_tick"] + grace_ticks) for gt in ground_truth]
    benign_excluded = _merge(padded)
    benign_ticks = total_ticks - sum(min(e, total_ticks) - max(s, 0)
                                     for s, e in benign_excluded)
    benign_minutes = benign_ticks * tick_ms / 60000.0

    attacks = []
    for gt in sorted(ground_truth, key=lambda g: (g["start_tick"], g["label"])):
        start, end = gt["start_tick"], gt["end_tick"] + grace_ticks
        per_detector = {}
        for kind, alerts in alerts_by_detector.items():
            hits = [a for a in alerts if start <= a.tick <= end]
            first = min((a.tick for a in hits), default=None)
            per_detector[kind] = {
                "detected": bool(hits),
                "alerts": len(hits),
                "first_alert_tick": first,
                "delay_ticks": (first - gt["start_tick"]) if first is not None else None,
            }
        attacks.append({
            "label": gt["label"],
            "attack": gt.get("attack"),
            "target": gt.get("target"),
            "start_tick": gt["start_tick"],
            "end_tick": gt["end_tick"],
            "detectors": per_detector,
        })

    false_alarms = {}
    for kind, alerts in alerts_by_detector.items():
        outside = [a for a in alerts
                   if not any(s <= a.tick <= e for s, e in benign_excluded)]
        false_alarms[kind] = {
            "count": len(outside),
            "per_minute": (len(outside) / benign_minutes) if benign_minutes > 0 else 0.0,
            "sample": [a.as_dict() for a in outside[:5]],
        }

    return {
        "grace_ticks": grace_ticks,
        "tick_ms": tick_ms,
        "total_ticks": total_ticks,
        "benign_ticks": benign_ticks,
        "attacks": attacks,
        "false_alarms": false_alarms,
        "metadata": metadata or {},
    }


def matrix_text(report: dict) -> str:
    kinds = sorted({k for a in report["attacks"] for k in a["detectors"]})
    rows = ["detection matrix (grace {} ticks)".format(report["grace_ticks"])]
    header = f"{'attack':28s}" + "".join(f"{k:>12s}" for k in kinds)
    rows.append(header)
    rows.append("-" * len(header))
    for attack in report["attacks"]:
        cells = []
        for kind in kinds:
            d = attack["detectors"][kind]
            if d["detected"]:
                cells.append(f"+{d['delay_ticks']:>6d}t    ")
            else:
                cells.append("      -     ")
        rows.append(f"{attack['label'][:27]:28s}" + "".join(f"{c:>12s}" for c in cells))
    rows.append("")
    rows.append("false alarms per minute of benign time:")
    for kind in kinds:
        fa = report["false_alarms"].get(kind, {})
        rows.append(f"  {kind:12s} {fa.get('count', 0):4d}  "
                    f"({fa.get('per_minute', 0.0):.3f}/min)")
    return "\n".join(rows)
