"""Dataset loading and replay."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from ..errors import CorruptRecord, NoGroundTruth, SchemaUnsupported
from .records import SCHEMA_VERSION


@dataclass(slots=True)
class Dataset:
    manifest: dict
    records: list[dict] = field(default_factory=list)

    @property
    def ground_truth(self) -> list[dict]:
        return [r for r in self.records if r["kind"] == "ground_truth"]

    @property
    def frames(self) -> list[dict]:
        return [r for r in self.records if r["kind"] == "modbus_frame"]

    @property
    def samples(self) -> list[dict]:
        return [r for r in self.records if r["kind"] == "process_sample"]

    def require_ground_truth(self) -> list[dict]:
        gt = self.ground_truth
        if not gt:
            raise NoGroundTruth("dataset contains no ground-truth intervals")
        return gt

    @property
    def last_tick(self) -> int:
        return self.manifest.get("duration_ticks") or (
            self.records[-1]["tick"] if self.records else 0)


def load_dataset(path: str) -> Dataset:
    """Load a dataset directory (or a bare trace.jsonl path)."""
    if os.path.isdir(path):
        trace_path = os.path.join(path, "trace.jsonl")
        manifest_path = os.path.join(path, "manifest.json")
    else:
        trace_path = path
        manifest_path = os.path.join(os.path.dirname(path), "manifest.json")
    manifest = {}
    if os.path.exists(manifest_path):
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
        version = manifest.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaUnsupported(f"schema_version {version} (supported: {SCHEMA_VERSION})")
    records = []
    with open(trace_path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptRecord(i, str(exc)) from exc
            if "kind" not in rec or "tick" not in rec:
                raise CorruptRecord(i, "missing kind/tick")
            records.append(rec)
    return Dataset(manifest=manifest, records=records)


def replay(dataset: Dataset, consumers) -> None:
    """Stream records in (tick, seq) order to each consumer callable."""
    for rec in dataset.records:
        for consumer in consumers:
            consumer(rec)
