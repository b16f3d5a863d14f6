from __future__ import annotations

import copy

import pytest

from vfactory.scenario import Scenario, resolve_scenario, validate
from vfactory.world import World


def make_scenario(**overrides) -> Scenario:
    data = {
        "schema_version": 1,
        "name": overrides.pop("name", "test"),
        "seed": overrides.pop("seed", 7),
        "run": {"mode": "fast",
                "duration_ticks": overrides.pop("duration_ticks", 1000)},
    }
    data.update(overrides)
    sc = Scenario(copy.deepcopy(data))
    validate(sc)
    return sc


def run_dataset(tmp_path_factory, name: str, attacks: bool = True,
                label: str | None = None) -> str:
    out = str(tmp_path_factory.mktemp(label or name))
    sc = resolve_scenario(name)
    World(sc, out_dir=out, attacks_enabled=attacks).run()
    return out


@pytest.fixture(scope="session")
def ds_happy(tmp_path_factory):
    return run_dataset(tmp_path_factory, "happy_path")


@pytest.fixture(scope="session")
def ds_happy_again(tmp_path_factory):
    return run_dataset(tmp_path_factory, "happy_path", label="happy2")


@pytest.fixture(scope="session")
def ds_phys(tmp_path_factory):
    return run_dataset(tmp_path_factory, "physical_attacks")


@pytest.fixture(scope="session")
def ds_phys_base(tmp_path_factory):
    return run_dataset(tmp_path_factory, "physical_attacks", attacks=False,
                       label="physbase")


@pytest.fixture(scope="session")
def ds_inject(tmp_path_factory):
    return run_dataset(tmp_path_factory, "command_injection")


@pytest.fixture(scope="session")
def ds_inject_base(tmp_path_factory):
    return run_dataset(tmp_path_factory, "command_injection", attacks=False,
                       label="injectbase")


@pytest.fixture(scope="session")
def ds_fig7(tmp_path_factory):
    return run_dataset(tmp_path_factory, "fig7_attacks")


@pytest.fixture(scope="session")
def ds_fig7_benign(tmp_path_factory):
    return run_dataset(tmp_path_factory, "fig7_attacks", attacks=False,
                       label="fig7benign")


@pytest.fixture(scope="session")
def ds_jam(tmp_path_factory):
    return run_dataset(tmp_path_factory, "jamming")


def boolean_runs(signal: list[int]) -> list[tuple[int, int]]:
    """(start_index, length) of each run of truthy values."""
    runs = []
    start = None
    for i, v in enumerate(signal):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i - start))
            start = None
    if start is not None:
        runs.append((start, len(signal) - start))
    return runs


def series(dataset_dir: str, variable: str) -> tuple[list[int], list[int]]:
    """(ticks, values) of station.sensor from the dataset samples."""
    from vfactory.trace.dataset import load_dataset

    station, sensor = variable.split(".", 1)
    ds = load_dataset(dataset_dir)
    ticks, values = [], []
    for rec in ds.records:
        if rec["kind"] == "process_sample" and rec["station"] == station:
            ticks.append(rec["tick"])
            values.append(rec["values"][sensor])
    return ticks, values


def peak_count(values: list[int], threshold: int = 50) -> int:
    peaks, above = 0, False
    for v in values:
        if v > threshold and not above:
            peaks += 1
            above = True
        elif v <= threshold:
            above = False
    return peaks


def ground_truth_of(dataset_dir: str, label: str) -> dict:
    from vfactory.trace.dataset import load_dataset

    for rec in load_dataset(dataset_dir).ground_truth:
        if rec["label"] == label:
            return rec
    raise AssertionError(f"no ground truth labeled {label!r}")
