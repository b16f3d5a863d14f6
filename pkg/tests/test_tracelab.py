import json
import os

import pytest
from hypothesis import given, settings, strategies as st

from vfactory.errors import CorruptRecord, SchemaMismatch, SchemaUnsupported
from vfactory.modbus import codec
from vfactory.scenario import resolve_scenario
from vfactory.trace.dataset import load_dataset, replay
from vfactory.trace.deviation import Trajectory, deviation, extract_trajectory
from vfactory.trace.pcap import read_pcap_payloads
from vfactory.trace.records import file_sha256
from vfactory.world import World


class TestCaptureFidelity:
    def test_reencoding_decoded_frames_reproduces_raw_bytes(self, ds_happy):
        ds = load_dataset(ds_happy)
        checked = 0
        for rec in ds.frames:
            raw = bytes.fromhex(rec["raw"])
            frame = codec.decode_one(raw)
            rebuilt = codec.encode_frame(frame.transaction_id, frame.unit_id,
                                         frame.function, frame.payload)
            assert rebuilt == raw
            checked += 1
        assert checked > 1000

    def test_records_strictly_ordered(self, ds_happy):
        ds = load_dataset(ds_happy)
        keys = [(r["tick"], r["seq"]) for r in ds.records]
        assert keys == sorted(keys)
        assert len({s for _, s in keys}) == len(keys)

    def test_manifest_counts_match_records(self, ds_happy):
        ds = load_dataset(ds_happy)
        counts = ds.manifest["counts"]
        for kind in ("process_sample", "modbus_frame"):
            assert counts[kind] == sum(1 for r in ds.records if r["kind"] == kind)


class TestDeterminism:
    def test_rerun_same_config_identical_bytes(self, ds_happy, ds_happy_again):
        for name in ("trace.jsonl", "manifest.json", "summary.json"):
            assert file_sha256(os.path.join(ds_happy, name)) == \
                file_sha256(os.path.join(ds_happy_again, name)), name


class TestReplay:
    def test_replay_streams_in_order(self, ds_happy):
        ds = load_dataset(ds_happy)
        seen = []
        replay(ds, [lambda rec: seen.append(rec["seq"])])
        assert seen == sorted(seen)
        assert len(seen) == len(ds.records)

    def test_truncated_line_reports_line_number(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        path.write_text('{"kind":"link_event","tick":1,"seq":1}\n{"kind":"mod')
        with pytest.raises(CorruptRecord) as err:
            load_dataset(str(path))
        assert err.value.line_no == 2

    def test_unsupported_schema_version(self, tmp_path):
        (tmp_path / "trace.jsonl").write_text("")
        (tmp_path / "manifest.json").write_text(json.dumps({"schema_version": 99}))
        with pytest.raises(SchemaUnsupported):
            load_dataset(str(tmp_path))


class TestDeviation:
    def _traj(self, values, lo=0, hi=1000, ticks=None, anchor=None):
        ticks = ticks or list(range(1, len(values) + 1))
        return Trajectory("vc.rotation", ticks, values, lo, hi, anchor)

    def test_identity_is_zero(self):
        t = self._traj([1, 5, 9, 200])
        assert deviation(t, t)["deviation_fraction"] == 0.0

    def test_range_normalized_offset_exact(self):
        # constant offset of 0.0011 of the schema range reads 0.11%
        a = self._traj([0] * 10, lo=0, hi=10000)
        a.variable = "x.y"
        b = self._traj([11] * 10, lo=0, hi=10000)
        b.variable = "x.y"
        assert deviation(a, b)["deviation_percent"] == pytest.approx(0.11, abs=0)

    def test_symmetry(self):
        a = self._traj([0, 10, 20, 500])
        b = self._traj([3, 9, 40, 470])
        assert deviation(a, b)["deviation_fraction"] == \
            deviation(b, a)["deviation_fraction"]

    @given(st.lists(st.integers(0, 1000), min_size=3, max_size=12))
    @settings(max_examples=60, deadline=None)
    def test_triangle_bound(self, values):
        n = len(values)
        a = self._traj(values)
        b = self._traj([(v + 17) % 1000 for v in values])
        c = self._traj([(v * 3 + 5) % 1000 for v in values])
        ab = deviation(a, b)["deviation_fraction"]
        bc = deviation(b, c)["deviation_fraction"]
        ac = deviation(a, c)["deviation_fraction"]
        assert ac <= ab + bc + 1e-12

    def test_event_alignment_absorbs_start_shift(self):
        values = [0, 5, 10, 50, 90, 100, 100]
        a = self._traj(values, ticks=list(range(10, 17)), anchor=10)
        b = self._traj(values, ticks=list(range(40, 47)), anchor=40)
        by_tick = deviation(a, b, alignment="by_tick")
        by_event = deviation(a, b, alignment="by_event")
        assert by_tick["overlap_ticks"] == 0
        assert by_event["deviation_fraction"] == 0.0
        assert by_event["overlap_ticks"] == len(values)

    def test_schema_mismatch(self):
        a = self._traj([1, 2, 3], hi=1000)
        b = self._traj([1, 2, 3], hi=500)
        with pytest.raises(SchemaMismatch):
            deviation(a, b)

    def test_extract_from_dataset(self, ds_happy):
        ds = load_dataset(ds_happy)
        traj = extract_trajectory(ds, "vc.rotation")
        assert (traj.lo, traj.hi) == (0, 1000)
        assert len(traj.ticks) == ds.manifest["duration_ticks"]
        with pytest.raises(SchemaMismatch):
            extract_trajectory(ds, "vc.bogus")


class TestPcap:
    def test_roundtrip_payloads(self, tmp_path):
        sc = resolve_scenario("order")
        sc.pcap = True
        out = str(tmp_path / "cap")
        w = World(sc, out_dir=out)
        w.run()
        pcap = os.path.join(out, "frames.pcap")
        assert os.path.exists(pcap)
        payloads = read_pcap_payloads(pcap)
        ds = load_dataset(out)
        assert len(payloads) == len(ds.frames)
        assert payloads[0] == bytes.fromhex(ds.frames[0]["raw"])
        assert payloads[-1] == bytes.fromhex(ds.frames[-1]["raw"])
