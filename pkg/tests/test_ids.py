import json

import pytest

from vfactory.errors import EmptyTraining, TimelineMismatch
from vfactory.ids import detectors as det
from vfactory.ids.evaluate import evaluate, matrix_text
from vfactory.trace.dataset import load_dataset


@pytest.fixture(scope="module")
def benign(ds_fig7_benign):
    return load_dataset(ds_fig7_benign)


@pytest.fixture(scope="module")
def attacked(ds_fig7):
    return load_dataset(ds_fig7)


@pytest.fixture(scope="module")
def models(benign):
    return {k: det.TRAINERS[k](benign.records) for k in det.DETECTOR_KINDS}


class TestFixedPoint:
    @pytest.mark.parametrize("kind", det.DETECTOR_KINDS)
    def test_training_trace_replay_yields_zero_alerts(self, kind, benign, models):
        alerts = det.DETECTORS[kind](models[kind], benign.records)
        assert alerts == []


class TestModelDeterminism:
    @pytest.mark.parametrize("kind", det.DETECTOR_KINDS)
    def test_training_twice_identical_bytes(self, kind, benign, tmp_path):
        a = det.TRAINERS[kind](benign.records)
        b = det.TRAINERS[kind](benign.records)
        pa, pb = tmp_path / "a.json", tmp_path / "b.json"
        det.save_model(a, str(pa))
        det.save_model(b, str(pb))
        assert pa.read_bytes() == pb.read_bytes()

    @pytest.mark.parametrize("kind", det.DETECTOR_KINDS)
    def test_reloaded_model_detects_identically(self, kind, benign, attacked, models,
                                                tmp_path):
        path = tmp_path / f"{kind}.json"
        det.save_model(models[kind], str(path))
        reloaded = det.load_model(str(path))
        direct = det.DETECTORS[kind](models[kind], attacked.records)
        via_file = det.DETECTORS[kind](reloaded, attacked.records)
        assert [a.as_dict() for a in direct] == [a.as_dict() for a in via_file]


class TestMargins:
    def test_monotone_margins_never_increase_alerts(self, benign, attacked):
        counts = []
        for margin in (0.01, 0.05, 0.2):
            model = det.train_minmax(benign.records, margin=margin)
            counts.append(len(det.detect_minmax(model, attacked.records)))
        assert counts == sorted(counts, reverse=True)

    def test_monotone_margins_steadytime(self, benign, attacked):
        counts = []
        for margin in (0.01, 0.05, 0.2):
            model = det.train_steadytime(benign.records, margin=margin)
            counts.append(len(det.detect_steadytime(model, attacked.records)))
        assert counts == sorted(counts, reverse=True)


class TestTraining:
    def test_empty_training_raises(self):
        with pytest.raises(EmptyTraining):
            det.train_minmax([])
        with pytest.raises(EmptyTraining):
            det.train_iat([])

    def test_alert_cites_violated_bound(self, models, attacked):
        alerts = det.detect_minmax(models["minmax"], attacked.records)
        assert alerts
        assert all(a.bound for a in alerts)
        assert all(a.subject for a in alerts)


class TestScanSeparation:
    def test_minmax_blind_iat_dtmc_see_scan(self, models, attacked):
        scan = next(g for g in attacked.ground_truth
                    if g["attack"] == "modbus_scan")
        lo, hi = scan["start_tick"], scan["end_tick"] + 250
        minmax = det.detect_minmax(models["minmax"], attacked.records)
        assert not [a for a in minmax if lo <= a.tick <= hi]
        for kind in ("iat", "dtmc"):
            alerts = det.DETECTORS[kind](models[kind], attacked.records)
            assert [a for a in alerts if lo <= a.tick <= hi], f"{kind} missed the scan"

    def test_steadytime_detects_scan_with_delay(self, models, attacked):
        scan = next(g for g in attacked.ground_truth
                    if g["attack"] == "modbus_scan")
        alerts = det.detect_steadytime(models["steadytime"], attacked.records)
        in_window = [a for a in alerts
                     if scan["start_tick"] <= a.tick <= scan["end_tick"] + 250]
        assert in_window
        assert min(a.tick for a in in_window) > scan["start_tick"]


class TestEvaluate:
    def test_zero_alerts_all_undetected_zero_false_alarms(self):
        gt = [{"label": "x", "attack": "modbus_scan", "target": "t",
               "start_tick": 100, "end_tick": 200}]
        report = evaluate({"minmax": []}, gt, total_ticks=1000)
        assert report["attacks"][0]["detectors"]["minmax"]["detected"] is False
        assert report["false_alarms"]["minmax"]["count"] == 0

    def test_alert_inside_grace_counts_as_detected(self):
        gt = [{"label": "x", "attack": "modbus_scan", "target": "t",
               "start_tick": 100, "end_tick": 200}]
        alert = det.Alert("iat", 201, "chan", 1, "b", "m")
        report = evaluate({"iat": [alert]}, gt, total_ticks=1000, grace_ticks=250)
        entry = report["attacks"][0]["detectors"]["iat"]
        assert entry["detected"] and entry["first_alert_tick"] == 201

    def test_alert_outside_grace_is_false_alarm(self):
        gt = [{"label": "x", "attack": "modbus_scan", "target": "t",
               "start_tick": 100, "end_tick": 200}]
        alert = det.Alert("iat", 451, "chan", 1, "b", "m")
        report = evaluate({"iat": [alert]}, gt, total_ticks=1000, grace_ticks=250)
        assert report["attacks"][0]["detectors"]["iat"]["detected"] is False
        assert report["false_alarms"]["iat"]["count"] == 1
        assert report["false_alarms"]["iat"]["per_minute"] > 0

    def test_timeline_mismatch(self):
        gt = [{"label": "x", "attack": "modbus_scan", "target": "t",
               "start_tick": 100, "end_tick": 2000}]
        with pytest.raises(TimelineMismatch):
            evaluate({}, gt, total_ticks=1000)

    def test_matrix_text_renders(self, models, attacked):
        alerts = {k: det.DETECTORS[k](models[k], attacked.records)
                  for k in det.DETECTOR_KINDS}
        report = evaluate(alerts, attacked.ground_truth, attacked.last_tick)
        text = matrix_text(report)
        assert "detection matrix" in text
        assert "false alarms" in text


class TestLiveStreams:
    def test_stream_feed_equals_batch_detect(self, models, attacked):
        for kind in det.DETECTOR_KINDS:
            stream = det.STREAMS[kind](models[kind])
            live = []
            for rec in attacked.records:
                live.extend(stream.feed(rec))
            batch = det.DETECTORS[kind](models[kind], attacked.records)
            assert [a.as_dict() for a in live] == [a.as_dict() for a in batch]
