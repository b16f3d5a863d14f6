"""Command line entry point.

Subcommands: run scenarios and export datasets, train/detect/evaluate
the detection suite, compute trajectory deviations, and serve the live
testbed with its HTTP API. Exit codes: 0 success, 1 runtime failure,
2 configuration error.
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import __version__
from .errors import ConfigInvalid, VFactoryError
from .scenario import resolve_scenario
from .world import World, dataset_hashes


def _fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
@click.version_option(__version__)
def main():
    """Virtual production-line testbed."""


@main.command("run")
@click.argument("scenario")
@click.option("--mode", type=click.Choice(["fast", "realtime"]), default=None,
              help="override the scenario's run mode")
@click.option("--seed", type=int, default=None, help="override the scenario seed")
@click.option("--duration", type=int, default=None, help="override duration in ticks")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="dataset output directory (defaults to VFACTORY_OUT or ./data/<name>)")
@click.option("--no-attacks", is_flag=True, help="run with the attack script disabled")
@click.option("--no-capture", is_flag=True, help="disable dataset capture")
@click.option("--pcap", is_flag=True, help="also export captured frames as pcap")
@click.option("--plots", is_flag=True, help="render station trajectory figures")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def cmd_run(scenario, mode, seed, duration, out_dir, no_attacks, no_capture, pcap,
            plots, fmt):
    """Run SCENARIO (a file path or a built-in name) to completion."""
    try:
        sc = resolve_scenario(scenario)
    except ConfigInvalid as exc:
        _fail(str(exc), 2)
    if seed is not None:
        sc = sc.with_seed(seed)
    if mode is not None:
        sc.mode = mode
    if duration is not None:
        sc.duration_ticks = duration
    if pcap:
        sc.pcap = True
    if out_dir is None and not no_capture:
        base = os.environ.get("VFACTORY_OUT", "data")
        out_dir = os.path.join(base, sc.name)
    try:
        world = World(sc, out_dir=out_dir, attacks_enabled=not no_attacks,
                      capture_override=False if no_capture else None)
        result = world.run()
    except ConfigInvalid as exc:
        _fail(str(exc), 2)
    except VFactoryError as exc:
        _fail(str(exc))
    except OSError as exc:
        _fail(f"capture write failed: {exc}")
    summary = result.summary()
    summary["wall_s"] = round(result.wall_s, 3)
    if result.realtime_drift_ms is not None:
        summary["realtime_drift_ms"] = round(result.realtime_drift_ms, 1)
    if out_dir and result.records.get("modbus_frame") is not None:
        summary["hashes"] = dataset_hashes(out_dir)
    if plots and out_dir:
        from .plots import plot_station_trajectories
        from .trace.dataset import load_dataset

        fig = plot_station_trajectories(load_dataset(out_dir),
                                        os.path.join(out_dir, "trajectories.png"))
        summary["figure"] = fig
    if fmt == "json":
        click.echo(json.dumps(summary, indent=2, sort_keys=True))
    else:
        click.echo(f"scenario {result.scenario} seed {result.seed} mode {result.mode}")
        click.echo(f"  ticks {result.ticks} (sim {result.sim_time_s:.1f}s, "
                   f"wall {result.wall_s:.2f}s)")
        click.echo(f"  orders: {result.orders}")
        click.echo(f"  records: {result.records}")
        if result.not_triggered:
            click.echo(f"  not triggered: {', '.join(result.not_triggered)}")
        if out_dir:
            click.echo(f"  dataset: {out_dir}")


@main.group("ids")
def cmd_ids():
    """Train, run and evaluate the detection suite."""


def _load_dataset_or_fail(path: str):
    from .errors import CorruptRecord, SchemaUnsupported
    from .trace.dataset import load_dataset

    try:
        return load_dataset(path)
    except FileNotFoundError:
        _fail(f"dataset not found: {path}", 2)
    except (SchemaUnsupported, CorruptRecord) as exc:
        _fail(str(exc), 2)


@cmd_ids.command("train")
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--detectors", default="all", help="comma list or 'all'")
@click.option("--margin", type=float, default=0.05, show_default=True)
@click.option("--address-bucket", type=int, default=0, show_default=True,
              help="address bucket width for channel keys (0 = exact)")
def ids_train(dataset, out_dir, detectors, margin, address_bucket):
    """Learn detector models from a benign DATASET."""
    from .errors import EmptyTraining
    from .ids import detectors as det

    ds = _load_dataset_or_fail(dataset)
    kinds = det.DETECTOR_KINDS if detectors == "all" else tuple(detectors.split(","))
    for kind in kinds:
        if kind not in det.TRAINERS:
            _fail(f"unknown detector {kind!r}", 2)
    os.makedirs(out_dir, exist_ok=True)
    for kind in kinds:
        kwargs = {}
        if kind in ("minmax", "steadytime"):
            kwargs["margin"] = margin
        elif kind == "iat":
            kwargs.update(margin=margin, address_bucket=address_bucket)
        elif kind == "dtmc":
            kwargs["address_bucket"] = address_bucket
        try:
            model = det.TRAINERS[kind](ds.records, **kwargs)
        except EmptyTraining as exc:
            _fail(f"{kind}: {exc}")
        path = os.path.join(out_dir, f"{kind}.json")
        det.save_model(model, path)
        click.echo(f"trained {kind}: {model['record_count']} records -> {path}")


def _load_models(models_dir: str, kinds):
    from .ids import detectors as det

    models = {}
    for kind in kinds:
        path = os.path.join(models_dir, f"{kind}.json")
        if os.path.exists(path):
            models[kind] = det.load_model(path)
    if not models:
        _fail(f"no detector models in {models_dir}", 2)
    return models


@cmd_ids.command("detect")
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--models", "models_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="write alerts as JSON lines")
@click.option("--detectors", default="all")
def ids_detect(dataset, models_dir, out_path, detectors):
    """Run trained detectors over DATASET and emit alerts."""
    from .ids import detectors as det

    ds = _load_dataset_or_fail(dataset)
    kinds = det.DETECTOR_KINDS if detectors == "all" else tuple(detectors.split(","))
    models = _load_models(models_dir, kinds)
    lines = []
    total = 0
    for kind, model in models.items():
        alerts = det.DETECTORS[kind](model, ds.records)
        total += len(alerts)
        click.echo(f"{kind}: {len(alerts)} alerts")
        lines.extend(json.dumps(a.as_dict(), sort_keys=True) for a in alerts)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
        click.echo(f"wrote {total} alerts to {out_path}")


@cmd_ids.command("eval")
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--models", "models_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--grace", type=int, default=250, show_default=True,
              help="detection grace window in ticks")
def ids_eval(dataset, models_dir, out_dir, grace):
    """Score detector alerts against DATASET's ground truth."""
    from .errors import NoGroundTruth
    from .ids import detectors as det
    from .ids.evaluate import evaluate, matrix_text
    from .plots import plot_detection_timeline

    ds = _load_dataset_or_fail(dataset)
    try:
        ground_truth = ds.require_ground_truth()
    except NoGroundTruth as exc:
        _fail(str(exc), 2)
    models = _load_models(models_dir, det.DETECTOR_KINDS)
    alerts = {kind: det.DETECTORS[kind](model, ds.records)
              for kind, model in models.items()}
    report = evaluate(alerts, ground_truth, ds.last_tick,
                      tick_ms=ds.manifest.get("tick_ms", 20), grace_ticks=grace,
                      metadata={"dataset": dataset, "models": models_dir,
                                "margins": {k: m["params"] for k, m in models.items()}})
    os.makedirs(out_dir, exist_ok=True)
    report_path = os.path.join(out_dir, "eval_report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    fig_path = plot_detection_timeline(report, alerts,
                                       os.path.join(out_dir, "detection_timeline.png"))
    text = matrix_text(report)
    with open(os.path.join(out_dir, "detection_matrix.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(text + "\n")
    click.echo(text)
    click.echo(f"report: {report_path}")
    click.echo(f"figure: {fig_path}")


@main.command("deviate")
@click.argument("trace_a", type=click.Path(exists=True))
@click.argument("trace_b", type=click.Path(exists=True))
@click.option("--variable", required=True, help="station.sensor, e.g. vc.rotation")
@click.option("--align", type=click.Choice(["by_tick", "by_event"]),
              default="by_tick", show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default=None)
def cmd_deviate(trace_a, trace_b, variable, align, out_dir):
    """Relative deviation between two runs for one sensor variable."""
    from .errors import SchemaMismatch
    from .plots import plot_deviation_overlay
    from .trace.deviation import deviation, extract_trajectory

    ds_a = _load_dataset_or_fail(trace_a)
    ds_b = _load_dataset_or_fail(trace_b)

    def anchor(ds):
        # by_event alignment anchors on the first order dispatch write
        for rec in ds.records:
            if rec["kind"] == "modbus_frame" and rec.get("src") == "scada" \
                    and rec.get("fc") in (5, 6, 16):
                return rec["tick"]
        return 0

    try:
        ta = extract_trajectory(ds_a, variable,
                                anchor(ds_a) if align == "by_event" else None)
        tb = extract_trajectory(ds_b, variable,
                                anchor(ds_b) if align == "by_event" else None)
        report = deviation(ta, tb, alignment=align)
    except SchemaMismatch as exc:
        _fail(str(exc), 2)
    click.echo(f"{variable} ({align}): max deviation "
               f"{report['deviation_percent']:.2f}% over {report['overlap_ticks']} "
               f"aligned ticks")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "deviation.json"), "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
        fig = plot_deviation_overlay(ta, tb, report,
                                     os.path.join(out_dir, "deviation.png"),
                                     label_a=trace_a, label_b=trace_b)
        click.echo(f"report: {out_dir}/deviation.json")
        click.echo(f"figure: {fig}")


@main.command("serve")
@click.argument("scenario")
@click.option("--http", "http_addr",
              default=lambda: os.environ.get("VFACTORY_HTTP", "127.0.0.1:8080"),
              show_default="127.0.0.1:8080 (env VFACTORY_HTTP)")
@click.option("--mode", type=click.Choice(["fast", "realtime"]), default="realtime",
              show_default=True)
@click.option("--duration", type=int, default=None,
              help="ticks to run (default: unbounded)")
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--ids-models", "models_dir", type=click.Path(exists=True), default=None,
              help="attach trained detectors to the live capture")
def cmd_serve(scenario, http_addr, mode, duration, out_dir, models_dir):
    """Run SCENARIO as a long-lived testbed with the HTTP API."""
    from .errors import BindFailed
    from .http_api import serve_api

    try:
        sc = resolve_scenario(scenario)
    except ConfigInvalid as exc:
        _fail(str(exc), 2)
    sc.mode = mode
    sc.duration_ticks = duration if duration is not None else 10**9
    host, _, port = http_addr.partition(":")
    world = World(sc, out_dir=out_dir)
    try:
        server, api = serve_api(world, host or "127.0.0.1", int(port or 8080))
    except BindFailed as exc:
        _fail(str(exc))
    if models_dir:
        from .ids import detectors as det

        models = _load_models(models_dir, det.DETECTOR_KINDS)
        streams = {kind: det.STREAMS[kind](model) for kind, model in models.items()}

        def live_tap(rec):
            for kind, stream in streams.items():
                for alert in stream.feed(rec):
                    entry = alert.as_dict()
                    world.scada.alerts.append(entry)
                    api.publish_alert(entry)

        world.recorder.consumers.append(live_tap)
        click.echo(f"attached detectors: {', '.join(sorted(streams))}")
    click.echo(f"serving {sc.name} on http://{host or '127.0.0.1'}:{port or 8080} "
               f"({mode}, Ctrl-C to stop)")
    try:
        world.run()
    except KeyboardInterrupt:
        world.stop_requested = True
        click.echo("\nstopping; flushing capture")
        world.finalize(0.0)
    finally:
        server.shutdown()


if __name__ == "__main__":
    main()
