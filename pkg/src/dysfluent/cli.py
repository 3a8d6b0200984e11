"""Command-line entry points.

Subcommands mirror the HTTP surface: analyze persists a report into the
store (UDM_STORE overrides the directory) and writes its JSON next to it,
reanalyze steers thresholds on a stored report, synth emits corpus cases,
eval scores predictions against gold, serve runs the HTTP service.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .alignment import AlignmentPath, Segment
from .classifier import CalibrationModel, Thresholds
from .errors import DysfluentError
from .frontend import FrontendConfig, load_audio, save_audio
from .metrics import alignment_error_rate, evaluate_detection
from .pipeline import run_analysis
from .report import (
    ReportStore,
    build_report,
    canonical_json,
    reanalyze_report,
    render_alignment_svg,
    resolve_store_dir,
)
from .service import (
    DEFAULT_INVENTORY,
    ServiceConfig,
    http_serve,
    load_inventory_bundle,
    load_service_config,
    load_thresholds_file,
)
from .synthesis import (
    generate_synthetic_case,
    gold_to_dict,
    make_template_encoder,
    random_spec,
    spec_from_dict,
    spec_to_dict,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dysfluent")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze a WAV file against an expected transcript")
    p.add_argument("--audio", required=True, metavar="F")
    p.add_argument("--transcript", required=True, metavar="S")
    p.add_argument("--inventory", default=DEFAULT_INVENTORY, metavar="F")
    p.add_argument("--thresholds", default=None, metavar="F")
    p.add_argument("--out", required=True, metavar="F")
    p.add_argument("--svg", default=None, metavar="F")

    p = sub.add_parser("reanalyze", help="re-threshold a stored report without recomputing")
    p.add_argument("--report", required=True, metavar="ID")
    p.add_argument("--thresholds", required=True, metavar="F")

    p = sub.add_parser("synth", help="generate a synthetic corpus case")
    p.add_argument("--seed", required=True, type=int, metavar="N")
    p.add_argument("--spec", default=None, metavar="F")
    p.add_argument("--out-dir", required=True, metavar="D")

    p = sub.add_parser("eval", help="score predicted events against gold")
    p.add_argument("--pred", required=True, metavar="F")
    p.add_argument("--gold", required=True, metavar="F")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None, metavar="F")
    return parser


def _cmd_analyze(args) -> int:
    inv, tones, inv_name = load_inventory_bundle(args.inventory)
    config = FrontendConfig()
    encoder = make_template_encoder(inv, tones, config=config)
    thresholds = load_thresholds_file(args.thresholds) if args.thresholds else Thresholds()
    calibration = CalibrationModel()
    audio = load_audio(args.audio)
    result = run_analysis(
        audio, args.transcript, inv, encoder,
        thresholds=thresholds, config=config, calibration=calibration,
    )
    report = build_report(
        result,
        audio_path=args.audio,
        duration_s=audio.duration_s,
        sample_rate=audio.sample_rate,
        config=config,
        thresholds=thresholds,
        calibration=calibration,
        inventory_name=inv_name,
    )
    store = ReportStore(resolve_store_dir(None))
    store.save_new(report)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(report))
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_alignment_svg(report))
    print(report["report_id"])
    return 0


def _cmd_reanalyze(args) -> int:
    store = ReportStore(resolve_store_dir(None))
    thresholds = load_thresholds_file(args.thresholds)
    updated = reanalyze_report(store, args.report, thresholds)
    print(canonical_json(updated))
    return 0


def _cmd_synth(args) -> int:
    inv, tones, _ = load_inventory_bundle(DEFAULT_INVENTORY)
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            spec = spec_from_dict(json.load(fh))
    else:
        spec = random_spec(args.seed, inv, tones)
    audio, transcript, gold = generate_synthetic_case(spec, inv)
    os.makedirs(args.out_dir, exist_ok=True)
    stem = f"case_{args.seed:04d}"
    paths = {
        "audio": os.path.join(args.out_dir, f"{stem}.wav"),
        "spec": os.path.join(args.out_dir, f"{stem}.spec.json"),
        "gold": os.path.join(args.out_dir, f"{stem}.gold.json"),
    }
    save_audio(paths["audio"], audio.samples, audio.sample_rate)
    with open(paths["spec"], "w", encoding="utf-8") as fh:
        fh.write(canonical_json(spec_to_dict(spec)))
    with open(paths["gold"], "w", encoding="utf-8") as fh:
        fh.write(canonical_json(gold_to_dict(gold)))
    line = {"seed": args.seed, "transcript": transcript.source_text, **paths}
    with open(os.path.join(args.out_dir, "manifest.jsonl"), "a", encoding="utf-8") as fh:
        fh.write(canonical_json(line) + "\n")
    print(paths["audio"])
    return 0


def _load_events(raw) -> list:
    if isinstance(raw, dict):
        return raw.get("events", [])
    return raw


def _pred_alignment_path(report: dict, n_frames: int) -> AlignmentPath:
    """Rebuild a frame-labeled path from a report's second-based segments."""
    rate = report["frame_rate"]
    segments = [
        Segment(
            symbol=seg["symbol"],
            start_frame=int(round(seg["start_s"] * rate)),
            end_frame=int(round(seg["end_s"] * rate)),
            mean_posterior=seg["mean_posterior"],
        )
        for seg in report["alignment"]
    ]
    labels: list = [None] * n_frames
    for seg in segments:
        for f in range(seg.start_frame, min(seg.end_frame, n_frames)):
            labels[f] = seg.symbol
    return AlignmentPath(labels, segments, 0.0, rate)


def _event_triple(item) -> tuple[str, float, float]:
    if isinstance(item, dict):
        return item["category"], item["start_s"], item["end_s"]
    cat, start, end = item
    return cat, start, end


def _cmd_eval(args) -> int:
    with open(args.pred, encoding="utf-8") as fh:
        pred_raw = json.load(fh)
    with open(args.gold, encoding="utf-8") as fh:
        gold_raw = json.load(fh)
    pred_events = [_event_triple(e) for e in _load_events(pred_raw)]
    gold_events = [_event_triple(e) for e in _load_events(gold_raw)]
    report = evaluate_detection(pred_events, gold_events)
    if (
        isinstance(pred_raw, dict)
        and isinstance(gold_raw, dict)
        and "alignment" in pred_raw
        and "alignment" in gold_raw
    ):
        gold_labels = gold_raw["alignment"]
        path = _pred_alignment_path(pred_raw, len(gold_labels))
        report.aer_percent = alignment_error_rate(path, gold_labels)
    out = {
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "balanced_accuracy": report.balanced_accuracy,
        "aer_percent": report.aer_percent,
    }
    print(canonical_json(out))
    return 0


def _cmd_serve(args) -> int:
    cfg = load_service_config(args.config) if args.config else ServiceConfig()
    http_serve(cfg)
    return 0


_COMMANDS = {
    "analyze": _cmd_analyze,
    "reanalyze": _cmd_reanalyze,
    "synth": _cmd_synth,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DysfluentError as exc:
        print(f"error[{exc.stage}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
