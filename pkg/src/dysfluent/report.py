"""Analysis reports: canonical JSON, versioned persistence, SVG maps.

A report is a plain dict shaped exactly like its serialized form, so the
store can round-trip it byte-identically: canonical JSON means sorted
keys, compact separators, and every float reduced to 6 significant
digits (the reduction is idempotent, which is what makes
serialize → parse → serialize a fixed point).
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from datetime import datetime, timezone
from xml.sax.saxutils import escape, quoteattr

from .classifier import (
    CATEGORIES,
    CATEGORY_SEVERITY,
    CalibrationModel,
    Candidate,
    DysfluencyEvent,
    Thresholds,
    thresholds_from_dict,
    thresholds_to_dict,
)
from .errors import UnknownEvent, UnknownReport, VersionConflict
from .frontend import FrontendConfig
from .pipeline import AnalysisResult, reanalyze_events

SVG_PX_PER_SECOND = 100.0

_OP_COLORS = {
    "insertion": "#2ca02c",
    "deletion": "#d62728",
    "substitution": "#ff7f0e",
    "prolongation": "#9467bd",
}

_EVENT_LANES = CATEGORIES + ("atypical",)


def _canonical(value):
    if isinstance(value, dict):
        return {k: _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return float(format(value, ".6g"))
    return value


def canonical_json(obj) -> str:
    return json.dumps(
        _canonical(obj), sort_keys=True, separators=(",", ":"), allow_nan=False, ensure_ascii=False
    )


# -- report assembly ----------------------------------------------------------


def _event_dict(ev: DysfluencyEvent) -> dict:
    return {
        "event_id": ev.event_id,
        "category": ev.category,
        "severity": CATEGORY_SEVERITY[ev.category],
        "start_s": ev.start_s,
        "end_s": ev.end_s,
        "start_frame": ev.start_frame,
        "end_frame": ev.end_frame,
        "raw_score": ev.raw_score,
        "calibrated_confidence": ev.calibrated_confidence,
        "contributing_edit_ops": list(ev.contributing_edit_ops),
        "attribution": dict(ev.attribution) if ev.attribution else None,
    }


def _candidate_dict(cand: Candidate) -> dict:
    return {
        "start_frame": cand.start_frame,
        "end_frame": cand.end_frame,
        "scores": dict(cand.scores),
        "op_indices": list(cand.op_indices),
        "attribution": dict(cand.attribution) if cand.attribution else None,
    }


def _candidate_from_dict(raw: dict, frame_rate: float) -> Candidate:
    return Candidate(
        start_frame=int(raw["start_frame"]),
        end_frame=int(raw["end_frame"]),
        frame_rate=frame_rate,
        scores={k: float(v) for k, v in raw["scores"].items()},
        op_indices=[int(i) for i in raw["op_indices"]],
        attribution=(
            {k: float(v) for k, v in raw["attribution"].items()} if raw.get("attribution") else None
        ),
    )


def build_report(
    result: AnalysisResult,
    audio_path: str,
    duration_s: float,
    sample_rate: int,
    config: FrontendConfig,
    thresholds: Thresholds,
    calibration: CalibrationModel,
    inventory_name: str,
    report_id: str | None = None,
) -> dict:
    rate = result.frame_rate
    ops = []
    for op in result.edit_ops:
        ops.append(
            {
                "kind": op.kind,
                "expected_symbol": op.expected_symbol,
                "realized_symbol": op.realized_symbol,
                "frame_span": list(op.frame_span),
                "start_s": op.frame_span[0] / rate,
                "end_s": op.frame_span[1] / rate,
                "duration_z": op.duration_z,
                "realized_index": op.realized_index,
                "expected_index": op.expected_index,
                "mean_posterior": op.mean_posterior,
            }
        )
    return {
        "report_id": report_id or uuid.uuid4().hex[:12],
        "audio": {
            "path": audio_path,
            "duration_s": duration_s,
            "sample_rate": sample_rate,
        },
        "config": {
            "frontend": {
                "n_fft": config.n_fft,
                "hop": config.hop,
                "f_min": config.f_min,
                "f_max": config.f_max,
                "win_size": config.win_size,
                "n_mels": config.n_mels,
                "n_coef": config.n_coef,
                "log_floor": config.log_floor,
            },
            "thresholds": thresholds_to_dict(thresholds),
            "calibration": {"temperature": calibration.temperature},
            "inventory_name": inventory_name,
        },
        "transcript": {
            "phones": list(result.transcript.phones),
            "word_boundaries": list(result.transcript.word_boundaries),
            "source_text": result.transcript.source_text,
        },
        "frame_rate": rate,
        "alignment": [
            {
                "symbol": seg.symbol,
                "start_s": seg.start_frame / rate,
                "end_s": seg.end_frame / rate,
                "mean_posterior": seg.mean_posterior,
            }
            for seg in result.path.segments
        ],
        "edit_ops": ops,
        "events": [_event_dict(ev) for ev in result.events],
        "candidates": [_candidate_dict(c) for c in result.candidates],
        "atypicality": result.atypicality,
        "version": 1,
        "verdicts": [],
    }


# -- persistence --------------------------------------------------------------


class ReportStore:
    """One canonical-JSON file per report version; newest file is current.

    Mutations serialize per report id; a commit whose base version is no
    longer current raises VersionConflict.
    """

    def __init__(self, directory: str) -> None:
        self.directory = directory
        os.makedirs(directory, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry = threading.Lock()

    def _lock(self, report_id: str) -> threading.Lock:
        with self._registry:
            return self._locks.setdefault(report_id, threading.Lock())

    def _path(self, report_id: str, version: int) -> str:
        return os.path.join(self.directory, f"{report_id}_v{version:04d}.json")

    def _current_version(self, report_id: str) -> int:
        versions = [
            int(name[len(report_id) + 2 : -5])
            for name in os.listdir(self.directory)
            if name.startswith(f"{report_id}_v") and name.endswith(".json")
        ]
        return max(versions, default=0)

    def save_new(self, report: dict) -> None:
        report_id = report["report_id"]
        with self._lock(report_id):
            if self._current_version(report_id):
                raise VersionConflict(f"report {report_id} already exists")
            self._write(report)

    def commit(self, report: dict, base_version: int) -> None:
        report_id = report["report_id"]
        with self._lock(report_id):
            current = self._current_version(report_id)
            if current != base_version:
                raise VersionConflict(
                    f"report {report_id} is at version {current}, commit based on {base_version}"
                )
            self._write(report)

    def _write(self, report: dict) -> None:
        path = self._path(report["report_id"], report["version"])
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(report))
        os.replace(tmp, path)

    def load(self, report_id: str) -> dict:
        version = self._current_version(report_id)
        if not version:
            raise UnknownReport(f"no report {report_id!r}")
        with open(self._path(report_id, version), encoding="utf-8") as fh:
            return json.load(fh)

    def list_reports(self) -> list[dict]:
        ids = set()
        for name in os.listdir(self.directory):
            if name.endswith(".json") and "_v" in name:
                ids.add(name.rsplit("_v", 1)[0])
        out = []
        for report_id in sorted(ids):
            report = self.load(report_id)
            out.append(
                {
                    "report_id": report_id,
                    "version": report["version"],
                    "audio": report["audio"],
                    "event_count": len(report["events"]),
                }
            )
        return out


def resolve_store_dir(configured: str | None) -> str:
    """UDM_STORE overrides any configured store directory."""
    return os.environ.get("UDM_STORE") or configured or "reports"


# -- mutations ----------------------------------------------------------------


def reanalyze_report(store: ReportStore, report_id: str, thresholds: Thresholds) -> dict:
    """New version with events rebuilt under new thresholds; alignment and
    edit ops are carried over untouched."""
    report = store.load(report_id)
    base = report["version"]
    cands = [_candidate_from_dict(c, report["frame_rate"]) for c in report["candidates"]]
    cal = CalibrationModel(report["config"]["calibration"]["temperature"])
    _, events = reanalyze_events(cands, report["atypicality"], thresholds, cal)
    surviving = {ev.event_id for ev in events}
    updated = dict(report)
    updated["config"] = dict(report["config"])
    updated["config"]["thresholds"] = thresholds_to_dict(thresholds)
    updated["events"] = [_event_dict(ev) for ev in events]
    updated["verdicts"] = [v for v in report["verdicts"] if v["event_id"] in surviving]
    updated["version"] = base + 1
    store.commit(updated, base)
    return updated


def record_verdict(
    store: ReportStore, report_id: str, event_id: str, verdict: str, annotator: str
) -> dict:
    if verdict not in ("accepted", "rejected"):
        raise ValueError(f"verdict must be accepted or rejected, got {verdict!r}")
    report = store.load(report_id)
    base = report["version"]
    if all(ev["event_id"] != event_id for ev in report["events"]):
        raise UnknownEvent(f"no event {event_id!r} in report {report_id}")
    updated = dict(report)
    updated["verdicts"] = list(report["verdicts"]) + [
        {
            "event_id": event_id,
            "verdict": verdict,
            "annotator": annotator,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
    ]
    updated["version"] = base + 1
    store.commit(updated, base)
    return updated


# -- SVG ----------------------------------------------------------------------


def render_alignment_svg(report: dict) -> str:
    """Time-aligned map: phone segments, edit ops, one lane per event category.

    Geometry is 100 px per second.  Every event in the report appears as a
    rect with class "event" and its id in data-event-id.
    """
    duration = report["audio"]["duration_s"]
    margin = 70.0
    width = margin + duration * SVG_PX_PER_SECOND + 20.0
    lane_h = 18.0
    seg_y, seg_h = 30.0, 40.0
    ops_y = seg_y + seg_h + 8.0
    events_y = ops_y + lane_h + 6.0
    height = events_y + lane_h * len(_EVENT_LANES) + 10.0

    def x(t: float) -> float:
        return margin + t * SVG_PX_PER_SECOND

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'font-family="monospace" font-size="10">'
    ]
    tick = 0.0
    while tick <= duration + 1e-9:
        parts.append(
            f'<line class="tick" x1="{x(tick):.1f}" y1="14" x2="{x(tick):.1f}" y2="20" stroke="#666"/>'
            f'<text class="tick-label" x="{x(tick):.1f}" y="12" text-anchor="middle">{tick:.1f}s</text>'
        )
        tick += 0.5

    for seg in report["alignment"]:
        sx, w = x(seg["start_s"]), (seg["end_s"] - seg["start_s"]) * SVG_PX_PER_SECOND
        parts.append(
            f'<rect class="segment" x="{sx:.1f}" y="{seg_y}" width="{w:.1f}" height="{seg_h}" '
            f'fill="#9ecae1" stroke="#3182bd"/>'
            f'<text class="segment-label" x="{sx + w / 2:.1f}" y="{seg_y + seg_h / 2 + 3:.1f}" '
            f'text-anchor="middle">{escape(seg["symbol"])}</text>'
        )

    parts.append(
        f'<text class="lane-label" x="4" y="{ops_y + 12:.1f}">edits</text>'
    )
    for op in report["edit_ops"]:
        color = _OP_COLORS[op["kind"]]
        sx = x(op["start_s"])
        w = max((op["end_s"] - op["start_s"]) * SVG_PX_PER_SECOND, 2.0)
        parts.append(
            f'<rect class="edit-op" data-kind={quoteattr(op["kind"])} x="{sx:.1f}" '
            f'y="{ops_y}" width="{w:.1f}" height="{lane_h - 4}" fill="{color}"/>'
        )

    for lane, category in enumerate(_EVENT_LANES):
        ly = events_y + lane * lane_h
        parts.append(f'<text class="lane-label" x="4" y="{ly + 12:.1f}">{escape(category)}</text>')
        for ev in report["events"]:
            if ev["category"] != category:
                continue
            sx = x(ev["start_s"])
            w = max((ev["end_s"] - ev["start_s"]) * SVG_PX_PER_SECOND, 2.0)
            parts.append(
                f'<rect class="event" data-event-id={quoteattr(ev["event_id"])} '
                f'data-category={quoteattr(category)} x="{sx:.1f}" y="{ly:.1f}" '
                f'width="{w:.1f}" height="{lane_h - 4}" fill="#e34a33" '
                f'fill-opacity="{max(ev["calibrated_confidence"], 0.25):.2f}"/>'
            )
    parts.append("</svg>")
    return "".join(parts)
