"""HTTP surface over the analysis pipeline and report store.

Error mapping: structurally bad requests are 400, unknown ids 404, stale
concurrent writes 409, and anything the pipeline itself raises comes back
as 422 with the failing stage named in the body.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

from fastapi import FastAPI, File, Form, Request, Response, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .classifier import CalibrationModel, Thresholds, thresholds_from_dict
from .errors import (
    BadThresholds,
    DysfluentError,
    UnknownEvent,
    UnknownReport,
    VersionConflict,
)
from .frontend import FrontendConfig, load_audio
from .inventory import inventory_from_dict
from .pipeline import run_analysis
from .report import (
    ReportStore,
    build_report,
    canonical_json,
    reanalyze_report,
    record_verdict,
    render_alignment_svg,
    resolve_store_dir,
)
from .synthesis import make_template_encoder

DEFAULT_INVENTORY = os.path.join(os.path.dirname(__file__), "data", "demo_inventory.json")


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    store_dir: str = "reports"
    inventory_path: str = DEFAULT_INVENTORY
    thresholds_path: str | None = None
    temperature: float = 1.0
    frontend: FrontendConfig = field(default_factory=FrontendConfig)


def load_service_config(path: str) -> ServiceConfig:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    cfg = ServiceConfig()
    cfg.host = str(raw.get("host", cfg.host))
    cfg.port = int(raw.get("port", cfg.port))
    cfg.store_dir = str(raw.get("store_dir", cfg.store_dir))
    cfg.inventory_path = str(raw.get("inventory", cfg.inventory_path))
    if raw.get("thresholds"):
        cfg.thresholds_path = str(raw["thresholds"])
    cfg.temperature = float(raw.get("temperature", cfg.temperature))
    return cfg


def load_inventory_bundle(path: str):
    """Inventory plus the tone table and display name stored alongside it."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    inv = inventory_from_dict(raw)
    tones = {str(k): float(v) for k, v in raw.get("tone_hz", {}).items()}
    name = str(raw.get("name", os.path.splitext(os.path.basename(path))[0]))
    return inv, tones, name


def load_thresholds_file(path: str) -> Thresholds:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BadThresholds(f"not valid JSON: {exc}") from None
    return thresholds_from_dict(raw)


def create_app(cfg: ServiceConfig | None = None) -> FastAPI:
    cfg = cfg or ServiceConfig()
    inv, tones, inv_name = load_inventory_bundle(cfg.inventory_path)
    encoder = make_template_encoder(inv, tones, config=cfg.frontend)
    thresholds = (
        load_thresholds_file(cfg.thresholds_path) if cfg.thresholds_path else Thresholds()
    )
    calibration = CalibrationModel(cfg.temperature)
    store = ReportStore(resolve_store_dir(cfg.store_dir))

    app = FastAPI(title="dysfluent", version="0.1.0")
    app.state.store = store

    def report_response(report: dict) -> Response:
        return Response(canonical_json(report), media_type="application/json")

    @app.exception_handler(DysfluentError)
    async def _pipeline_error(_request: Request, exc: DysfluentError):
        if isinstance(exc, (UnknownReport, UnknownEvent)):
            return JSONResponse({"message": str(exc)}, status_code=404)
        if isinstance(exc, VersionConflict):
            return JSONResponse({"message": str(exc)}, status_code=409)
        if isinstance(exc, BadThresholds):
            return JSONResponse({"message": str(exc)}, status_code=400)
        return JSONResponse({"stage": exc.stage, "message": str(exc)}, status_code=422)

    @app.exception_handler(RequestValidationError)
    async def _malformed(_request: Request, exc: RequestValidationError):
        return JSONResponse({"message": str(exc.errors())}, status_code=400)

    @app.post("/analyze")
    async def analyze(audio: UploadFile = File(...), transcript: str = Form(...)):
        payload = await audio.read()
        fd, tmp = tempfile.mkstemp(suffix=".wav")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            buffer = load_audio(tmp)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        result = run_analysis(
            buffer,
            transcript,
            inv,
            encoder,
            thresholds=thresholds,
            config=cfg.frontend,
            calibration=calibration,
        )
        report = build_report(
            result,
            audio_path=audio.filename or "upload.wav",
            duration_s=buffer.duration_s,
            sample_rate=buffer.sample_rate,
            config=cfg.frontend,
            thresholds=thresholds,
            calibration=calibration,
            inventory_name=inv_name,
        )
        store.save_new(report)
        return {"report_id": report["report_id"]}

    @app.get("/reports")
    async def list_reports():
        return store.list_reports()

    @app.get("/reports/{report_id}")
    async def get_report(report_id: str):
        return report_response(store.load(report_id))

    @app.post("/reports/{report_id}/reanalyze")
    async def reanalyze(report_id: str, request: Request):
        try:
            raw = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return JSONResponse({"message": f"thresholds body is not JSON: {exc}"}, 400)
        new_thresholds = thresholds_from_dict(raw)
        return report_response(reanalyze_report(store, report_id, new_thresholds))

    @app.get("/reports/{report_id}/alignment.svg")
    async def alignment_svg(report_id: str):
        return Response(render_alignment_svg(store.load(report_id)), media_type="image/svg+xml")

    @app.post("/reports/{report_id}/verdicts")
    async def post_verdict(report_id: str, request: Request):
        try:
            raw = json.loads(await request.body())
            event_id = str(raw["event_id"])
            verdict = str(raw["verdict"])
            annotator = str(raw.get("annotator", "anonymous"))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            return JSONResponse({"message": f"bad verdict body: {exc}"}, 400)
        try:
            return report_response(record_verdict(store, report_id, event_id, verdict, annotator))
        except ValueError as exc:
            return JSONResponse({"message": str(exc)}, 400)

    return app


def http_serve(cfg: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(cfg), host=cfg.host, port=cfg.port)
