"""FastAPI service exposing the analysis pipeline to multiple clients.

Signal inputs arrive as multipart file uploads (WAV or CSV); reports are
returned as the same canonical JSON bytes the CLI writes, so a report is
byte-identical no matter which surface produced it.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import math
import zipfile

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse, Response

import boltscope
from boltscope.classify import alarm as alarm_check
from boltscope.classify import classify as classify_features
from boltscope.classify import load_reference_table
from boltscope.config import AnalysisConfig
from boltscope.errors import BoltscopeError
from boltscope.excitation import render
from boltscope.features import HarmonicRatio, RatioTable
from boltscope.jointsim import (
    JointModel,
    SimConfig,
    TUNED_FREQ_HZ,
    default_protocol,
    preload_to_params,
    run_protocol,
)
from boltscope.report import analyze_series, input_metadata
from boltscope.service import schemas
from boltscope.sigio import (
    csv_bytes,
    dataset_filename,
    dataset_manifest,
    ingest_bytes,
    select_channel,
    wav_bytes,
)


def _series_from_upload(upload: UploadFile, data: bytes, channel: str | None):
    name = upload.filename or "upload.wav"
    series = ingest_bytes(data, name)
    ts = select_channel(series, channel)
    meta = input_metadata(ts, path=None)
    meta["path"] = name
    meta["sha256"] = hashlib.sha256(data).hexdigest()
    return ts, meta


def _parse_config(config_json: str | None) -> AnalysisConfig:
    if not config_json:
        return AnalysisConfig()
    return AnalysisConfig.from_dict(json.loads(config_json))


def _parse_table(table_json: str | None) -> RatioTable:
    if not table_json:
        return load_reference_table()
    return RatioTable.from_dict(json.loads(table_json))


def _classification_payload(ratios, table, threshold_db) -> schemas.ClassifyResponse:
    result = classify_features(ratios, table)
    alarmed = alarm_check(ratios, table, threshold_db)
    return schemas.ClassifyResponse(
        classification=schemas.ClassificationOut(
            state=result.state.value,
            torque_nm=result.state.torque_nm,
            margin_db=result.margin_db,
            per_l_distance={str(l): d for l, d in result.per_l_distance.items()},
        ),
        alarm=alarmed,
        verdict="alarm" if alarmed else "tight",
        table_id=table.table_id,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="boltscope",
        description="Vibro-acoustic bolt preload analysis service",
        version=boltscope.__version__,
    )

    @app.exception_handler(BoltscopeError)
    async def _domain_error(request: Request, exc: BoltscopeError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=boltscope.__version__)

    @app.get("/v1/reference-table")
    def reference_table():
        return load_reference_table().to_dict()

    @app.get("/v1/default-config")
    def default_config():
        return AnalysisConfig().to_dict()

    @app.post("/v1/generate", response_model=schemas.GenerateResponse)
    def generate(req: schemas.GenerateRequest):
        spec = req.spec.to_spec()
        ts = render(spec, req.sample_rate)
        content = wav_bytes(ts) if req.format == "wav" else csv_bytes(ts)
        return schemas.GenerateResponse(
            format=req.format,
            sample_rate=ts.sample_rate,
            n_samples=ts.n_samples,
            duration_s=ts.duration,
            derived=spec.derived(),
            content_base64=base64.b64encode(content).decode("ascii"),
        )

    @app.post("/v1/simulate")
    def simulate(req: schemas.SimulateRequest):
        model_kwargs = req.model.model_dump()
        if model_kwargs.get("modal_stiffness") is None:
            model_kwargs["modal_stiffness"] = (
                (2 * math.pi * TUNED_FREQ_HZ) ** 2 * model_kwargs["modal_mass"]
            )
        base = JointModel(**model_kwargs)
        cfg = SimConfig(**req.sim.model_dump())
        protocol = (
            [s.to_spec() for s in req.protocol]
            if req.protocol is not None
            else default_protocol()
        )
        records = []
        for p in req.preload_fractions:
            model = preload_to_params(p, base)
            for seed in req.seeds:
                records.extend(
                    run_protocol(model, protocol, cfg, req.excitation_sample_rate, seed=seed)
                )
        manifest = dataset_manifest(
            records,
            model_info={k: v for k, v in model_kwargs.items()},
            sim_info=req.sim.model_dump(),
        )
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
            for i, rec in enumerate(records):
                zf.writestr(dataset_filename(i, rec), wav_bytes(rec.response))
            zf.writestr("manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return Response(
            content=buf.getvalue(),
            media_type="application/zip",
            headers={"Content-Disposition": 'attachment; filename="dataset.zip"'},
        )

    @app.post("/v1/analyze")
    async def analyze(
        file: UploadFile = File(...),
        config: str | None = Form(default=None),
        channel: str | None = Form(default=None),
        classify: bool = Form(default=False),
        table: str | None = Form(default=None),
    ):
        cfg = _parse_config(config)
        data = await file.read()
        ts, meta = _series_from_upload(file, data, channel)
        ratio_table = _parse_table(table) if (classify or table) else None
        report = analyze_series(ts, cfg, table=ratio_table, input_meta=meta)
        return Response(content=report.to_json(), media_type="application/json")

    @app.post("/v1/compare")
    async def compare(
        file: UploadFile = File(...),
        reference: UploadFile = File(...),
        config: str | None = Form(default=None),
        channel: str | None = Form(default=None),
    ):
        cfg = _parse_config(config)
        data = await file.read()
        ref_data = await reference.read()
        ts, meta = _series_from_upload(file, data, channel)
        ref_ts, ref_meta = _series_from_upload(reference, ref_data, channel)
        report = analyze_series(
            ts, cfg, reference=ref_ts, input_meta=meta, reference_meta=ref_meta
        )
        return Response(content=report.to_json(), media_type="application/json")

    @app.post("/v1/classify", response_model=schemas.ClassifyResponse)
    def classify_endpoint(req: schemas.ClassifyRequest):
        table = _parse_table(json.dumps(req.table) if req.table is not None else None)
        ratios = [HarmonicRatio(r.l, r.value_db, r.channel) for r in req.ratios]
        return _classification_payload(ratios, table, req.threshold_db)

    @app.post("/v1/classify-signal", response_model=schemas.ClassifyResponse)
    async def classify_signal(
        file: UploadFile = File(...),
        config: str | None = Form(default=None),
        channel: str | None = Form(default=None),
        threshold_db: float = Form(default=6.0),
        table: str | None = Form(default=None),
    ):
        cfg = _parse_config(config)
        data = await file.read()
        ts, meta = _series_from_upload(file, data, channel)
        ratio_table = _parse_table(table)
        report = analyze_series(ts, cfg, table=ratio_table, input_meta=meta)
        return _classification_payload(report.ratios, ratio_table, threshold_db)

    return app
