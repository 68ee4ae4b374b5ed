"""Local HTTP API exposing the pipeline phases as resources.

Datasets are uploaded once and addressed by content hash; experiments run as
jobs on a bounded FIFO worker pool and publish progress as an incremental
event stream.  Everything lives in memory plus a working directory — the
service is a localhost companion for the web UI and scripts, not a
multi-tenant server.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from fastapi import Body, FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import JSONResponse, PlainTextResponse

from preflearn import __version__
from preflearn.dataset import DatasetError, extract_pairs, parse_dual_file, parse_single_file
from preflearn.experiment import (
    ExperimentConfig,
    ExperimentError,
    ProgressEvent,
    Report,
    _parser_options_from_json,
    _parser_options_to_json,
    run_experiment,
)
from preflearn.parameters import parameter_catalog
from preflearn.preprocess import compute_stats

QUEUED = "queued"
RUNNING = "running"
DONE = "done"
FAILED = "failed"
CANCELLED = "cancelled"
TERMINAL = (DONE, FAILED, CANCELLED)


@dataclass
class DatasetEntry:
    dataset_id: str
    kind: str  # "single_file" | "dual_file"
    objects_path: str
    orders_path: str | None
    options: dict
    schema: list
    stats: dict
    counts: dict


class JobRecord:
    """One experiment job; all mutation happens under the condition lock."""

    def __init__(self, job_id: str, config: ExperimentConfig) -> None:
        self.job_id = job_id
        self.config = config
        self.cond = threading.Condition()
        self.state = QUEUED
        self.phase: str | None = None
        self.percent = 0.0
        self.log: list[str] = []
        self.events: list[dict] = []
        self.report: Report | None = None
        self.error: str | None = None
        self.cancel_requested = False

    # -- mutation ----------------------------------------------------------

    def _append_event(self, doc: dict) -> None:
        doc["seq"] = len(self.events)
        self.events.append(doc)
        self.cond.notify_all()

    def on_event(self, event: ProgressEvent) -> None:
        with self.cond:
            if self.state in TERMINAL:
                return
            self.phase = event.phase
            self.percent = event.percent
            if event.message is not None:
                self.log.append(f"[{event.phase}] {event.message}")
            self._append_event(
                {
                    "state": self.state,
                    "phase": event.phase,
                    "phase_index": event.phase_index,
                    "percent": event.percent,
                    "message": event.message,
                }
            )

    def mark_running(self) -> None:
        with self.cond:
            if self.state == QUEUED:
                self.state = RUNNING
                self._append_event({"state": RUNNING, "message": "started"})

    def finish(self, state: str, report: Report | None, error: str | None) -> None:
        with self.cond:
            if self.state in TERMINAL:  # exactly-once terminal transition
                return
            self.state = state
            self.report = report
            self.error = error
            if error is not None:
                self.log.append(error)
            self._append_event({"state": state, "message": error})

    def request_cancel(self) -> None:
        with self.cond:
            if self.state in TERMINAL:
                raise HTTPException(409, f"job {self.job_id} already {self.state}")
            self.cancel_requested = True

    # -- views -------------------------------------------------------------

    def view(self) -> dict:
        with self.cond:
            return {
                "job_id": self.job_id,
                "state": self.state,
                "phase": self.phase,
                "percent": self.percent,
                "log": self.log[-20:],
                "error": self.error,
            }

    def events_since(self, since: int, timeout_s: float) -> list[dict]:
        """Events with seq > since, long-polling until one arrives."""
        with self.cond:
            if since >= len(self.events) - 1 and self.state not in TERMINAL:
                self.cond.wait_for(
                    lambda: len(self.events) - 1 > since or self.state in TERMINAL,
                    timeout=timeout_s,
                )
            return [dict(e) for e in self.events if e["seq"] > since]


class ServiceState:
    def __init__(self, workdir: str, workers: int) -> None:
        self.workdir = Path(workdir)
        self.datasets: dict[str, DatasetEntry] = {}
        self.jobs: dict[str, JobRecord] = {}
        self.lock = threading.Lock()
        self.pool = ThreadPoolExecutor(max_workers=workers)

    def dataset(self, dataset_id: str) -> DatasetEntry:
        with self.lock:
            entry = self.datasets.get(dataset_id)
        if entry is None:
            raise HTTPException(404, f"unknown dataset {dataset_id!r}")
        return entry

    def job(self, job_id: str) -> JobRecord:
        with self.lock:
            job = self.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job {job_id!r}")
        return job


def _schema_json(table) -> list:
    out = []
    for feature in table.schema.features:
        kind = type(feature.kind).__name__.lower()
        entry = {"name": feature.name, "kind": kind}
        if kind == "nominal":
            entry["categories"] = list(feature.kind.categories)
        out.append(entry)
    return out


def _run_job(job: JobRecord) -> None:
    job.mark_running()
    if job.cancel_requested:
        job.finish(CANCELLED, None, "cancelled before start")
        return
    try:
        report = run_experiment(
            job.config,
            on_event=job.on_event,
            should_cancel=lambda: job.cancel_requested,
        )
        if report.status == "cancelled":
            job.finish(CANCELLED, report, report.error)
        else:
            job.finish(DONE, report, None)
    except ExperimentError as exc:
        job.finish(FAILED, exc.report, str(exc))
    except Exception as exc:  # pragma: no cover - defensive: keep the pool alive
        job.finish(FAILED, None, f"internal error: {exc}")


def create_app(
    workdir: str | None = None,
    workers: int | None = None,
    poll_timeout_s: float = 25.0,
) -> FastAPI:
    """Build the service; one app instance owns one working directory."""
    if workdir is None:
        workdir = tempfile.mkdtemp(prefix="preflearn-")
    state = ServiceState(workdir, workers or os.cpu_count() or 2)
    (state.workdir / "datasets").mkdir(parents=True, exist_ok=True)
    (state.workdir / "jobs").mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="preflearn service", version=__version__)
    app.state.service = state

    @app.exception_handler(ValueError)
    def _value_error(request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    # ---------------------------------------------------------------- datasets

    @app.post("/datasets")
    def upload_dataset(
        objects: UploadFile = File(...),
        orders: Optional[UploadFile] = File(None),
        options: str = Form("{}"),
    ) -> dict:
        try:
            options_doc = json.loads(options)
        except json.JSONDecodeError as exc:
            raise HTTPException(400, f"options: invalid JSON at byte {exc.pos}")
        opts = _parser_options_from_json(options_doc)

        objects_bytes = objects.file.read()
        orders_bytes = orders.file.read() if orders is not None else None
        digest = hashlib.sha256()
        digest.update(objects_bytes)
        if orders_bytes is not None:
            digest.update(b"\x00orders\x00")
            digest.update(orders_bytes)
        dataset_id = digest.hexdigest()[:16]

        # parse now so upload feedback carries line-numbered validation errors
        if orders_bytes is None:
            kind = "single_file"
            table, order_set = parse_single_file(objects_bytes, opts)
        else:
            kind = "dual_file"
            table, order_set = parse_dual_file(objects_bytes, orders_bytes, opts)
        pairs = extract_pairs(order_set, opts.higher_is_better)

        dataset_dir = state.workdir / "datasets" / dataset_id
        dataset_dir.mkdir(parents=True, exist_ok=True)
        objects_path = dataset_dir / "objects.csv"
        objects_path.write_bytes(objects_bytes)
        orders_path = None
        if orders_bytes is not None:
            orders_path = dataset_dir / "orders.csv"
            orders_path.write_bytes(orders_bytes)

        entry = DatasetEntry(
            dataset_id=dataset_id,
            kind=kind,
            objects_path=str(objects_path),
            orders_path=None if orders_path is None else str(orders_path),
            options=_parser_options_to_json(opts),
            schema=_schema_json(table),
            stats=compute_stats(table).to_json(),
            counts={
                "objects": len(table.ids),
                "orders": len(order_set),
                "pairs": len(pairs),
            },
        )
        with state.lock:
            state.datasets[dataset_id] = entry  # idempotent by content hash
        return {
            "dataset_id": dataset_id,
            "kind": kind,
            "schema": entry.schema,
            "stats": entry.stats,
            "counts": entry.counts,
        }

    @app.get("/datasets/{dataset_id}/stats")
    def dataset_stats(dataset_id: str) -> dict:
        entry = state.dataset(dataset_id)
        return {
            "dataset_id": entry.dataset_id,
            "kind": entry.kind,
            "schema": entry.schema,
            "stats": entry.stats,
            "counts": entry.counts,
        }

    # ------------------------------------------------------------- experiments

    def _resolve_config(doc: dict) -> ExperimentConfig:
        if not isinstance(doc, dict):
            raise HTTPException(400, "config must be a JSON object")
        doc = json.loads(json.dumps(doc))  # private copy
        dataset = doc.get("dataset")
        if isinstance(dataset, dict) and dataset.get("kind") == "uploaded":
            dataset_id = dataset.get("dataset_id")
            with state.lock:
                entry = state.datasets.get(dataset_id)
            if entry is None:
                raise HTTPException(
                    400, f"config field 'dataset': unknown dataset {dataset_id!r}"
                )
            options = dataset.get("options", entry.options)
            if entry.kind == "single_file":
                doc["dataset"] = {
                    "kind": "single_file",
                    "path": entry.objects_path,
                    "options": options,
                }
            else:
                doc["dataset"] = {
                    "kind": "dual_file",
                    "objects_path": entry.objects_path,
                    "orders_path": entry.orders_path,
                    "options": options,
                }
        try:
            config = ExperimentConfig.from_json(doc)
        except ExperimentError as exc:
            raise HTTPException(400, str(exc))
        return config

    @app.post("/experiments")
    def submit_experiment(config: dict = Body(...)) -> dict:
        parsed = _resolve_config(config)
        job_id = uuid.uuid4().hex[:12]
        job_dir = state.workdir / "jobs" / job_id
        job_dir.mkdir(parents=True, exist_ok=True)
        parsed = replace(
            parsed,
            report_path=str(job_dir / "report.json"),
            model_path=str(job_dir / "model.json"),
        )
        job = JobRecord(job_id, parsed)
        with state.lock:
            state.jobs[job_id] = job
        state.pool.submit(_run_job, job)  # FIFO queue
        return {"job_id": job_id}

    @app.get("/experiments/{job_id}")
    def job_status(job_id: str) -> dict:
        return state.job(job_id).view()

    @app.get("/experiments/{job_id}/report")
    def job_report(job_id: str) -> dict:
        job = state.job(job_id)
        with job.cond:
            if job.state != DONE or job.report is None:
                raise HTTPException(404, f"job {job_id} has no finished report")
            return job.report.to_json()

    @app.get("/experiments/{job_id}/model")
    def job_model(job_id: str):
        job = state.job(job_id)
        with job.cond:
            done = job.state == DONE
        model_path = Path(job.config.model_path)
        if not done or not model_path.exists():
            raise HTTPException(404, f"job {job_id} has no model")
        return JSONResponse(
            content=json.loads(model_path.read_text(encoding="utf-8")),
            headers={
                "Content-Disposition": f'attachment; filename="{job_id}-model.json"'
            },
        )

    @app.post("/experiments/{job_id}/cancel")
    def job_cancel(job_id: str) -> dict:
        job = state.job(job_id)
        job.request_cancel()
        return {"job_id": job_id, "cancel_requested": True}

    @app.get("/experiments/{job_id}/events")
    def job_events(job_id: str, since: int = -1) -> PlainTextResponse:
        job = state.job(job_id)
        events = job.events_since(since, poll_timeout_s)
        body = "".join(json.dumps(e, separators=(",", ":")) + "\n" for e in events)
        return PlainTextResponse(body, media_type="application/x-ndjson")

    # -------------------------------------------------------------------- meta

    @app.get("/meta/parameters")
    def meta_parameters() -> dict:
        return parameter_catalog()

    @app.get("/meta/version")
    def meta_version() -> dict:
        return {"version": __version__}

    return app
