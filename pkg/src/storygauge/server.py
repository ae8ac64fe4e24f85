"""REST API for training and scoring.

Endpoints (JSON unless noted):

* ``POST /projects/{id}/train`` — multipart upload, field ``csv``; answers
  202 with the version that will become active, training runs in the
  background under a per-project single-writer lock.
* ``GET /projects/{id}/train/status`` — {status: pending|ready|failed}.
* ``POST /projects/{id}/score`` — body ``{"text": ...}`` or
  ``{"patterns": {...}}``; answers the quality report.
* ``GET /projects/{id}/percentiles`` — frozen quartiles per metric.
* ``GET /health`` — loaded projects and bundle versions.

Error responses always carry a machine code from the closed set:
``invalid_request``, ``empty_text``, ``project_not_found``,
``training_in_progress``, ``training_conflict``, ``malformed_csv``,
``store_error``. Configuration via environment: ``STORYGAUGE_STORE`` (bundle
directory), ``STORYGAUGE_CORS_ORIGIN`` (allowed UI origin), and
``STORYGAUGE_LISTEN`` (``host:port`` for the standalone server).

Scoring requests read an immutable bundle snapshot, so any number of them
can run during a retrain; the bundle swap is atomic.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field

from fastapi import Body, FastAPI, File, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import pipeline
from .corpus import UserStory, clean_text, import_csv
from .errors import (
    BundleMissing,
    EmptyBacklog,
    MalformedCsv,
    MissingColumn,
)
from .interpret import METRIC_DESCRIPTIONS
from .metrics import Metric


class ApiError(Exception):
    """HTTP error with a machine code from the documented closed set."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class TrainingState:
    status: str  # pending | ready | failed
    version: int
    error: str | None = None


@dataclass
class ProjectRegistry:
    """In-memory view of the bundle store plus training bookkeeping."""

    store: str
    bundles: dict[str, pipeline.ModelBundle] = field(default_factory=dict)
    training: dict[str, TrainingState] = field(default_factory=dict)
    locks: dict[str, threading.Lock] = field(default_factory=dict)
    mutex: threading.Lock = field(default_factory=threading.Lock)

    def lock_for(self, project_id: str) -> threading.Lock:
        with self.mutex:
            return self.locks.setdefault(project_id, threading.Lock())

    def get_bundle(self, project_id: str) -> pipeline.ModelBundle | None:
        bundle = self.bundles.get(project_id)
        if bundle is not None:
            return bundle
        try:
            bundle = pipeline.load_bundle(project_id, self.store)
        except BundleMissing:
            return None
        self.bundles[project_id] = bundle
        return bundle

    def known_projects(self) -> dict[str, int]:
        projects = {pid: b.bundle_version for pid, b in self.bundles.items()}
        store_root = os.path.join(self.store, "projects")
        if os.path.isdir(store_root):
            for name in sorted(os.listdir(store_root)):
                if name in projects:
                    continue
                versions = pipeline.list_versions(name, self.store)
                if versions:
                    projects[name] = versions[-1]
        return projects


def _story_from_patterns(patterns: dict) -> UserStory:
    def text_of(key: str) -> str:
        value = patterns.get(key, "")
        return clean_text(value) if isinstance(value, str) else ""

    def list_of(key: str) -> list[str]:
        value = patterns.get(key, [])
        if isinstance(value, str):
            value = [value]
        return [clean_text(v) for v in value if isinstance(v, str) and v.strip()]

    story = UserStory(
        id="adhoc",
        title=text_of("title"),
        persona=text_of("persona"),
        what=text_of("what"),
        why=text_of("why"),
        acceptance_criteria=list_of("acceptance_criteria"),
        attachments=list_of("attachments"),
    )
    story.raw_text = clean_text(
        " ".join(
            part
            for part in (
                story.title,
                story.persona,
                story.what,
                story.why,
                " ".join(story.acceptance_criteria),
                " ".join(story.attachments),
            )
            if part
        )
    )
    return story


def create_app(store: str | None = None, cors_origin: str | None = None) -> FastAPI:
    store = store or os.environ.get("STORYGAUGE_STORE", "./storygauge_store")
    cors_origin = cors_origin or os.environ.get("STORYGAUGE_CORS_ORIGIN", "*")
    app = FastAPI(title="storygauge", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origin] if cors_origin != "*" else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    registry = ProjectRegistry(store=store)
    app.state.registry = registry

    @app.exception_handler(ApiError)
    async def handle_api_error(_: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(_: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"error": {"code": "invalid_request", "message": str(exc)}},
        )

    def require_bundle(project_id: str) -> pipeline.ModelBundle:
        bundle = registry.get_bundle(project_id)
        if bundle is not None:
            return bundle
        state = registry.training.get(project_id)
        if state is not None and state.status == "pending":
            raise ApiError(
                503,
                "training_in_progress",
                f"project {project_id!r} is still training its first bundle",
            )
        raise ApiError(404, "project_not_found", f"unknown project: {project_id!r}")

    @app.get("/health")
    async def health():
        return {"status": "ok", "projects": registry.known_projects()}

    @app.post("/projects/{project_id}/score")
    async def score(project_id: str, payload: dict = Body(...)):
        bundle = require_bundle(project_id)
        if "text" in payload:
            text = payload.get("text")
            if not isinstance(text, str) or not clean_text(text):
                raise ApiError(422, "empty_text", "text must be non-empty")
            report = pipeline.score(bundle, text)
        elif "patterns" in payload and isinstance(payload["patterns"], dict):
            story = _story_from_patterns(payload["patterns"])
            if not story.raw_text:
                raise ApiError(422, "empty_text", "patterns carry no text")
            report = pipeline.score(bundle, story)
        else:
            raise ApiError(
                422, "invalid_request", "body must contain 'text' or 'patterns'"
            )
        return report.to_dict()

    @app.post("/projects/{project_id}/train", status_code=202)
    async def train(project_id: str, csv: UploadFile = File(...)):
        data = await csv.read()
        try:
            backlog = import_csv(data, project_id=project_id)
        except MissingColumn as exc:
            raise ApiError(400, "malformed_csv", str(exc)) from exc
        except MalformedCsv as exc:
            raise ApiError(400, "malformed_csv", str(exc)) from exc
        except EmptyBacklog as exc:
            raise ApiError(400, "malformed_csv", str(exc)) from exc

        lock = registry.lock_for(project_id)
        if not lock.acquire(blocking=False):
            raise ApiError(
                409,
                "training_conflict",
                f"training already running for project {project_id!r}",
            )
        versions = pipeline.list_versions(project_id, registry.store)
        next_version = (versions[-1] + 1) if versions else 1
        registry.training[project_id] = TrainingState("pending", next_version)

        def run():
            try:
                bundle = pipeline.train(backlog)
                saved = pipeline.save_bundle(bundle, registry.store)
                registry.bundles[project_id] = saved
                registry.training[project_id] = TrainingState(
                    "ready", saved.bundle_version
                )
            except Exception as exc:  # report through the status endpoint
                registry.training[project_id] = TrainingState(
                    "failed", next_version, error=str(exc)
                )
            finally:
                lock.release()

        threading.Thread(target=run, daemon=True).start()
        return {"bundle_version": next_version, "status": "pending"}

    @app.get("/projects/{project_id}/train/status")
    async def train_status(project_id: str):
        state = registry.training.get(project_id)
        if state is None:
            bundle = registry.get_bundle(project_id)
            if bundle is None:
                raise ApiError(
                    404, "project_not_found", f"unknown project: {project_id!r}"
                )
            return {"status": "ready", "bundle_version": bundle.bundle_version}
        body = {"status": state.status, "bundle_version": state.version}
        if state.error:
            body["error"] = state.error
        return body

    @app.get("/projects/{project_id}/percentiles")
    async def percentiles(project_id: str):
        bundle = require_bundle(project_id)
        bands = bundle.bands.to_dict()
        for metric in Metric:
            bands[metric.value]["description"] = METRIC_DESCRIPTIONS[metric]
        return {
            "project_id": project_id,
            "bundle_version": bundle.bundle_version,
            "bands": bands,
        }

    return app


def run_server(host: str | None = None, port: int | None = None,
               store: str | None = None, cors_origin: str | None = None):
    import uvicorn

    listen = os.environ.get("STORYGAUGE_LISTEN", "127.0.0.1:8000")
    default_host, _, default_port = listen.rpartition(":")
    uvicorn.run(
        create_app(store, cors_origin),
        host=host or default_host or "127.0.0.1",
        port=port if port is not None else int(default_port),
    )
