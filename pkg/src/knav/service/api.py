"""HTTP surface over run artifacts, consumed by the CLI tests and the browser UI."""

from __future__ import annotations

import logging
import threading
from collections import defaultdict

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..errors import (
    ConfigError,
    KnavError,
    NotFoundError,
    PipelineStageError,
    PreconditionError,
    ValidationError,
)
from .artifact import RunArtifact, RunConfig, RunStore
from .pipeline import expand_in_run, run_pipeline

log = logging.getLogger(__name__)


def _http_status(exc: KnavError) -> int:
    if isinstance(exc, NotFoundError):
        return 404
    if isinstance(exc, PreconditionError):
        return 409
    if isinstance(exc, (ConfigError, ValidationError)):
        return 400
    return 500


def create_app(runs_dir: str, sync_runs: bool = False) -> FastAPI:
    """Build the API app.

    ``sync_runs=True`` executes pipelines inside the request (used by tests);
    otherwise a daemon thread runs them and clients poll GET /api/runs/{id}.
    """
    app = FastAPI(title="knav")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = RunStore(runs_dir)
    run_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)

    @app.exception_handler(KnavError)
    async def knav_error_handler(_request: Request, exc: KnavError):
        return JSONResponse(status_code=_http_status(exc), content={"error": str(exc)})

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/runs")
    def list_runs():
        return store.list_runs()

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str):
        return store.load(run_id, validate=False).to_dict()

    @app.post("/api/runs")
    async def create_run(request: Request):
        body = await request.json()
        wait = bool(body.pop("wait", False)) or sync_runs
        config = RunConfig.from_dict(body)
        config.validate()
        artifact = RunArtifact.new(config)
        store.save(artifact)

        def execute():
            try:
                run_pipeline(config, store=store, run_id=artifact.run_id)
            except PipelineStageError as exc:
                log.warning("run %s failed: %s", artifact.run_id, exc)

        if wait:
            execute()
        else:
            threading.Thread(target=execute, daemon=True).start()
        return {"run_id": artifact.run_id}

    @app.post("/api/runs/{run_id}/clusters/{cluster_id}/expand")
    async def expand(run_id: str, cluster_id: int, request: Request):
        raw = await request.body()
        body = await request.json() if raw else {}
        k = body.get("k")
        with run_locks[run_id]:
            artifact = expand_in_run(store, run_id, cluster_id, k=k)
        return artifact.expansions[cluster_id] | {"cluster_id": cluster_id}

    return app
