"""HTTP/JSON measurement-session service.

Endpoints (all JSON, schema_version in every body):
  POST /sessions                      create a session from a config mapping
  GET  /sessions/{id}/suggestion      next point to measure (idempotent)
  POST /sessions/{id}/measurements    ingest one operator measurement
  GET  /sessions/{id}/state           full field map + measurement log
  GET  /sessions/{id}/metrics         metric curve (needs attached truth)

Within one session mutations are mutually exclusive: a second concurrent
POST is rejected with 409, never queued.
"""

from __future__ import annotations

import math
import os

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import metrics as metrics_mod
from .errors import (DuplicateMeasurement, Exhausted, LsemapError,
                     OffGridIndex, UnknownSession, ValueNotFinite)
from .runconfig import SCHEMA_VERSION
from .store import LiveSession, SessionStore

DEFAULT_PORT = 8787
LABEL_CHARS = {metrics_mod.LABEL_UPPER: "U", metrics_mod.LABEL_LOWER: "L",
               metrics_mod.LABEL_UNDETERMINED: "C"}


def _error(status: int, kind: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={
        "schema_version": SCHEMA_VERSION, "error": kind, "detail": detail})


def _suggestion_body(live: LiveSession) -> dict:
    state = live.state
    body = {
        "schema_version": SCHEMA_VERSION,
        "session_id": live.session_id,
        "step": state.t,
        "status": state.status,
        "converged": state.converged,
        "index": state.suggestion,
        "position_mm": None,
        "straddle": None,
        "mean": None,
        "sd": None,
    }
    if state.suggestion is not None:
        idx = state.suggestion
        body["position_mm"] = list(state.domain.point_at(idx))
        if state.grid_mu is not None:
            mu = float(state.grid_mu[idx])
            sd = float(state.grid_sd[idx])
            body["mean"] = mu
            body["sd"] = sd
            body["straddle"] = 1.96 * sd - abs(mu - state.config.theta)
    return body


def _summary_body(live: LiveSession) -> dict:
    state = live.state
    upper, lower, undetermined = state.partition.counts()
    return {
        "schema_version": SCHEMA_VERSION,
        "session_id": live.session_id,
        "step": state.t,
        "n_measured": len(state.measured_indices),
        "counts": {"upper": upper, "lower": lower, "undetermined": undetermined},
        "converged": state.converged,
        "status": state.status,
    }


def create_app(data_dir=None) -> FastAPI:
    data_dir = data_dir or os.environ.get("LSEMAP_DATA_DIR", "lsemap-sessions")
    store = SessionStore(data_dir)
    app = FastAPI(title="lsemap session service")
    app.state.store = store

    @app.post("/sessions", status_code=201)
    def create_session(config: dict = Body(...)):
        try:
            live = store.create(config)
        except LsemapError as exc:
            return _error(422, type(exc).__name__, str(exc))
        body = _summary_body(live)
        body["config"] = live.spec.resolved
        return body

    def _get(session_id: str) -> LiveSession:
        return store.get(session_id)

    @app.get("/sessions/{session_id}/suggestion")
    def get_suggestion(session_id: str):
        try:
            live = _get(session_id)
        except UnknownSession as exc:
            return _error(404, "UnknownSession", str(exc))
        with live.lock:
            return _suggestion_body(live)

    @app.post("/sessions/{session_id}/measurements")
    def post_measurement(session_id: str, payload: dict = Body(...)):
        try:
            live = _get(session_id)
        except UnknownSession as exc:
            return _error(404, "UnknownSession", str(exc))
        if "index" not in payload or "value" not in payload:
            return _error(422, "InvalidConfig", "payload needs 'index' and 'value'")
        try:
            index = int(payload["index"])
            value = float(payload["value"])
        except (TypeError, ValueError):
            return _error(422, "InvalidConfig", "index must be int, value numeric")
        if not math.isfinite(value):
            return _error(422, "ValueNotFinite", f"value {value} is not finite")

        if not live.lock.acquire(blocking=False):
            return _error(409, "ConflictingConcurrentPost",
                          "another mutation is in flight for this session")
        try:
            suggestion = live.state.suggestion
            deviated = suggestion is not None and index != suggestion
            try:
                live.state.ingest(index, value)
            except DuplicateMeasurement as exc:
                return _error(409, "DuplicateMeasurement", str(exc))
            except OffGridIndex as exc:
                return _error(422, "OffGridIndex", str(exc))
            except ValueNotFinite as exc:
                return _error(422, "ValueNotFinite", str(exc))
            except Exhausted as exc:
                return _error(409, "SessionComplete", str(exc))
            live.append_measurement(index, value, deviated)
            return _summary_body(live)
        finally:
            live.lock.release()

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        try:
            live = _get(session_id)
        except UnknownSession as exc:
            return _error(404, "UnknownSession", str(exc))
        with live.lock:
            state = live.state
            n = state.domain.n_points
            mu = state.grid_mu.tolist() if state.grid_mu is not None else [None] * n
            sd = state.grid_sd.tolist() if state.grid_sd is not None else [None] * n
            body = _summary_body(live)
            body.update({
                "grid": {
                    "nx": state.domain.counts[0],
                    "ny": state.domain.counts[1],
                    "spacing_mm": list(state.domain.spacing),
                    "origin_mm": list(state.domain.origin),
                },
                "theta": state.config.theta,
                "epsilon": state.config.epsilon,
                "labels": "".join(LABEL_CHARS[v] for v in state.partition.labels),
                "mean": mu,
                "sd": sd,
                "suggestion": state.suggestion,
                "measurements": [
                    {"step": r.step, "index": r.index, "value": r.value,
                     "deviated": r.deviated}
                    for r in state.log
                ],
            })
            return body

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        try:
            live = _get(session_id)
        except UnknownSession as exc:
            return _error(404, "UnknownSession", str(exc))
        if live.spec.truth is None:
            return _error(409, "NoGroundTruth",
                          "session was created without a ground-truth grid")
        with live.lock:
            rows = [
                [r.step, r.n_measured, r.sens_risk, r.spec_risk, r.f1_risk,
                 r.auc_risk, r.sens_cost, r.spec_cost, r.f1_cost, r.auc_cost]
                for r in live.metric_rows
            ]
            return {
                "schema_version": SCHEMA_VERSION,
                "session_id": live.session_id,
                "header": metrics_mod.METRIC_CSV_HEADER.split(","),
                "rows": rows,
            }

    frontend_dist = os.environ.get("LSEMAP_FRONTEND_DIST")
    if frontend_dist and os.path.isdir(frontend_dist):
        app.mount("/", StaticFiles(directory=frontend_dist, html=True), name="ui")
    return app


def main(port: int | None = None, data_dir=None, host: str = "127.0.0.1") -> None:
    import uvicorn

    port = port or int(os.environ.get("LSEMAP_PORT", DEFAULT_PORT))
    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="warning")
