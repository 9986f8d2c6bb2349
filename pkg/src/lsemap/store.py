"""On-disk session persistence: one append-only JSON-lines log per session
plus periodic full snapshots. Replaying the log through the engine is the
source of truth for crash recovery; snapshots exist for inspection.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from .engine import SessionState
from .errors import UnknownSession
from .runconfig import SCHEMA_VERSION, RunSpec, build_run_spec

SNAPSHOT_EVERY = 25


@dataclass
class LiveSession:
    """One in-memory session plus its persistence handles."""

    session_id: str
    spec: RunSpec
    state: SessionState
    log_path: Path
    snap_path: Path
    lock: threading.Lock = field(default_factory=threading.Lock)
    metric_rows: list = field(default_factory=list)

    def record_metrics(self) -> None:
        """Append the current step's metric row (no-op without truth)."""
        if self.spec.truth is None:
            return
        state = self.state
        truth = self.spec.truth.truth_positive(state.config.theta)
        mu = (state.grid_mu if state.grid_mu is not None
              else np.zeros(state.domain.n_points))
        self.metric_rows.append(metrics_mod.metric_row(
            state.t, len(state.measured_indices), state.partition.labels, mu, truth))

    def append_measurement(self, index: int, value: float, deviated: bool) -> None:
        event = {
            "event": "measured",
            "index": int(index),
            "value": float(value),
            "deviated": bool(deviated),
            "ts": datetime.now(timezone.utc).isoformat(),
        }
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")
        self.record_metrics()
        if self.state.t % SNAPSHOT_EVERY == 0:
            self.write_snapshot()

    def write_snapshot(self) -> None:
        snap = {
            "schema_version": SCHEMA_VERSION,
            "session_id": self.session_id,
            "step": self.state.t,
            "n_measured": len(self.state.measured_indices),
            "labels": self.state.partition.labels.tolist(),
            "status": self.state.status,
        }
        tmp = self.snap_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(snap, fh)
        os.replace(tmp, self.snap_path)


class SessionStore:
    """Creates, caches, and replays sessions under one data directory."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, LiveSession] = {}
        self._registry_lock = threading.Lock()

    def _paths(self, session_id: str) -> tuple[Path, Path]:
        return (self.data_dir / f"{session_id}.jsonl",
                self.data_dir / f"{session_id}.snap.json")

    def create(self, config_mapping: dict) -> LiveSession:
        spec = build_run_spec(config_mapping, origin="<session config>")
        session_id = uuid.uuid4().hex
        state = spec.new_session()
        log_path, snap_path = self._paths(session_id)
        created = {
            "event": "created",
            "schema_version": SCHEMA_VERSION,
            "session_id": session_id,
            "config": dict(config_mapping),
            "ts": datetime.now(timezone.utc).isoformat(),
        }
        with open(log_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(created) + "\n")
        live = LiveSession(session_id=session_id, spec=spec, state=state,
                           log_path=log_path, snap_path=snap_path)
        live.record_metrics()
        with self._registry_lock:
            self._sessions[session_id] = live
        return live

    def get(self, session_id: str) -> LiveSession:
        with self._registry_lock:
            live = self._sessions.get(session_id)
        if live is not None:
            return live
        return self._load(session_id)

    def _load(self, session_id: str) -> LiveSession:
        log_path, snap_path = self._paths(session_id)
        if not log_path.exists():
            raise UnknownSession(f"no session {session_id!r}")
        live = replay_log(log_path, snap_path)
        with self._registry_lock:
            # Another thread may have loaded it concurrently; keep the first.
            existing = self._sessions.setdefault(session_id, live)
        return existing

    def known_ids(self) -> list[str]:
        ids = {p.stem for p in self.data_dir.glob("*.jsonl")}
        return sorted(ids)


def replay_log(log_path, snap_path=None) -> LiveSession:
    """Rebuild a session by replaying its event log through the engine."""
    log_path = Path(log_path)
    with open(log_path, "r", encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("event") != "created":
        raise UnknownSession(f"{log_path}: log does not start with a created event")
    created = lines[0]
    spec = build_run_spec(created["config"], origin=str(log_path))
    state = spec.new_session()
    session_id = created.get("session_id", log_path.stem)
    snap = Path(snap_path) if snap_path is not None else log_path.with_suffix(".snap.json")
    live = LiveSession(session_id=session_id, spec=spec, state=state,
                       log_path=log_path, snap_path=snap)
    live.record_metrics()
    for event in lines[1:]:
        if event.get("event") != "measured":
            continue
        state.ingest(event["index"], event["value"])
        live.record_metrics()
    return live
