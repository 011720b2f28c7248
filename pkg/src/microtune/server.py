"""HTTP/JSON control plane for defining spaces and driving runs.

One process hosts the API and executes at most one run at a time on a worker
thread (measurement integrity). Trials become visible through the cursor-paged
feed only after they are durably appended to the run's log, so API snapshots
are always prefix-consistent with what is on disk.

Endpoints: POST /api/runs, GET /api/runs/{id}, GET /api/runs/{id}/trials?since=N,
POST /api/runs/{id}/stop, GET /api/spaces, GET /api/spaces/{name},
POST /api/spaces/{name}/cardinality. Errors: {"error": {"code", "message"}}.
Environment: MICROTUNE_DATA_DIR (spaces/ and runs/ root), MICROTUNE_LISTEN.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .engine import (
    RunSpec,
    RunStatus,
    execute_run,
    load_run_spec,
    run_spec_to_doc,
)
from .errors import MicrotuneError
from .space import parse_space, space_to_doc
from .store import (
    RunReport,
    TrialLogWriter,
    build_report,
    report_to_doc,
    trial_to_record,
)
from .trial import Trial

logger = logging.getLogger(__name__)

DEFAULT_LISTEN = "127.0.0.1:8800"


class ApiError(Exception):
    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.code = code
        self.message = message


@dataclass
class ManagedRun:
    """Server-side bookkeeping for one run."""

    run_id: str
    spec: RunSpec
    spec_doc: dict[str, Any]
    log_path: Path
    status: RunStatus = RunStatus.PENDING
    trials: list[Trial] = field(default_factory=list)
    stop_event: threading.Event = field(default_factory=threading.Event)
    stop_cause: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    thread: threading.Thread | None = None

    @property
    def active(self) -> bool:
        return self.status in (RunStatus.PENDING, RunStatus.RUNNING)

    def baseline_trial(self) -> Trial | None:
        for trial in self.trials:
            if trial.baseline:
                return trial
        return None

    def snapshot(self) -> list[Trial]:
        with self.lock:
            return list(self.trials)

    def handle(self) -> dict[str, Any]:
        trials = self.snapshot()
        candidates = [t for t in trials if not t.baseline]
        baseline = next((t for t in trials if t.baseline), None)
        incumbent = None
        complete = [t for t in candidates if t.complete]
        if complete:
            best = min(complete, key=lambda t: (t.stats.mean_s, t.trial_id))
            incumbent = {
                "config_index": best.config_index,
                "configuration": dict(best.configuration),
                "mean_s": best.stats.mean_s,
            }
            if baseline is not None and baseline.complete:
                incumbent["improvement_percent"] = (
                    100.0
                    * (baseline.stats.mean_s - best.stats.mean_s)
                    / baseline.stats.mean_s
                )
        return {
            "run_id": self.run_id,
            "status": self.status.value,
            "progress": {
                "trials_done": len(candidates),
                "budget": self.spec.resolved_budget(),
            },
            "incumbent": incumbent,
            "stop_cause": self.stop_cause,
        }

    def report(self) -> RunReport | None:
        trials = self.snapshot()
        baseline = next((t for t in trials if t.baseline), None)
        if baseline is None or not baseline.complete:
            return None
        return build_report(
            trials,
            baseline,
            run_id=self.run_id,
            strategy=self.spec_doc.get("strategy"),
            space_name=self.spec.space.name,
        )


class RunManager:
    """Registry enforcing the single-concurrent-run policy."""

    def __init__(self, data_dir: Path):
        self.data_dir = data_dir
        self.runs_dir = data_dir / "runs"
        self.spaces_dir = data_dir / "spaces"
        self._runs: dict[str, ManagedRun] = {}
        self._lock = threading.Lock()
        self._next_run = 1

    def create_run(self, doc: dict[str, Any]) -> ManagedRun:
        try:
            spec = load_run_spec(doc, base_dir=self.data_dir)
        except MicrotuneError as exc:
            raise ApiError(400, exc.code, str(exc)) from exc
        with self._lock:
            if any(run.active for run in self._runs.values()):
                raise ApiError(409, "run-conflict", "a run is already in progress")
            run_id = f"run-{self._next_run:04d}"
            self._next_run += 1
            managed = ManagedRun(
                run_id=run_id,
                spec=spec,
                spec_doc=run_spec_to_doc(spec),
                log_path=self.runs_dir / f"{run_id}.jsonl",
            )
            managed.status = RunStatus.RUNNING
            self._runs[run_id] = managed
        thread = threading.Thread(target=self._execute, args=(managed,), daemon=True)
        managed.thread = thread
        thread.start()
        return managed

    def _execute(self, managed: ManagedRun) -> None:
        writer = TrialLogWriter(managed.log_path, managed.run_id, managed.spec_doc)

        def sink(trial: Trial) -> None:
            writer.append(trial)  # durable first: the feed never leads the log
            with managed.lock:
                managed.trials.append(trial)

        try:
            state = execute_run(
                managed.spec,
                sink=sink,
                run_id=managed.run_id,
                stop=managed.stop_event.is_set,
            )
            managed.status = state.status
            managed.stop_cause = state.stop_cause
        except Exception as exc:  # defensive: a crashed run must not wedge the server
            logger.exception("run %s crashed", managed.run_id)
            managed.status = RunStatus.STOPPED
            managed.stop_cause = f"internal error: {exc}"
        finally:
            writer.close(managed.status.value)

    def get(self, run_id: str) -> ManagedRun:
        run = self._runs.get(run_id)
        if run is None:
            raise ApiError(404, "unknown-run", f"no run {run_id!r}")
        return run

    def stop(self, run_id: str) -> ManagedRun:
        run = self.get(run_id)
        run.stop_event.set()
        return run


def _space_files(spaces_dir: Path) -> list[Path]:
    if not spaces_dir.is_dir():
        return []
    return sorted(spaces_dir.glob("*.json"))


def _load_space_file(spaces_dir: Path, name: str):
    if "/" in name or "\\" in name or name.startswith("."):
        raise ApiError(400, "invalid-space", f"invalid space name {name!r}")
    path = spaces_dir / f"{name}.json"
    if not path.is_file():
        raise ApiError(404, "unknown-space", f"no space file {name!r}")
    try:
        return parse_space(path.read_text())
    except MicrotuneError as exc:
        raise ApiError(400, exc.code, str(exc)) from exc


def create_app(data_dir: Path | str | None = None) -> FastAPI:
    """Build the API app rooted at ``data_dir`` (default: MICROTUNE_DATA_DIR)."""
    root = Path(data_dir if data_dir is not None else os.environ.get("MICROTUNE_DATA_DIR", "."))
    app = FastAPI(title="microtune", version="0.1.0")
    manager = RunManager(root)
    app.state.manager = manager

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.post("/api/runs", status_code=201)
    async def create_run(request: Request) -> dict[str, Any]:
        try:
            doc = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            raise ApiError(400, "invalid-json", f"request body is not JSON: {exc}")
        if not isinstance(doc, dict):
            raise ApiError(400, "invalid-run-spec", "run spec must be a JSON object")
        managed = manager.create_run(doc)
        return managed.handle()

    @app.get("/api/runs/{run_id}")
    async def get_run(run_id: str) -> dict[str, Any]:
        managed = manager.get(run_id)
        report = managed.report()
        return {
            "run": managed.handle(),
            "report": report_to_doc(report) if report is not None else None,
        }

    @app.get("/api/runs/{run_id}/trials")
    async def list_trials(run_id: str, since: int = 0) -> dict[str, Any]:
        managed = manager.get(run_id)
        trials = [t for t in managed.snapshot() if t.trial_id > since]
        cursor = trials[-1].trial_id if trials else since
        return {"trials": [trial_to_record(t) for t in trials], "cursor": cursor}

    @app.post("/api/runs/{run_id}/stop")
    async def stop_run(run_id: str) -> dict[str, Any]:
        return manager.stop(run_id).handle()

    @app.get("/api/spaces")
    async def list_spaces() -> dict[str, Any]:
        spaces = []
        for path in _space_files(manager.spaces_dir):
            try:
                space = parse_space(path.read_text())
            except MicrotuneError:
                continue
            spaces.append(
                {
                    "file": path.stem,
                    "name": space.name,
                    "parameters": len(space.parameters),
                    "cardinality": space.cardinality(),
                }
            )
        return {"spaces": spaces}

    @app.get("/api/spaces/{name}")
    async def get_space(name: str) -> dict[str, Any]:
        space = _load_space_file(manager.spaces_dir, name)
        return {
            "file": name,
            "space": space_to_doc(space),
            "cardinality": space.cardinality(),
        }

    @app.post("/api/spaces/{name}/cardinality")
    async def space_cardinality(name: str, request: Request) -> dict[str, Any]:
        space = _load_space_file(manager.spaces_dir, name)
        try:
            doc = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError as exc:
            raise ApiError(400, "invalid-json", f"request body is not JSON: {exc}")
        enabled = doc.get("enabled")
        if enabled is not None:
            try:
                space = space.with_enabled(enabled)
            except MicrotuneError as exc:
                raise ApiError(400, exc.code, str(exc)) from exc
        return {"cardinality": space.cardinality()}

    dashboard_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dashboard_dir.is_dir():
        app.mount("/", StaticFiles(directory=dashboard_dir, html=True), name="dashboard")

    return app


def parse_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise MicrotuneError(f"invalid listen address {listen!r}, expected HOST:PORT")
    return host, int(port)
