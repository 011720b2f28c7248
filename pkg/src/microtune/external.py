"""External-target evaluator: apply a configuration to a real process.

The target is launched with rendered flags substituted into its command line,
awaited for readiness, driven by a workload command, and torn down afterwards.
The workload writes JSON-Lines traces to ``trace_source``; those become the
trial's latency samples.

Failure taxonomy (one reason per Incomplete trial, checked in this order):

* ``launch-failed``     - the target process died before becoming ready
* ``readiness-timeout`` - the readiness probe never succeeded in its window
* ``workload-failed``   - the workload exited nonzero of its own accord
* ``traces-missing``    - fewer valid traces than ``protocol.requests``
* ``timeout``           - the per-configuration time budget expired (a workload
  killed because the budget ran out is classified here, not as workload-failed)

Unresolvable commands raise :class:`TargetConfigError` before anything is
launched; that aborts the run and is distinct from an Incomplete trial.
Teardown (kill target, then the teardown command) runs exactly once on every
path that reached the launch.
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Sequence

from .errors import TargetConfigError, TraceError
from .space import Configuration, SearchSpace, render
from .tracing import (
    LatencySample,
    MeasurementProtocol,
    aggregate_samples,
    parse_traces_jsonl,
    sample_from_trace,
)
from .trial import Trial, TrialStatus

REASON_LAUNCH_FAILED = "launch-failed"
REASON_READINESS_TIMEOUT = "readiness-timeout"
REASON_WORKLOAD_FAILED = "workload-failed"
REASON_TRACES_MISSING = "traces-missing"
REASON_TIMEOUT = "timeout"

_PROBE_INTERVAL_S = 0.05


@dataclass(frozen=True)
class Readiness:
    """Probe-or-delay readiness contract.

    With a probe command, the target is ready once the probe exits 0 (polled
    until ``timeout_s``); otherwise readiness is a fixed ``delay_s`` sleep.
    """

    delay_s: float = 0.0
    probe: tuple[str, ...] | None = None
    timeout_s: float = 10.0

    def __post_init__(self) -> None:
        if self.delay_s < 0:
            raise TargetConfigError("readiness delay must be >= 0")


@dataclass(frozen=True)
class TargetSpec:
    """How to launch, drive, and tear down one external target."""

    launch_command: tuple[str, ...]
    workload_command: tuple[str, ...]
    trace_source: Path
    environment: Mapping[str, str] | None = None
    readiness: Readiness = Readiness()
    teardown_command: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.launch_command:
            raise TargetConfigError("launch command must be non-empty")
        if not self.workload_command:
            raise TargetConfigError("workload command must be non-empty")


def load_target_spec(document: str | Mapping[str, Any], base_dir: Path | None = None) -> TargetSpec:
    """Parse a target-spec document; relative paths resolve against base_dir."""
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise TargetConfigError(f"malformed target spec: {exc}") from exc
    else:
        doc = document
    base_dir = base_dir if base_dir is not None else Path.cwd()

    raw_readiness = doc.get("readiness") or {}
    readiness = Readiness(
        delay_s=float(raw_readiness.get("delay_s", 0.0)),
        probe=tuple(raw_readiness["probe"]) if raw_readiness.get("probe") else None,
        timeout_s=float(raw_readiness.get("timeout_s", 10.0)),
    )
    trace_source = Path(doc["trace_source"])
    if not trace_source.is_absolute():
        trace_source = base_dir / trace_source
    teardown = doc.get("teardown_command")
    return TargetSpec(
        launch_command=tuple(doc["launch_command"]),
        workload_command=tuple(doc["workload_command"]),
        trace_source=trace_source,
        environment=dict(doc.get("environment", {})),
        readiness=readiness,
        teardown_command=tuple(teardown) if teardown else None,
    )


def target_to_doc(target: TargetSpec) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "launch_command": list(target.launch_command),
        "workload_command": list(target.workload_command),
        "trace_source": str(target.trace_source),
        "environment": dict(target.environment or {}),
        "readiness": {
            "delay_s": target.readiness.delay_s,
            "timeout_s": target.readiness.timeout_s,
        },
    }
    if target.readiness.probe:
        doc["readiness"]["probe"] = list(target.readiness.probe)
    if target.teardown_command:
        doc["teardown_command"] = list(target.teardown_command)
    return doc


def _resolve_command(argv: Sequence[str], what: str) -> None:
    exe = argv[0]
    if shutil.which(exe) is None and not Path(exe).exists():
        raise TargetConfigError(f"{what} command not resolvable: {exe!r}")


def _substitute(argv: Sequence[str], runtime: str, container: str) -> list[str]:
    return [
        arg.replace("{runtime_flags}", runtime).replace("{container_flags}", container)
        for arg in argv
    ]


def _await_ready(
    proc: subprocess.Popen,
    readiness: Readiness,
    env: Mapping[str, str],
    deadline: float,
) -> str | None:
    """Returns an Incomplete reason, or None once the target is ready."""
    if readiness.probe is None:
        target_time = time.monotonic() + readiness.delay_s
        while time.monotonic() < target_time:
            if proc.poll() is not None:
                return REASON_LAUNCH_FAILED
            time.sleep(min(_PROBE_INTERVAL_S, readiness.delay_s or _PROBE_INTERVAL_S))
        return REASON_LAUNCH_FAILED if proc.poll() is not None else None
    probe_deadline = min(time.monotonic() + readiness.timeout_s, deadline)
    while True:
        if proc.poll() is not None:
            return REASON_LAUNCH_FAILED
        result = subprocess.run(
            readiness.probe, env=env, capture_output=True, check=False
        )
        if result.returncode == 0:
            return None
        if time.monotonic() >= probe_deadline:
            return REASON_READINESS_TIMEOUT
        time.sleep(_PROBE_INTERVAL_S)


def _terminate(proc: subprocess.Popen) -> None:
    if proc.poll() is None:
        proc.terminate()
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


def run_external(
    space: SearchSpace,
    config: Configuration,
    target: TargetSpec,
    protocol: MeasurementProtocol,
    config_index: int = 0,
) -> Trial:
    """Evaluate one configuration against the external target.

    Renders the configuration, substitutes ``{runtime_flags}`` /
    ``{container_flags}`` into the launch and workload commands (flags joined
    with spaces), merges rendered environment variables over the target's base
    environment, and classifies the outcome per the module-level failure
    taxonomy. A stale ``trace_source`` file is removed before launch so old
    traces never count.
    """
    _resolve_command(target.launch_command, "launch")
    _resolve_command(target.workload_command, "workload")
    if target.readiness.probe is not None:
        _resolve_command(target.readiness.probe, "readiness probe")
    if target.teardown_command is not None:
        _resolve_command(target.teardown_command, "teardown")

    rendered = render(space, config)
    runtime_text = " ".join(rendered.runtime_flags)
    container_text = " ".join(rendered.container_flags)
    launch_argv = _substitute(target.launch_command, runtime_text, container_text)
    workload_argv = _substitute(target.workload_command, runtime_text, container_text)
    env = dict(os.environ)
    env.update(target.environment or {})
    env.update(rendered.environment)

    target.trace_source.unlink(missing_ok=True)

    started_at = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    deadline = time.monotonic() + protocol.timeout_s
    reason: str | None = None
    samples: list[LatencySample] = []

    try:
        proc = subprocess.Popen(
            launch_argv, env=env, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL
        )
    except OSError as exc:
        raise TargetConfigError(f"failed to launch target: {exc}") from exc

    try:
        reason = _await_ready(proc, target.readiness, env, deadline)
        if reason is None:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                reason = REASON_TIMEOUT
            else:
                try:
                    result = subprocess.run(
                        workload_argv,
                        env=env,
                        timeout=remaining,
                        stdout=subprocess.DEVNULL,
                        stderr=subprocess.DEVNULL,
                        check=False,
                    )
                    if result.returncode != 0:
                        reason = REASON_WORKLOAD_FAILED
                except subprocess.TimeoutExpired:
                    reason = REASON_TIMEOUT
        if reason is None:
            samples = _collect_samples(target.trace_source)
            if len(samples) < protocol.requests:
                reason = REASON_TRACES_MISSING
            elif time.monotonic() > deadline:
                reason = REASON_TIMEOUT
    finally:
        _terminate(proc)
        if target.teardown_command is not None:
            subprocess.run(
                target.teardown_command,
                env=env,
                stdout=subprocess.DEVNULL,
                stderr=subprocess.DEVNULL,
                check=False,
            )

    stats = None
    if len(samples) > protocol.warmup:
        stats = aggregate_samples(samples, protocol)
    return Trial(
        trial_id=0,
        config_index=config_index,
        configuration=dict(config),
        status=TrialStatus.COMPLETE if reason is None else TrialStatus.INCOMPLETE,
        stats=stats,
        started_at=started_at,
        finished_at=datetime.now(timezone.utc),
        elapsed_s=time.perf_counter() - t0,
        reason=reason,
    )


def _collect_samples(trace_source: Path) -> list[LatencySample]:
    """Parse whatever valid traces exist; malformed lines simply don't count."""
    if not trace_source.exists():
        return []
    samples = []
    for line in trace_source.read_text().splitlines():
        if not line.strip():
            continue
        try:
            traces = parse_traces_jsonl([line])
        except TraceError:
            continue
        samples.extend(
            sample_from_trace(trace, len(samples) + i) for i, trace in enumerate(traces)
        )
    return samples
