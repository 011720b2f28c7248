"""Append-only trial logs and run reports.

Every run persists to one JSON-Lines file: a header record (run id, spec
snapshot, start time), one record per trial in order, and a footer record on
completion. Appends are flushed and fsynced so a crash between trials loses at
most the in-flight trial, and replaying the log rebuilds the exact report that
was available online.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Sequence

from .engine import TimeToTarget, best_trial, improvement_percent, time_to_within
from .errors import ReportError, TrialLogError
from .space import Configuration
from .tracing import TrialStats
from .trial import Trial, TrialStatus

EPOCH_ISO = "1970-01-01T00:00:00+00:00"


def _isoformat(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat()


def trial_to_record(trial: Trial) -> dict[str, Any]:
    stats = None
    if trial.stats is not None:
        stats = {
            "mean_s": trial.stats.mean_s,
            "min_s": trial.stats.min_s,
            "max_s": trial.stats.max_s,
            "count": trial.stats.count,
        }
    return {
        "kind": "trial",
        "trial_id": trial.trial_id,
        "baseline": trial.baseline,
        "config_index": trial.config_index,
        "configuration": dict(trial.configuration),
        "status": trial.status.value,
        "reason": trial.reason,
        "stats": stats,
        "started_at": _isoformat(trial.started_at),
        "finished_at": _isoformat(trial.finished_at),
        "elapsed_s": trial.elapsed_s,
    }


def trial_from_record(record: Mapping[str, Any]) -> Trial:
    raw_stats = record.get("stats")
    stats = None
    if raw_stats is not None:
        stats = TrialStats(
            mean_s=raw_stats["mean_s"],
            min_s=raw_stats["min_s"],
            max_s=raw_stats["max_s"],
            count=raw_stats["count"],
        )
    return Trial(
        trial_id=record["trial_id"],
        config_index=record["config_index"],
        configuration=dict(record["configuration"]),
        status=TrialStatus(record["status"]),
        stats=stats,
        started_at=datetime.fromisoformat(record["started_at"]),
        finished_at=datetime.fromisoformat(record["finished_at"]),
        elapsed_s=record["elapsed_s"],
        reason=record.get("reason"),
        baseline=bool(record.get("baseline", False)),
    )


class TrialLogWriter:
    """Single-writer append-only log for one run.

    The header is written on open; each appended trial is flushed and fsynced.
    A retried append with the same trial_id and identical payload is suppressed
    (idempotent); any other id than last+1 is rejected.
    """

    def __init__(self, path: Path | str, run_id: str, spec_doc: Mapping[str, Any]):
        self.path = Path(path)
        self.run_id = run_id
        self._last_id = 0
        self._last_line: str | None = None
        self._closed = False
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8")
        self._write(
            {
                "kind": "header",
                "run_id": run_id,
                "spec": dict(spec_doc),
                "started_at": _isoformat(datetime.now(timezone.utc)),
            }
        )

    def _write(self, record: Mapping[str, Any]) -> None:
        self._fh.write(json.dumps(record) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def append(self, trial: Trial) -> None:
        if self._closed:
            raise TrialLogError("log already closed")
        line = json.dumps(trial_to_record(trial))
        if trial.trial_id == self._last_id and self._last_line is not None:
            if line == self._last_line:
                return
            raise TrialLogError(f"conflicting retry for trial_id {trial.trial_id}")
        if trial.trial_id != self._last_id + 1:
            raise TrialLogError(
                f"out-of-order trial_id {trial.trial_id}, expected {self._last_id + 1}"
            )
        self._fh.write(line + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._last_id = trial.trial_id
        self._last_line = line

    def close(self, status: str | None = None) -> None:
        if self._closed:
            return
        if status is not None:
            self._write(
                {
                    "kind": "footer",
                    "status": status,
                    "finished_at": _isoformat(datetime.now(timezone.utc)),
                }
            )
        self._fh.close()
        self._closed = True

    def __enter__(self) -> "TrialLogWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()


@dataclass(frozen=True)
class TrialLogData:
    """A fully parsed trial log."""

    header: dict[str, Any]
    trials: tuple[Trial, ...]
    footer: dict[str, Any] | None


def read_log(path: Path | str) -> TrialLogData:
    """Parse and validate a trial log file."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header: dict[str, Any] | None = None
    footer: dict[str, Any] | None = None
    trials: list[Trial] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TrialLogError(f"line {lineno}: malformed JSON: {exc}") from exc
        kind = record.get("kind")
        if footer is not None:
            raise TrialLogError(f"line {lineno}: record after footer")
        if kind == "header":
            if header is not None:
                raise TrialLogError(f"line {lineno}: duplicate header")
            header = record
        elif kind == "trial":
            if header is None:
                raise TrialLogError(f"line {lineno}: trial before header")
            trial = trial_from_record(record)
            if trials and trial.trial_id <= trials[-1].trial_id:
                raise TrialLogError(f"line {lineno}: trial ids must increase")
            trials.append(trial)
        elif kind == "footer":
            if header is None:
                raise TrialLogError(f"line {lineno}: footer before header")
            footer = record
        else:
            raise TrialLogError(f"line {lineno}: unknown record kind {kind!r}")
    if header is None:
        raise TrialLogError("log has no header record")
    return TrialLogData(header=header, trials=tuple(trials), footer=footer)


@dataclass(frozen=True)
class RunReport:
    """The per-run analysis: best trial, improvement, sorted latency series."""

    run_id: str
    strategy: dict[str, Any] | None
    space_name: str
    baseline_config: Configuration
    baseline_mean: float
    best: Trial | None
    improvement_percent: float | None
    sorted_series: tuple[Trial, ...]
    complete_count: int
    incomplete_count: int
    total_elapsed_s: float


def build_report(
    trials: Sequence[Trial],
    baseline: Trial,
    *,
    run_id: str = "",
    strategy: Mapping[str, Any] | None = None,
    space_name: str = "",
) -> RunReport:
    """Assemble a report: Complete trials ascending by mean (ties by trial_id),
    then Incomplete trials in trial order as the trailing segment.

    ``trials`` may include the baseline trial; it is excluded from the series
    and from best-trial selection. The baseline trial must be Complete.
    """
    if not baseline.complete:
        raise ReportError("baseline trial is incomplete; no reference latency")
    candidates = [t for t in trials if not t.baseline]
    complete = sorted(
        (t for t in candidates if t.complete), key=lambda t: (t.stats.mean_s, t.trial_id)
    )
    incomplete = sorted(
        (t for t in candidates if not t.complete), key=lambda t: t.trial_id
    )
    best = best_trial(candidates)
    improvement = None
    if best is not None:
        improvement = improvement_percent(baseline.stats.mean_s, best.stats.mean_s)
    total_elapsed = baseline.elapsed_s + sum(t.elapsed_s for t in candidates)
    return RunReport(
        run_id=run_id,
        strategy=dict(strategy) if strategy is not None else None,
        space_name=space_name,
        baseline_config=dict(baseline.configuration),
        baseline_mean=baseline.stats.mean_s,
        best=best,
        improvement_percent=improvement,
        sorted_series=tuple(complete + incomplete),
        complete_count=len(complete),
        incomplete_count=len(incomplete),
        total_elapsed_s=total_elapsed,
    )


def baseline_from_log(data: TrialLogData) -> Trial:
    for trial in data.trials:
        if trial.baseline:
            return trial
    raise ReportError("log has no baseline trial")


def report_from_log(path: Path | str) -> RunReport:
    """Rebuild the online report from a persisted log (replay)."""
    data = read_log(path)
    baseline = baseline_from_log(data)
    spec = data.header.get("spec", {})
    return build_report(
        data.trials,
        baseline,
        run_id=data.header.get("run_id", ""),
        strategy=spec.get("strategy"),
        space_name=spec.get("space", {}).get("name", ""),
    )


def report_to_doc(report: RunReport) -> dict[str, Any]:
    best = None
    if report.best is not None:
        best = {
            "config_index": report.best.config_index,
            "configuration": dict(report.best.configuration),
            "mean_s": report.best.stats.mean_s,
        }
    return {
        "run_id": report.run_id,
        "strategy": report.strategy,
        "space_name": report.space_name,
        "baseline_config": dict(report.baseline_config),
        "baseline_mean_s": report.baseline_mean,
        "best": best,
        "improvement_percent": report.improvement_percent,
        "counts": {
            "complete": report.complete_count,
            "incomplete": report.incomplete_count,
        },
        "total_elapsed_s": report.total_elapsed_s,
        "sorted_series": [trial_to_record(t) for t in report.sorted_series],
    }


def report_to_json(report: RunReport) -> str:
    """Canonical JSON rendering (sorted keys) used for replay comparison."""
    return json.dumps(report_to_doc(report), sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class RunComparison:
    run_id: str
    strategy: dict[str, Any] | None
    best_mean_s: float | None
    improvement_percent: float | None
    time_to_target: TimeToTarget | None


@dataclass(frozen=True)
class ComparisonReport:
    """Two runs over the same space/baseline, scored for time-to-near-optimal."""

    q: float
    global_best_mean_s: float | None
    first: RunComparison
    second: RunComparison
    # 1 - elapsed_second / elapsed_first; None when either side never qualifies.
    relative_time_saving: float | None


def _chronological(report: RunReport) -> list[Trial]:
    return sorted(report.sorted_series, key=lambda t: t.trial_id)


def compare_runs(report_a: RunReport, report_b: RunReport, q: float = 0.05) -> ComparisonReport:
    """Compare two runs; both must share the space and baseline configuration."""
    if report_a.space_name != report_b.space_name:
        raise ReportError("mismatched spaces")
    if report_a.baseline_config != report_b.baseline_config:
        raise ReportError("mismatched baseline configurations")
    best_means = [
        r.best.stats.mean_s for r in (report_a, report_b) if r.best is not None
    ]
    global_best = min(best_means) if best_means else None

    def summarize(report: RunReport) -> RunComparison:
        tta = None
        if global_best is not None:
            tta = time_to_within(_chronological(report), global_best, q)
        return RunComparison(
            run_id=report.run_id,
            strategy=report.strategy,
            best_mean_s=report.best.stats.mean_s if report.best else None,
            improvement_percent=report.improvement_percent,
            time_to_target=tta,
        )

    first, second = summarize(report_a), summarize(report_b)
    saving = None
    if (
        first.time_to_target is not None
        and second.time_to_target is not None
        and first.time_to_target.elapsed_s > 0
    ):
        saving = 1.0 - second.time_to_target.elapsed_s / first.time_to_target.elapsed_s
    return ComparisonReport(
        q=q,
        global_best_mean_s=global_best,
        first=first,
        second=second,
        relative_time_saving=saving,
    )


def comparison_to_doc(comparison: ComparisonReport) -> dict[str, Any]:
    def side(rc: RunComparison) -> dict[str, Any]:
        tta = None
        if rc.time_to_target is not None:
            tta = {"trials": rc.time_to_target.trials, "elapsed_s": rc.time_to_target.elapsed_s}
        return {
            "run_id": rc.run_id,
            "strategy": rc.strategy,
            "best_mean_s": rc.best_mean_s,
            "improvement_percent": rc.improvement_percent,
            "time_to_target": tta,
        }

    return {
        "q": comparison.q,
        "global_best_mean_s": comparison.global_best_mean_s,
        "first": side(comparison.first),
        "second": side(comparison.second),
        "relative_time_saving": comparison.relative_time_saving,
    }


def export_series(report: RunReport, format: str) -> str:
    """Emit the sorted series as 'csv' or 'svg'."""
    if format == "csv":
        return export_csv(report)
    if format == "svg":
        return export_svg(report)
    raise ReportError(f"unknown export format {format!r}")


def export_csv(report: RunReport) -> str:
    """Sorted series as CSV: rank, config_index, mean_s, status."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["rank", "config_index", "mean_s", "status"])
    for rank, trial in enumerate(report.sorted_series, start=1):
        mean = trial.stats.mean_s if trial.stats is not None else ""
        writer.writerow([rank, trial.config_index, mean, trial.status.value])
    return out.getvalue()


_SVG_WIDTH = 800
_SVG_HEIGHT = 400
_SVG_MARGIN = 50


def export_svg(report: RunReport) -> str:
    """Self-contained SVG: sorted latency curve, baseline line, shaded
    incomplete segment (mirrors the run-report figure layout)."""
    series = report.sorted_series
    complete = [t for t in series if t.complete]
    means = [t.stats.mean_s for t in complete] + [report.baseline_mean]
    y_min, y_max = min(means), max(means)
    if y_max == y_min:
        y_max = y_min + 1.0
    pad = 0.1 * (y_max - y_min)
    y_min, y_max = y_min - pad, y_max + pad
    plot_w = _SVG_WIDTH - 2 * _SVG_MARGIN
    plot_h = _SVG_HEIGHT - 2 * _SVG_MARGIN
    n = max(len(series), 1)

    def x_at(rank: int) -> float:
        return _SVG_MARGIN + plot_w * (rank / max(n - 1, 1))

    def y_at(value: float) -> float:
        return _SVG_MARGIN + plot_h * (1.0 - (value - y_min) / (y_max - y_min))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_WIDTH}" '
        f'height="{_SVG_HEIGHT}" viewBox="0 0 {_SVG_WIDTH} {_SVG_HEIGHT}">',
        f'<rect width="{_SVG_WIDTH}" height="{_SVG_HEIGHT}" fill="white"/>',
        f'<text x="{_SVG_MARGIN}" y="20" font-size="14">'
        f"run {report.run_id}: mean latency per configuration, sorted</text>",
    ]
    if len(series) > len(complete):
        x0 = x_at(len(complete))
        parts.append(
            f'<rect class="incomplete" x="{x0:.2f}" y="{_SVG_MARGIN}" '
            f'width="{_SVG_MARGIN + plot_w - x0:.2f}" height="{plot_h}" '
            f'fill="#fddcdc" data-incomplete-count="{report.incomplete_count}"/>'
        )
    if complete:
        points = " ".join(
            f"{x_at(i):.2f},{y_at(t.stats.mean_s):.2f}" for i, t in enumerate(complete)
        )
        parts.append(
            f'<polyline class="series" points="{points}" fill="none" stroke="#2266cc"/>'
        )
    y_base = y_at(report.baseline_mean)
    parts.append(
        f'<line class="baseline" x1="{_SVG_MARGIN}" y1="{y_base:.2f}" '
        f'x2="{_SVG_MARGIN + plot_w}" y2="{y_base:.2f}" stroke="#cc2222" '
        f'stroke-dasharray="6 3" data-baseline-mean="{report.baseline_mean}"/>'
    )
    parts.append(
        f'<text x="{_SVG_MARGIN}" y="{y_base - 6:.2f}" font-size="12" fill="#cc2222">'
        f"baseline {report.baseline_mean:.6g} s</text>"
    )
    parts.append(
        f'<line x1="{_SVG_MARGIN}" y1="{_SVG_MARGIN + plot_h}" '
        f'x2="{_SVG_MARGIN + plot_w}" y2="{_SVG_MARGIN + plot_h}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{_SVG_MARGIN}" y1="{_SVG_MARGIN}" '
        f'x2="{_SVG_MARGIN}" y2="{_SVG_MARGIN + plot_h}" stroke="black"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def normalize_log_text(text: str) -> str:
    """Mask wall-clock fields (started_at/finished_at/elapsed_s) for comparisons.

    Two logs of the same run spec and seeds differ only in timing; after this
    normalization they compare byte-for-byte. Records are re-serialized with
    sorted keys.
    """
    out_lines = []
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        for key in ("started_at", "finished_at"):
            if key in record:
                record[key] = EPOCH_ISO
        if "elapsed_s" in record:
            record["elapsed_s"] = 0.0
        out_lines.append(json.dumps(record, sort_keys=True))
    return "\n".join(out_lines) + "\n"
