"""Distributed-tracing data model and latency computations.

A trace is a set of spans with exactly one root; the root's duration is the
end-to-end latency of the request, and per-service latency sums the durations
of each service's spans. Traces arrive either from the simulator or from an
external workload as JSON Lines (one trace object per line).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .errors import InsufficientSamplesError, TraceError

# Children may exceed their parent's interval by at most this much (float slop).
CONTAINMENT_TOLERANCE_S = 1e-9


@dataclass(frozen=True)
class Span:
    """One timed unit of work attributed to a service.

    ``start_s`` is the offset from the trace origin; a ``parent_id`` of None
    marks the root span.
    """

    trace_id: str
    span_id: str
    parent_id: str | None
    service: str
    start_s: float
    duration_s: float

    def __post_init__(self) -> None:
        if self.duration_s < 0:
            raise TraceError(f"span {self.span_id!r}: negative duration")


@dataclass(frozen=True)
class Trace:
    """All spans recorded for one request."""

    trace_id: str
    spans: tuple[Span, ...]

    def __post_init__(self) -> None:
        if not self.spans:
            raise TraceError(f"trace {self.trace_id!r} has no spans")


@dataclass(frozen=True)
class LatencySample:
    """Latency extracted from one request's trace."""

    request_index: int
    end_to_end_s: float
    per_service: Mapping[str, float]


@dataclass(frozen=True)
class TrialStats:
    """Aggregate over the post-warmup latency samples of one trial."""

    mean_s: float
    min_s: float
    max_s: float
    count: int


@dataclass(frozen=True)
class MeasurementProtocol:
    """Per-configuration measurement discipline."""

    requests: int = 50
    warmup: int = 5
    timeout_s: float = 60.0

    def __post_init__(self) -> None:
        if self.warmup < 0:
            raise TraceError("warmup must be >= 0")
        if self.requests <= self.warmup:
            raise TraceError("requests must exceed warmup")
        if self.timeout_s <= 0:
            raise TraceError("timeout must be positive")


def _root(trace: Trace) -> Span:
    roots = [s for s in trace.spans if s.parent_id is None]
    if not roots:
        raise TraceError(f"trace {trace.trace_id!r} has no root span")
    if len(roots) > 1:
        raise TraceError(f"trace {trace.trace_id!r} has multiple root spans")
    return roots[0]


def validate_trace(trace: Trace) -> None:
    """Check structural invariants: one root, resolvable parents, containment."""
    root = _root(trace)
    by_id = {s.span_id: s for s in trace.spans}
    if len(by_id) != len(trace.spans):
        raise TraceError(f"trace {trace.trace_id!r} has duplicate span ids")
    for span in trace.spans:
        if span is root:
            continue
        parent = by_id.get(span.parent_id)
        if parent is None:
            raise TraceError(
                f"trace {trace.trace_id!r}: span {span.span_id!r} references "
                f"unknown parent {span.parent_id!r}"
            )
        low = parent.start_s - CONTAINMENT_TOLERANCE_S
        high = parent.start_s + parent.duration_s + CONTAINMENT_TOLERANCE_S
        if span.start_s < low or span.start_s + span.duration_s > high:
            raise TraceError(
                f"trace {trace.trace_id!r}: span {span.span_id!r} escapes its parent interval"
            )


def end_to_end_latency(trace: Trace) -> float:
    """End-to-end request latency: the root span's duration."""
    return _root(trace).duration_s


def per_service_latency(trace: Trace) -> dict[str, float]:
    """Sum of span durations per service (root's service included)."""
    _root(trace)
    totals: dict[str, float] = {}
    for span in trace.spans:
        totals[span.service] = totals.get(span.service, 0.0) + span.duration_s
    return totals


def sample_from_trace(trace: Trace, request_index: int) -> LatencySample:
    return LatencySample(
        request_index=request_index,
        end_to_end_s=end_to_end_latency(trace),
        per_service=per_service_latency(trace),
    )


def aggregate_samples(
    samples: Sequence[LatencySample], protocol: MeasurementProtocol
) -> TrialStats:
    """Mean/min/max/count of end-to-end latency after discarding warmup samples.

    A constant sequence yields that constant exactly (noise-free simulated runs
    must reproduce the closed-form latency bit-for-bit); otherwise the mean is
    a correctly-rounded sum divided by the count, clamped into [min, max] to
    absorb 1-ulp division drift.
    """
    if len(samples) <= protocol.warmup:
        raise InsufficientSamplesError(
            f"insufficient samples: got {len(samples)}, warmup is {protocol.warmup}"
        )
    kept = [s.end_to_end_s for s in samples[protocol.warmup:]]
    lo, hi = min(kept), max(kept)
    mean = lo if lo == hi else min(max(math.fsum(kept) / len(kept), lo), hi)
    return TrialStats(mean_s=mean, min_s=lo, max_s=hi, count=len(kept))


def trace_to_doc(trace: Trace) -> dict[str, Any]:
    return {
        "trace_id": trace.trace_id,
        "spans": [
            {
                "span_id": s.span_id,
                "parent_id": s.parent_id,
                "service": s.service,
                "start_s": s.start_s,
                "duration_s": s.duration_s,
            }
            for s in trace.spans
        ],
    }


def trace_from_doc(doc: Mapping[str, Any]) -> Trace:
    trace_id = doc.get("trace_id")
    raw_spans = doc.get("spans")
    if not isinstance(trace_id, str) or not isinstance(raw_spans, list):
        raise TraceError("trace document needs 'trace_id' and a 'spans' list")
    spans = tuple(
        Span(
            trace_id=trace_id,
            span_id=str(raw["span_id"]),
            parent_id=raw.get("parent_id"),
            service=str(raw["service"]),
            start_s=float(raw["start_s"]),
            duration_s=float(raw["duration_s"]),
        )
        for raw in raw_spans
    )
    trace = Trace(trace_id=trace_id, spans=spans)
    validate_trace(trace)
    return trace


def parse_traces_jsonl(lines: Iterable[str] | str) -> list[Trace]:
    """Parse the JSON-Lines trace interchange format, one trace per line."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    traces = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceError(f"trace line {lineno}: malformed JSON: {exc}") from exc
        traces.append(trace_from_doc(doc))
    return traces


def traces_to_jsonl(traces: Iterable[Trace]) -> str:
    return "".join(json.dumps(trace_to_doc(t)) + "\n" for t in traces)
