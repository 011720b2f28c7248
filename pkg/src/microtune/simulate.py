"""Deterministic simulated microservice chain.

Stands in for a real deployment so optimizer behavior can be verified against
a brute-force oracle. Each request traverses the scenario's stages in order;
a stage's latency is its base latency times the product of the configuration's
effect multipliers, optionally perturbed by multiplicative uniform noise.

Noise generator (stable contract): each stage draw hashes the tuple
``(seed, config_index, request_index, stage_index)`` as four big-endian int64s
through BLAKE2b (8-byte digest), maps the digest to a uniform u in [0, 1), and
perturbs the stage latency by ``1 + (2u - 1) * noise_amplitude``. Identical
inputs therefore yield bit-identical traces on any platform.
"""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Mapping

from .errors import ScenarioError, SimulatedFailure
from .space import Configuration, Kind, SearchSpace, Value, parse_byte_size
from .tracing import MeasurementProtocol, Span, Trace, aggregate_samples, sample_from_trace
from .trial import Trial, TrialStatus

ROOT_SERVICE = "chain"


@dataclass(frozen=True)
class Stage:
    """One service in the chain and its base latency."""

    service: str
    base_s: float

    def __post_init__(self) -> None:
        if self.base_s <= 0:
            raise ScenarioError(f"stage {self.service!r}: base latency must be positive")


@dataclass(frozen=True)
class FailureRule:
    """Conjunction of parameter=value terms; a match fails the whole request."""

    when: Mapping[str, Value]
    reason: str

    def matches(self, config: Mapping[str, Value]) -> bool:
        return all(config.get(name) == value for name, value in self.when.items())


@dataclass(frozen=True)
class Scenario:
    """Simulated chain: stages, per-parameter multipliers, noise, failure rules."""

    stages: tuple[Stage, ...]
    effects: Mapping[str, Mapping[Value, float]]
    noise_amplitude: float = 0.0
    failures: tuple[FailureRule, ...] = ()

    def __post_init__(self) -> None:
        if not self.stages:
            raise ScenarioError("scenario needs at least one stage")
        if not 0 <= self.noise_amplitude < 1:
            raise ScenarioError("noise amplitude must be in [0, 1)")
        for name, by_value in self.effects.items():
            for value, mult in by_value.items():
                if mult <= 0:
                    raise ScenarioError(
                        f"effect {name!r}={value!r}: multiplier must be positive"
                    )


def failure_reason(scenario: Scenario, config: Mapping[str, Value]) -> str | None:
    for rule in scenario.failures:
        if rule.matches(config):
            return rule.reason
    return None


def _config_multiplier(scenario: Scenario, config: Mapping[str, Value]) -> float:
    mult = 1.0
    for name, by_value in scenario.effects.items():
        if name in config:
            mult *= by_value.get(config[name], 1.0)
    return mult


def stage_latencies(scenario: Scenario, config: Mapping[str, Value]) -> list[float]:
    """Noise-free latency of each stage under the configuration."""
    mult = _config_multiplier(scenario, config)
    return [stage.base_s * mult for stage in scenario.stages]


def closed_form_latency(scenario: Scenario, config: Mapping[str, Value]) -> float:
    """Exact end-to-end latency: sum over stages of base x effect product.

    Raises :class:`SimulatedFailure` when a failure rule matches.
    """
    reason = failure_reason(scenario, config)
    if reason is not None:
        raise SimulatedFailure(reason)
    return sum(stage_latencies(scenario, config))


def _unit_noise(seed: int, config_index: int, request_index: int, stage_index: int) -> float:
    key = struct.pack(">4q", seed, config_index, request_index, stage_index)
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2**64


def simulate_request(
    scenario: Scenario,
    config: Mapping[str, Value],
    request_index: int,
    seed: int,
    config_index: int = 0,
) -> Trace:
    """Trace one simulated request: a root span plus one child span per stage."""
    reason = failure_reason(scenario, config)
    if reason is not None:
        raise SimulatedFailure(reason)
    eta = scenario.noise_amplitude
    trace_id = f"sim-{config_index}-{request_index}"
    children = []
    cursor = 0.0
    total = 0.0
    for stage_index, (stage, base) in enumerate(
        zip(scenario.stages, stage_latencies(scenario, config))
    ):
        duration = base
        if eta > 0:
            u = _unit_noise(seed, config_index, request_index, stage_index)
            duration = base * (1.0 + (2.0 * u - 1.0) * eta)
        children.append(
            Span(
                trace_id=trace_id,
                span_id=f"s{stage_index}-{stage.service}",
                parent_id="root",
                service=stage.service,
                start_s=cursor,
                duration_s=duration,
            )
        )
        cursor += duration
        total += duration
    root = Span(
        trace_id=trace_id,
        span_id="root",
        parent_id=None,
        service=ROOT_SERVICE,
        start_s=0.0,
        duration_s=total,
    )
    return Trace(trace_id=trace_id, spans=(root, *children))


def evaluate_sim(
    scenario: Scenario,
    config: Configuration,
    protocol: MeasurementProtocol,
    seed: int,
    config_index: int = 0,
) -> Trial:
    """Run the measurement protocol against the simulator and aggregate.

    A matching failure rule yields an Incomplete trial carrying the rule's
    reason; samples collected before the failure are kept and aggregated when
    enough of them survive the warmup discard. Deterministic for fixed
    (scenario, config, protocol, seed, config_index).
    """
    started_at = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    samples = []
    stats = None
    status = TrialStatus.COMPLETE
    reason = None
    for request_index in range(protocol.requests):
        try:
            trace = simulate_request(scenario, config, request_index, seed, config_index)
        except SimulatedFailure as failure:
            status = TrialStatus.INCOMPLETE
            reason = failure.reason
            break
        samples.append(sample_from_trace(trace, request_index))
    if len(samples) > protocol.warmup:
        stats = aggregate_samples(samples, protocol)
    elapsed = time.perf_counter() - t0
    return Trial(
        trial_id=0,
        config_index=config_index,
        configuration=dict(config),
        status=status,
        stats=stats,
        started_at=started_at,
        finished_at=datetime.now(timezone.utc),
        elapsed_s=elapsed,
        reason=reason,
    )


def _normalize_effect_value(param_kind: Kind, key: str) -> Value:
    if param_kind is Kind.BOOLEAN:
        if key not in ("true", "false"):
            raise ScenarioError(f"boolean effect key must be 'true' or 'false', got {key!r}")
        return key == "true"
    if param_kind is Kind.DISCRETE:
        try:
            return int(key)
        except ValueError:
            raise ScenarioError(f"discrete effect key must be an integer, got {key!r}") from None
    if param_kind is Kind.BYTE:
        return parse_byte_size(key)
    return key


def _normalize_terms(
    space: SearchSpace, raw: Mapping[str, Any], context: str
) -> dict[str, Value]:
    terms: dict[str, Value] = {}
    for name, raw_value in raw.items():
        param = space.parameter(name)
        if isinstance(raw_value, str) and param.kind is not Kind.CATEGORICAL:
            value = _normalize_effect_value(param.kind, raw_value)
        else:
            value = raw_value
        if not any(v == value and type(v) is type(value) for v in param.values):
            raise ScenarioError(f"{context}: value {raw_value!r} not admissible for {name!r}")
        terms[name] = value
    return terms


def load_scenario(document: str | Mapping[str, Any], space: SearchSpace) -> Scenario:
    """Parse a scenario document and validate it against the bound search space.

    Effect and failure keys must name parameters of the space with admissible
    values; byte values may use binary suffix strings.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"malformed scenario document: {exc}") from exc
    else:
        doc = document
    raw_stages = doc.get("stages")
    if not isinstance(raw_stages, list):
        raise ScenarioError("scenario document needs a 'stages' list")
    stages = tuple(Stage(service=str(s[0]), base_s=float(s[1])) for s in raw_stages)

    effects: dict[str, dict[Value, float]] = {}
    for name, raw_by_value in dict(doc.get("effects", {})).items():
        param = space.parameter(name)
        by_value: dict[Value, float] = {}
        for key, mult in raw_by_value.items():
            if isinstance(key, str) and param.kind is not Kind.CATEGORICAL:
                value = _normalize_effect_value(param.kind, key)
            else:
                value = key
            if not any(v == value and type(v) is type(value) for v in param.values):
                raise ScenarioError(f"effect on {name!r}: value {key!r} not admissible")
            by_value[value] = float(mult)
        effects[name] = by_value

    failures = tuple(
        FailureRule(
            when=_normalize_terms(space, rule.get("when", {}), "failure rule"),
            reason=str(rule.get("reason", "failure")),
        )
        for rule in doc.get("failures", [])
    )
    return Scenario(
        stages=stages,
        effects=effects,
        noise_amplitude=float(doc.get("noise_amplitude", 0.0)),
        failures=failures,
    )


def scenario_to_doc(scenario: Scenario) -> dict[str, Any]:
    """Serialize a scenario to its document form (effect keys as strings)."""

    def key_text(value: Value) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        return str(value)

    return {
        "stages": [[s.service, s.base_s] for s in scenario.stages],
        "effects": {
            name: {key_text(v): mult for v, mult in by_value.items()}
            for name, by_value in scenario.effects.items()
        },
        "noise_amplitude": scenario.noise_amplitude,
        "failures": [
            {"when": {n: v for n, v in rule.when.items()}, "reason": rule.reason}
            for rule in scenario.failures
        ],
    }
