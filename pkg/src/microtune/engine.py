"""Core optimization loop: candidate generation, evaluation, incumbent tracking.

Grid search walks the mixed-radix index order exhaustively; random search
draws indices uniformly without replacement. The baseline (all-default)
configuration is always evaluated first as a flagged trial outside the
candidate budget, so improvement over the non-optimized setup can be reported.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence
from uuid import uuid4

from .errors import RunSpecError, TargetConfigError
from .external import TargetSpec, load_target_spec, run_external, target_to_doc
from .simulate import Scenario, evaluate_sim, load_scenario, scenario_to_doc
from .space import (
    Configuration,
    Kind,
    SearchSpace,
    config_to_index,
    index_to_config,
    parse_byte_size,
    parse_space,
    space_to_doc,
    validate_configuration,
)
from .tracing import MeasurementProtocol
from .trial import Trial

# Above this cardinality random search switches from a partial Fisher-Yates
# shuffle to rejection sampling with a seen-set (memory stays O(budget)).
SHUFFLE_CARDINALITY_LIMIT = 1_000_000

StopSignal = Callable[[], bool]
TrialSink = Callable[[Trial], None]


@dataclass(frozen=True)
class GridStrategy:
    pass


@dataclass(frozen=True)
class RandomStrategy:
    seed: int


Strategy = GridStrategy | RandomStrategy


@dataclass(frozen=True)
class SimEvaluator:
    """Evaluate against the simulated chain; ``seed`` keys the noise stream."""

    scenario: Scenario
    seed: int = 0


@dataclass(frozen=True)
class ExternalEvaluator:
    """Evaluate by launching the external target."""

    target: TargetSpec


Evaluator = SimEvaluator | ExternalEvaluator


class RunStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    STOPPED = "stopped"
    EXHAUSTED = "exhausted"
    FINISHED = "finished"


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to execute one optimization run."""

    space: SearchSpace
    strategy: Strategy
    protocol: MeasurementProtocol
    evaluator: Evaluator
    budget: int | None = None
    baseline: Configuration | None = None

    def __post_init__(self) -> None:
        if self.budget is not None and self.budget < 1:
            raise RunSpecError("budget must be >= 1")
        if isinstance(self.strategy, RandomStrategy):
            if self.budget is None:
                raise RunSpecError("random strategy requires an explicit budget")
            card = self.space.cardinality()
            if self.budget > card:
                raise RunSpecError(f"random budget {self.budget} exceeds cardinality {card}")
        if self.baseline is not None:
            validate_configuration(self.space, self.baseline)

    def resolved_budget(self) -> int:
        return self.budget if self.budget is not None else self.space.cardinality()

    def resolved_baseline(self) -> Configuration:
        if self.baseline is not None:
            return dict(self.baseline)
        return self.space.default_configuration()


@dataclass
class RunState:
    """Mutable run progress; treat snapshots as read-only."""

    run_id: str
    spec: RunSpec
    status: RunStatus = RunStatus.PENDING
    baseline_trial: Trial | None = None
    trials: list[Trial] | None = None
    incumbent: Trial | None = None
    stop_cause: str | None = None

    def __post_init__(self) -> None:
        if self.trials is None:
            self.trials = []


def grid_candidates(space: SearchSpace, budget: int) -> list[int]:
    """Config indices 0,1,2,... in mixed-radix grid order, truncated at budget."""
    if budget < 0:
        raise RunSpecError("budget must be >= 0")
    return list(range(min(budget, space.cardinality())))


def random_candidates(space: SearchSpace, budget: int, seed: int) -> list[int]:
    """``budget`` distinct config indices, uniform without replacement.

    Deterministic for fixed (space, budget, seed): a partial Fisher-Yates
    shuffle for spaces up to :data:`SHUFFLE_CARDINALITY_LIMIT`, rejection
    sampling with a seen-set beyond that (per-draw memory stays O(budget)).
    All draws come from ``random.Random(seed).randrange``.
    """
    card = space.cardinality()
    if budget > card:
        raise RunSpecError(f"random budget {budget} exceeds cardinality {card}")
    rng = random.Random(seed)
    if card <= SHUFFLE_CARDINALITY_LIMIT:
        pool = list(range(card))
        picks = []
        for i in range(budget):
            j = rng.randrange(i, card)
            pool[i], pool[j] = pool[j], pool[i]
            picks.append(pool[i])
        return picks
    seen: set[int] = set()
    picks = []
    while len(picks) < budget:
        idx = rng.randrange(card)
        if idx not in seen:
            seen.add(idx)
            picks.append(idx)
    return picks


def candidate_indices(spec: RunSpec) -> list[int]:
    if isinstance(spec.strategy, GridStrategy):
        return grid_candidates(spec.space, spec.resolved_budget())
    return random_candidates(spec.space, spec.resolved_budget(), spec.strategy.seed)


def _evaluate(spec: RunSpec, config: Configuration, config_index: int) -> Trial:
    if isinstance(spec.evaluator, SimEvaluator):
        return evaluate_sim(
            spec.evaluator.scenario,
            config,
            spec.protocol,
            spec.evaluator.seed,
            config_index=config_index,
        )
    return run_external(
        spec.space, config, spec.evaluator.target, spec.protocol, config_index=config_index
    )


def best_trial(trials: Sequence[Trial]) -> Trial | None:
    """Complete trial with minimal mean; ties go to the earliest trial_id."""
    completed = [t for t in trials if t.complete]
    if not completed:
        return None
    return min(completed, key=lambda t: (t.stats.mean_s, t.trial_id))


def improvement_percent(baseline_mean: float, best_mean: float) -> float:
    """Percent latency reduction relative to the baseline; negative if worse."""
    if baseline_mean <= 0:
        raise RunSpecError("baseline mean must be positive")
    return 100.0 * (baseline_mean - best_mean) / baseline_mean


@dataclass(frozen=True)
class TimeToTarget:
    """Cost of reaching a near-optimal trial: trials consumed and elapsed time."""

    trials: int
    elapsed_s: float


def time_to_within(
    trials: Sequence[Trial], global_best_mean: float, q: float = 0.05
) -> TimeToTarget | None:
    """Trials and cumulative elapsed until the first Complete trial whose mean
    is within a (1+q) factor of the global best; None if never reached."""
    threshold = global_best_mean * (1.0 + q)
    elapsed = 0.0
    for count, trial in enumerate(sorted(trials, key=lambda t: t.trial_id), start=1):
        elapsed += trial.elapsed_s
        if trial.complete and trial.stats.mean_s <= threshold:
            return TimeToTarget(trials=count, elapsed_s=elapsed)
    return None


def execute_run(
    spec: RunSpec,
    sink: TrialSink | None = None,
    *,
    run_id: str | None = None,
    stop: StopSignal | None = None,
) -> RunState:
    """Run baseline then candidates serially, emitting each trial to ``sink``.

    The stop signal is honored between trials; evaluator configuration errors
    abort the run with status Stopped and a recorded cause. Incomplete trials
    never become the incumbent.
    """
    state = RunState(
        run_id=run_id if run_id is not None else f"run-{uuid4().hex[:12]}",
        spec=spec,
        status=RunStatus.RUNNING,
    )
    emit = sink if sink is not None else lambda trial: None

    baseline_config = spec.resolved_baseline()
    baseline_index = config_to_index(spec.space, baseline_config)
    try:
        baseline = _evaluate(spec, baseline_config, baseline_index)
    except TargetConfigError as exc:
        state.status = RunStatus.STOPPED
        state.stop_cause = str(exc)
        return state
    baseline = replace(baseline, trial_id=1, baseline=True)
    state.baseline_trial = baseline
    emit(baseline)

    budget = spec.resolved_budget()
    indices = candidate_indices(spec)
    next_id = 2
    for index in indices:
        if stop is not None and stop():
            state.status = RunStatus.STOPPED
            return state
        config = index_to_config(spec.space, index)
        try:
            trial = _evaluate(spec, config, index)
        except TargetConfigError as exc:
            state.status = RunStatus.STOPPED
            state.stop_cause = str(exc)
            return state
        trial = replace(trial, trial_id=next_id)
        next_id += 1
        state.trials.append(trial)
        emit(trial)
        if trial.complete and (
            state.incumbent is None or trial.stats.mean_s < state.incumbent.stats.mean_s
        ):
            state.incumbent = trial
    state.status = RunStatus.FINISHED if len(indices) >= budget else RunStatus.EXHAUSTED
    return state


def _parse_strategy(raw: Mapping[str, Any]) -> Strategy:
    kind = raw.get("type")
    if kind == "grid":
        return GridStrategy()
    if kind == "random":
        if "seed" not in raw:
            raise RunSpecError("random strategy requires a seed")
        return RandomStrategy(seed=int(raw["seed"]))
    raise RunSpecError(f"unknown strategy type {kind!r}")


def strategy_to_doc(strategy: Strategy) -> dict[str, Any]:
    if isinstance(strategy, GridStrategy):
        return {"type": "grid"}
    return {"type": "random", "seed": strategy.seed}


def _parse_protocol(raw: Mapping[str, Any] | None) -> MeasurementProtocol:
    raw = raw or {}
    return MeasurementProtocol(
        requests=int(raw.get("requests", 50)),
        warmup=int(raw.get("warmup", 5)),
        timeout_s=float(raw.get("timeout_s", 60.0)),
    )


def protocol_to_doc(protocol: MeasurementProtocol) -> dict[str, Any]:
    return {
        "requests": protocol.requests,
        "warmup": protocol.warmup,
        "timeout_s": protocol.timeout_s,
    }


def _load_ref(ref: Any, base_dir: Path, what: str) -> Any:
    """A sub-document may be inline (object) or a path to a JSON file."""
    if isinstance(ref, Mapping):
        return ref
    if isinstance(ref, str):
        path = Path(ref)
        if not path.is_absolute():
            path = base_dir / path
        try:
            return json.loads(path.read_text())
        except FileNotFoundError:
            raise RunSpecError(f"{what} file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise RunSpecError(f"malformed {what} file {path}: {exc}") from exc
    raise RunSpecError(f"{what} must be an inline object or a file path")


def load_run_spec(document: str | Mapping[str, Any], base_dir: Path | None = None) -> RunSpec:
    """Parse a run-spec document.

    ``space``, ``evaluator.scenario`` and ``evaluator.target`` accept either an
    inline JSON object or a path (relative paths resolve against ``base_dir``).
    An optional ``enabled_parameters`` list narrows the space to that selection;
    an optional partial ``baseline`` assignment overrides defaults.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise RunSpecError(f"malformed run spec: {exc}") from exc
    else:
        doc = document
    base_dir = base_dir if base_dir is not None else Path.cwd()

    if "space" not in doc:
        raise RunSpecError("run spec needs a 'space'")
    space = parse_space(_load_ref(doc["space"], base_dir, "space"))
    if "enabled_parameters" in doc:
        space = space.with_enabled(doc["enabled_parameters"])

    strategy = _parse_strategy(doc.get("strategy", {}))
    protocol = _parse_protocol(doc.get("protocol"))

    raw_eval = doc.get("evaluator")
    if not isinstance(raw_eval, Mapping):
        raise RunSpecError("run spec needs an 'evaluator' object")
    eval_type = raw_eval.get("type")
    evaluator: Evaluator
    if eval_type == "sim":
        scenario = load_scenario(_load_ref(raw_eval.get("scenario"), base_dir, "scenario"), space)
        evaluator = SimEvaluator(scenario=scenario, seed=int(raw_eval.get("seed", 0)))
    elif eval_type == "external":
        target = load_target_spec(_load_ref(raw_eval.get("target"), base_dir, "target"), base_dir)
        evaluator = ExternalEvaluator(target=target)
    else:
        raise RunSpecError(f"unknown evaluator type {eval_type!r}")

    baseline = None
    if doc.get("baseline") is not None:
        baseline = space.default_configuration()
        for name, value in doc["baseline"].items():
            param = space.parameter(name)
            if param.kind is Kind.BYTE and isinstance(value, str):
                value = parse_byte_size(value)
            baseline[name] = value

    budget = doc.get("budget")
    return RunSpec(
        space=space,
        strategy=strategy,
        protocol=protocol,
        evaluator=evaluator,
        budget=int(budget) if budget is not None else None,
        baseline=baseline,
    )


def run_spec_to_doc(spec: RunSpec) -> dict[str, Any]:
    """Canonical, fully-inlined snapshot of a run spec (stable across sources)."""
    if isinstance(spec.evaluator, SimEvaluator):
        evaluator: dict[str, Any] = {
            "type": "sim",
            "scenario": scenario_to_doc(spec.evaluator.scenario),
            "seed": spec.evaluator.seed,
        }
    else:
        evaluator = {"type": "external", "target": target_to_doc(spec.evaluator.target)}
    return {
        "space": space_to_doc(spec.space),
        "strategy": strategy_to_doc(spec.strategy),
        "protocol": protocol_to_doc(spec.protocol),
        "evaluator": evaluator,
        "budget": spec.resolved_budget(),
        "baseline": spec.resolved_baseline(),
    }
