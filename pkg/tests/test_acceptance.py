"""Acceptance criteria, one test per criterion at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary (see
conftest.pytest_terminal_summary).
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import replace

import pytest

from microtune.cli import main as cli_main
from microtune.engine import (
    GridStrategy,
    RandomStrategy,
    RunSpec,
    SimEvaluator,
    execute_run,
    improvement_percent,
    run_spec_to_doc,
)
from microtune.simulate import (
    FailureRule,
    Scenario,
    Stage,
    closed_form_latency,
    simulate_request,
)
from microtune.space import Kind, SearchSpace, index_to_config, parse_space
from microtune.store import (
    TrialLogWriter,
    build_report,
    read_log,
    report_from_log,
    report_to_json,
)
from microtune.tracing import (
    MeasurementProtocol,
    end_to_end_latency,
    per_service_latency,
)
from microtune.trial import TrialStatus

from conftest import DATA_DIR, MIB, make_param
from test_external import Fixture, run as run_ext

FAST_PROTOCOL = MeasurementProtocol(requests=2, warmup=0, timeout_s=30.0)


class Budget:
    """Asserts the criterion's stated runtime budget."""

    def __init__(self, seconds: float):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            elapsed = time.perf_counter() - self.t0
            assert elapsed < self.seconds, f"runtime {elapsed:.2f}s exceeds {self.seconds}s budget"


def random_case(seed: int) -> tuple[SearchSpace, Scenario]:
    """Seeded random space (cardinality <= 2000) and noise-free scenario."""
    rng = random.Random(seed)
    params = []
    effects = {}
    card = 1
    for i in range(rng.randint(1, 4)):
        max_count = 2000 // card
        if max_count < 2:
            break
        count = rng.randint(2, min(6, max_count))
        kind = rng.choice([Kind.DISCRETE, Kind.CATEGORICAL, Kind.BYTE])
        if kind is Kind.DISCRETE:
            values = tuple(range(1, count + 1))
        elif kind is Kind.BYTE:
            values = tuple(1024 * (j + 1) for j in range(count))
        else:
            values = tuple(f"opt{j}" for j in range(count))
        params.append(make_param(f"p{i}", values, kind=kind, default=rng.choice(values)))
        effects[f"p{i}"] = {v: rng.uniform(0.7, 1.3) for v in values}
        card *= count
    space = SearchSpace(name=f"case-{seed}", parameters=tuple(params))
    stages = tuple(
        Stage(f"s{j}", rng.uniform(0.05, 0.5)) for j in range(rng.randint(1, 4))
    )
    return space, Scenario(stages=stages, effects=effects, noise_amplitude=0.0)


def brute_force_minimum(space: SearchSpace, scenario: Scenario) -> float:
    return min(
        closed_form_latency(scenario, index_to_config(space, i))
        for i in range(space.cardinality())
    )


def test_cardinality_reproduction():
    """11-parameter x 3-value reference space has exactly 177,147 combinations."""
    with Budget(1.0):
        space = parse_space((DATA_DIR / "spaces" / "jvm_docker_reference.json").read_text())
        assert space.cardinality() == 177147


def test_improvement_arithmetic_reproduction():
    """Reported improvement percentages reproduce to within 0.0001."""
    with Budget(1.0):
        assert improvement_percent(0.8100, 0.7245) == pytest.approx(10.5556, abs=0.0001)
        assert improvement_percent(0.8100, 0.7445) == pytest.approx(8.0864, abs=0.0001)


def test_oracle_equivalence_grid():
    """Full grid search equals the brute-force minimum on 20 random scenarios."""
    with Budget(30.0):
        checked = 0
        for seed in range(20):
            space, scenario = random_case(seed)
            spec = RunSpec(
                space=space,
                strategy=GridStrategy(),
                protocol=FAST_PROTOCOL,
                evaluator=SimEvaluator(scenario=scenario, seed=0),
            )
            state = execute_run(spec)
            brute = brute_force_minimum(space, scenario)
            assert state.incumbent is not None
            got = state.incumbent.stats.mean_s
            assert abs(got - brute) <= 1e-12 * brute
            checked += 1
        assert checked >= 20


def test_oracle_equivalence_random_exhaustive():
    """Random search with budget = cardinality is a permutation and matches grid."""
    with Budget(30.0):
        for seed in range(20):
            space, scenario = random_case(seed)
            card = space.cardinality()
            spec = RunSpec(
                space=space,
                strategy=RandomStrategy(seed=seed + 1),
                protocol=FAST_PROTOCOL,
                evaluator=SimEvaluator(scenario=scenario, seed=0),
                budget=card,
            )
            state = execute_run(spec)
            visited = sorted(t.config_index for t in state.trials)
            assert visited == list(range(card))
            brute = brute_force_minimum(space, scenario)
            got = state.incumbent.stats.mean_s
            assert abs(got - brute) <= 1e-12 * brute


def test_random_search_hit_rate():
    """Budget-66 random search lands in the top-5% of a 3^6 space >= 90% of 200 reps."""
    with Budget(60.0):
        rng = random.Random(2024)
        params = []
        effects = {}
        for i in range(6):
            values = (0, 1, 2)
            params.append(make_param(f"p{i}", values, kind=Kind.DISCRETE, default=0))
            effects[f"p{i}"] = {v: rng.uniform(0.85, 1.15) for v in values}
        space = SearchSpace(name="hit-rate", parameters=tuple(params))
        scenario = Scenario(
            stages=(Stage("a", 0.2), Stage("b", 0.3)),
            effects=effects,
            noise_amplitude=0.02,
        )
        assert space.cardinality() == 729

        noise_free = replace(scenario, noise_amplitude=0.0)
        latencies = sorted(
            closed_form_latency(noise_free, index_to_config(space, i)) for i in range(729)
        )
        threshold = latencies[math.ceil(0.05 * 729) - 1]  # top-5% quantile

        protocol = MeasurementProtocol(requests=6, warmup=1, timeout_s=30.0)
        hits = 0
        repetitions = 200
        for seed in range(repetitions):
            spec = RunSpec(
                space=space,
                strategy=RandomStrategy(seed=seed),
                protocol=protocol,
                evaluator=SimEvaluator(scenario=scenario, seed=seed),
                budget=66,
            )
            state = execute_run(spec)
            found = closed_form_latency(noise_free, state.incumbent.configuration)
            if found <= threshold:
                hits += 1
        # analytic with-replacement expectation: 1 - 0.95^66 ~ 0.966
        assert hits >= 0.90 * repetitions, f"only {hits}/{repetitions} repetitions hit the top 5%"


def test_incomplete_run_handling(tmp_path, demo_space, demo_scenario):
    """Failure-rule trials land in the log and trailing segment, never as incumbent."""
    failing = replace(
        demo_scenario,
        failures=(
            FailureRule(when={"gc": "serial", "heap": 256 * MIB}, reason="oom"),
            FailureRule(when={"gc": "zgc", "heap": 512 * MIB}, reason="crash-loop"),
        ),
    )
    expected_incomplete = sum(
        1
        for i in range(6)
        if any(rule.matches(index_to_config(demo_space, i)) for rule in failing.failures)
    )
    assert expected_incomplete == 2

    spec = RunSpec(
        space=demo_space,
        strategy=GridStrategy(),
        protocol=MeasurementProtocol(requests=10, warmup=2),
        evaluator=SimEvaluator(scenario=failing, seed=0),
    )
    log_path = tmp_path / "run.jsonl"
    with TrialLogWriter(log_path, "run-0001", run_spec_to_doc(spec)) as writer:
        state = execute_run(spec, sink=writer.append, run_id="run-0001")
        writer.close(state.status.value)

    logged = read_log(log_path)
    logged_incomplete = [t for t in logged.trials if not t.complete]
    assert len(logged_incomplete) == expected_incomplete
    assert {t.reason for t in logged_incomplete} == {"oom", "crash-loop"}

    report = report_from_log(log_path)
    assert report.incomplete_count == expected_incomplete
    assert report.complete_count == 6 - expected_incomplete
    tail = report.sorted_series[-expected_incomplete:]
    assert all(t.status is TrialStatus.INCOMPLETE for t in tail)
    assert state.incumbent.complete
    assert not any(
        rule.matches(state.incumbent.configuration) for rule in failing.failures
    )


def test_log_replay_reproduces_online_report(tmp_path, demo_space, demo_scenario):
    """Replaying a persisted log rebuilds the online report byte-for-byte."""
    spec = RunSpec(
        space=demo_space,
        strategy=GridStrategy(),
        protocol=MeasurementProtocol(requests=10, warmup=2),
        evaluator=SimEvaluator(scenario=demo_scenario, seed=0),
    )
    log_path = tmp_path / "run.jsonl"
    with TrialLogWriter(log_path, "run-0001", run_spec_to_doc(spec)) as writer:
        state = execute_run(spec, sink=writer.append, run_id="run-0001")
        writer.close(state.status.value)
    online = build_report(
        state.trials,
        state.baseline_trial,
        run_id="run-0001",
        strategy={"type": "grid"},
        space_name=demo_space.name,
    )
    replayed = report_from_log(log_path)
    assert report_to_json(replayed) == report_to_json(online)


def test_trace_math(demo_scenario):
    """The demo fixture trace evaluates to the documented closed-form values."""
    config = {"gc": "zgc", "heap": 512 * MIB}
    trace = simulate_request(demo_scenario, config, 0, seed=0)
    e2e = end_to_end_latency(trace)
    assert e2e == closed_form_latency(demo_scenario, config)
    assert e2e == pytest.approx(0.684, rel=1e-12)
    per_service = per_service_latency(trace)
    assert per_service["ingest"] == 0.2565
    assert per_service["toll"] == 0.4275


def test_end_to_end_cli(tmp_path, capsys):
    """`run` on the demo grid spec then `report` prints best 0.684 / +14.5%."""
    with Budget(10.0):
        log = tmp_path / "grid.jsonl"
        runspec = str(DATA_DIR / "runspecs" / "gc_heap_grid.json")
        assert cli_main(["run", runspec, "--log", str(log), "--quiet"]) == 0
        capsys.readouterr()
        assert cli_main(["report", str(log)]) == 0
        out = capsys.readouterr().out
        best_line = next(line for line in out.splitlines() if "best mean" in line)
        best_mean = float(best_line.split()[2])
        assert best_mean == pytest.approx(0.684, abs=5e-7)
        improvement_line = next(line for line in out.splitlines() if "improvement" in line)
        improvement = float(improvement_line.split()[1].rstrip("%"))
        assert improvement == pytest.approx(14.5, abs=0.01)
        baseline_line = next(line for line in out.splitlines() if "baseline mean" in line)
        assert float(baseline_line.split()[2]) == pytest.approx(0.8, abs=5e-7)


def test_external_evaluator_contract(tmp_path):
    """Healthy stub completes at 0.81; each failure fixture maps to its reason;
    teardown fires on every path."""
    heap_space = SearchSpace(
        name="heap-only",
        parameters=(
            make_param(
                "heap",
                [16 * MIB, 512 * MIB],
                kind=Kind.BYTE,
                default=512 * MIB,
                template="-Xmx{value}",
            ),
        ),
    )

    def fresh(name):
        d = tmp_path / name
        d.mkdir()
        return Fixture(d)

    # healthy path
    fixture = fresh("healthy")
    trial = run_ext(
        heap_space, fixture.target(workload_args=["--count", "5", "--duration-s", "0.81"])
    )
    assert trial.status is TrialStatus.COMPLETE
    assert trial.stats.mean_s == 0.81
    assert fixture.teardown_count() == 1

    # launch-failed
    fixture = fresh("launch")
    trial = run_ext(
        heap_space, fixture.target(target_args=["--exit-now"], probe=False, delay_s=0.4)
    )
    assert trial.reason == "launch-failed"
    assert fixture.teardown_count() == 1

    # readiness-timeout
    fixture = fresh("ready")
    trial = run_ext(
        heap_space, fixture.target(target_args=["--never-ready"], probe_timeout_s=0.4)
    )
    assert trial.reason == "readiness-timeout"
    assert fixture.teardown_count() == 1

    # workload-failed, keyed off the rendered -Xmx16m flag
    fixture = fresh("workload")
    trial = run_ext(
        heap_space,
        fixture.target(
            workload_args=["--count", "5", "--fail-on-flag=-Xmx16m"], forward_flags=True
        ),
        heap=16 * MIB,
    )
    assert trial.reason == "workload-failed"
    assert fixture.teardown_count() == 1

    # traces-missing
    fixture = fresh("missing")
    trial = run_ext(heap_space, fixture.target(workload_args=["--count", "3"]))
    assert trial.reason == "traces-missing"
    assert fixture.teardown_count() == 1

    # timeout
    fixture = fresh("timeout")
    trial = run_ext(
        heap_space,
        fixture.target(workload_args=["--count", "5", "--sleep-s", "5"]),
        MeasurementProtocol(requests=5, warmup=1, timeout_s=1.0),
    )
    assert trial.reason == "timeout"
    assert fixture.teardown_count() == 1
