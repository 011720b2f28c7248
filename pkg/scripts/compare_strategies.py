#!/usr/bin/env python3
"""Run grid search and random search on the same space/scenario and compare.

Executes both strategies under identical protocols, writes both trial logs and
SVG figures next to them, and prints the time-to-near-optimal comparison.

Example:
    python3 scripts/compare_strategies.py \
        --space data/spaces/gc_heap_demo.json \
        --scenario data/scenarios/chain_demo.json \
        --out-dir /tmp/mt-compare --random-budget 4 --seed 7
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from microtune.engine import (
    GridStrategy,
    RandomStrategy,
    RunSpec,
    SimEvaluator,
    execute_run,
    run_spec_to_doc,
)
from microtune.simulate import load_scenario
from microtune.space import parse_space
from microtune.store import (
    TrialLogWriter,
    compare_runs,
    comparison_to_doc,
    export_svg,
    report_from_log,
)
from microtune.tracing import MeasurementProtocol


def run_one(spec: RunSpec, run_id: str, out_dir: Path) -> Path:
    log_path = out_dir / f"{run_id}.jsonl"
    with TrialLogWriter(log_path, run_id, run_spec_to_doc(spec)) as writer:
        state = execute_run(spec, sink=writer.append, run_id=run_id)
        writer.close(state.status.value)
    print(f"{run_id}: {state.status.value}, incumbent mean "
          f"{state.incumbent.stats.mean_s:.6f} s" if state.incumbent else f"{run_id}: no incumbent")
    return log_path


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--space", required=True)
    parser.add_argument("--scenario", required=True)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--random-budget", type=int, default=None,
                        help="default: half the cardinality, at least 1")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--requests", type=int, default=50)
    parser.add_argument("--warmup", type=int, default=5)
    parser.add_argument("--q", type=float, default=0.05)
    args = parser.parse_args()

    space = parse_space(Path(args.space).read_text())
    scenario = load_scenario(Path(args.scenario).read_text(), space)
    protocol = MeasurementProtocol(requests=args.requests, warmup=args.warmup)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    budget = args.random_budget or max(space.cardinality() // 2, 1)
    grid_spec = RunSpec(
        space=space,
        strategy=GridStrategy(),
        protocol=protocol,
        evaluator=SimEvaluator(scenario=scenario, seed=args.seed),
    )
    random_spec = RunSpec(
        space=space,
        strategy=RandomStrategy(seed=args.seed),
        protocol=protocol,
        evaluator=SimEvaluator(scenario=scenario, seed=args.seed),
        budget=budget,
    )

    grid_log = run_one(grid_spec, "grid", out_dir)
    random_log = run_one(random_spec, "random", out_dir)

    grid_report = report_from_log(grid_log)
    random_report = report_from_log(random_log)
    (out_dir / "grid.svg").write_text(export_svg(grid_report))
    (out_dir / "random.svg").write_text(export_svg(random_report))

    comparison = compare_runs(grid_report, random_report, q=args.q)
    print(json.dumps(comparison_to_doc(comparison), indent=2))
    if comparison.relative_time_saving is not None:
        print(
            f"\nrandom search reached within {args.q:.0%} of the global best "
            f"using {1 - comparison.second.time_to_target.trials / max(comparison.first.time_to_target.trials, 1):.0%} "
            f"fewer trials ({comparison.relative_time_saving:.0%} less elapsed time)"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
