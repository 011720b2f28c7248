#!/usr/bin/env python3
"""Estimate how often budget-limited random search lands in the top-q quantile.

Enumerates the closed-form latency of every configuration, derives the top-q
threshold, then repeats seeded random-search runs and reports the empirical
hit rate next to the with-replacement analytic bound 1 - (1-q)^budget.

Example:
    python3 scripts/hit_rate_experiment.py \
        --space data/spaces/gc_heap_demo.json \
        --scenario data/scenarios/chain_demo.json \
        --budget 3 --repetitions 200 --q 0.2
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path

from microtune.engine import RandomStrategy, RunSpec, SimEvaluator, execute_run
from microtune.simulate import closed_form_latency, load_scenario
from microtune.space import index_to_config, parse_space
from microtune.tracing import MeasurementProtocol


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--space", required=True)
    parser.add_argument("--scenario", required=True)
    parser.add_argument("--budget", type=int, required=True)
    parser.add_argument("--repetitions", type=int, default=200)
    parser.add_argument("--q", type=float, default=0.05)
    parser.add_argument("--requests", type=int, default=6)
    parser.add_argument("--warmup", type=int, default=1)
    args = parser.parse_args()

    space = parse_space(Path(args.space).read_text())
    scenario = load_scenario(Path(args.scenario).read_text(), space)
    card = space.cardinality()

    latencies = sorted(
        closed_form_latency(scenario, index_to_config(space, i)) for i in range(card)
    )
    threshold = latencies[max(math.ceil(args.q * card) - 1, 0)]
    print(f"space cardinality {card}, top-{args.q:.0%} threshold {threshold:.6f} s")

    protocol = MeasurementProtocol(requests=args.requests, warmup=args.warmup)
    hits = 0
    for seed in range(args.repetitions):
        spec = RunSpec(
            space=space,
            strategy=RandomStrategy(seed=seed),
            protocol=protocol,
            evaluator=SimEvaluator(scenario=scenario, seed=seed),
            budget=min(args.budget, card),
        )
        state = execute_run(spec)
        if state.incumbent is None:
            continue
        found = closed_form_latency(scenario, state.incumbent.configuration)
        if found <= threshold:
            hits += 1

    analytic = 1 - (1 - args.q) ** args.budget
    print(
        f"hit rate: {hits}/{args.repetitions} = {hits / args.repetitions:.3f} "
        f"(analytic with-replacement bound {analytic:.3f})"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
