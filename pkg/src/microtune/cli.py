"""Command-line interface.

Subcommands: validate-space, cardinality, run, report, compare, serve.
`run` executes a run spec end-to-end and writes the JSON-Lines trial log;
`report`/`compare` operate on persisted logs; `serve` starts the HTTP API.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .engine import execute_run, load_run_spec, run_spec_to_doc
from .errors import MicrotuneError
from .space import parse_space
from .store import (
    ComparisonReport,
    RunReport,
    TrialLogWriter,
    compare_runs,
    comparison_to_doc,
    export_series,
    report_from_log,
    report_to_doc,
)
from .trial import Trial


def _fmt_config(configuration: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in configuration.items())


def cmd_validate_space(args: argparse.Namespace) -> int:
    space = parse_space(Path(args.space_file).read_text())
    print(
        f"ok: {space.name}: {len(space.parameters)} parameters, "
        f"cardinality {space.cardinality()}"
    )
    return 0


def cmd_cardinality(args: argparse.Namespace) -> int:
    space = parse_space(Path(args.space_file).read_text())
    print(space.cardinality())
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    spec_path = Path(args.run_spec)
    spec = load_run_spec(spec_path.read_text(), base_dir=spec_path.parent)
    run_id = args.run_id or f"run-{os.getpid()}"
    log_path = Path(args.log)

    def progress(trial: Trial) -> None:
        if args.quiet:
            return
        label = "baseline" if trial.baseline else f"trial {trial.trial_id}"
        mean = f"mean {trial.stats.mean_s:.6f} s" if trial.stats else "no stats"
        detail = trial.status.value if trial.complete else f"incomplete ({trial.reason})"
        print(f"{label}: config #{trial.config_index} {detail}, {mean}")

    with TrialLogWriter(log_path, run_id, run_spec_to_doc(spec)) as writer:

        def sink(trial: Trial) -> None:
            writer.append(trial)
            progress(trial)

        state = execute_run(spec, sink=sink, run_id=run_id)
        writer.close(state.status.value)

    print(f"run {run_id} {state.status.value}: log written to {log_path}")
    if state.stop_cause:
        print(f"cause: {state.stop_cause}", file=sys.stderr)
        return 1
    if state.baseline_trial is not None and state.baseline_trial.complete:
        print(f"baseline mean {state.baseline_trial.stats.mean_s:.6f} s")
    if state.incumbent is not None:
        best = state.incumbent
        print(
            f"best mean {best.stats.mean_s:.6f} s "
            f"(config #{best.config_index}: {_fmt_config(best.configuration)})"
        )
        if state.baseline_trial is not None and state.baseline_trial.complete:
            base = state.baseline_trial.stats.mean_s
            pct = 100.0 * (base - best.stats.mean_s) / base
            print(f"improvement {pct:.4f}% vs baseline")
    return 0


def _print_report(report: RunReport) -> None:
    strategy = (report.strategy or {}).get("type", "?")
    print(f"run:            {report.run_id}")
    print(f"strategy:       {strategy}")
    print(f"space:          {report.space_name}")
    print(f"baseline mean:  {report.baseline_mean:.6f} s")
    if report.best is not None:
        print(
            f"best mean:      {report.best.stats.mean_s:.6f} s "
            f"(config #{report.best.config_index}: {_fmt_config(report.best.configuration)})"
        )
        print(f"improvement:    {report.improvement_percent:.4f}%")
    else:
        print("best mean:      none (no complete trials)")
    print(f"trials:         {report.complete_count} complete, {report.incomplete_count} incomplete")
    print(f"total elapsed:  {report.total_elapsed_s:.3f} s")


def cmd_report(args: argparse.Namespace) -> int:
    report = report_from_log(Path(args.log))
    if args.format == "text":
        _print_report(report)
        return 0
    if args.format == "json":
        document = json.dumps(report_to_doc(report), indent=2) + "\n"
    else:
        document = export_series(report, args.format)
    if args.out:
        Path(args.out).write_text(document)
        print(f"wrote {args.format} to {args.out}")
    else:
        sys.stdout.write(document)
    return 0


def _print_comparison(cmp: ComparisonReport) -> None:
    if cmp.global_best_mean_s is not None:
        threshold = cmp.global_best_mean_s * (1 + cmp.q)
        print(
            f"global best mean: {cmp.global_best_mean_s:.6f} s "
            f"(q={cmp.q:g}, target <= {threshold:.6f} s)"
        )
    for label, side in (("first", cmp.first), ("second", cmp.second)):
        strategy = (side.strategy or {}).get("type", "?")
        best = f"{side.best_mean_s:.6f} s" if side.best_mean_s is not None else "none"
        line = f"{label}: {side.run_id} ({strategy}): best {best}"
        if side.improvement_percent is not None:
            line += f", improvement {side.improvement_percent:.4f}%"
        if side.time_to_target is not None:
            line += (
                f", target reached after {side.time_to_target.trials} trials"
                f" / {side.time_to_target.elapsed_s:.3f} s"
            )
        else:
            line += ", target never reached"
        print(line)
    if cmp.relative_time_saving is not None:
        print(f"relative time saving (second vs first): {cmp.relative_time_saving:.4f}")
    else:
        print("relative time saving: n/a")


def cmd_compare(args: argparse.Namespace) -> int:
    report_a = report_from_log(Path(args.log_a))
    report_b = report_from_log(Path(args.log_b))
    cmp = compare_runs(report_a, report_b, q=args.q)
    if args.json:
        print(json.dumps(comparison_to_doc(cmp), indent=2))
    else:
        _print_comparison(cmp)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app, parse_listen

    data_dir = Path(args.data_dir or os.environ.get("MICROTUNE_DATA_DIR", "."))
    listen = args.listen or os.environ.get("MICROTUNE_LISTEN", "127.0.0.1:8800")
    host, port = parse_listen(listen)
    app = create_app(data_dir)
    print(f"serving on http://{host}:{port} (data dir: {data_dir})")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microtune",
        description="Grid/random-search latency optimizer for microservice configurations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-space", help="validate a search-space file")
    p.add_argument("space_file")
    p.set_defaults(func=cmd_validate_space)

    p = sub.add_parser("cardinality", help="print the cardinality of a space file")
    p.add_argument("space_file")
    p.set_defaults(func=cmd_cardinality)

    p = sub.add_parser("run", help="execute a run spec and write its trial log")
    p.add_argument("run_spec")
    p.add_argument("--log", required=True, help="trial log output path (JSON Lines)")
    p.add_argument("--run-id", default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="build a report from a trial log")
    p.add_argument("log")
    p.add_argument(
        "--format", choices=["text", "json", "csv", "svg"], default="text"
    )
    p.add_argument("--out", default=None, help="write the document to a file")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare", help="compare two run logs")
    p.add_argument("log_a")
    p.add_argument("log_b")
    p.add_argument("--q", type=float, default=0.05, help="near-optimal tolerance")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="start the HTTP control plane")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--listen", default=None, help="HOST:PORT")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MicrotuneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
