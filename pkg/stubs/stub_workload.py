#!/usr/bin/env python3
"""Workload driver for external-evaluator fixtures.

Writes ``--count`` single-span traces with a fixed duration to the trace file
(JSON Lines). Fixture switches emulate the failure modes:

  --fail-on-flag TEXT  exit 2 when TEXT occurs in the forwarded flags
  --sleep-s S          stall before writing (trips the trial timeout)
  --count N            write fewer traces than the protocol requires
  --exit-code K        exit nonzero after writing
"""

import argparse
import json
import sys
import time


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--trace-file", required=True)
    parser.add_argument("--count", type=int, default=50)
    parser.add_argument("--duration-s", type=float, default=0.81)
    parser.add_argument("--service", default="svc")
    parser.add_argument("--sleep-s", type=float, default=0.0)
    parser.add_argument("--exit-code", type=int, default=0)
    parser.add_argument("--fail-on-flag", default=None)
    # forwarded runtime/container flags (e.g. -Xmx512m) land in `unknown`
    args, unknown = parser.parse_known_args()

    if args.fail_on_flag and any(args.fail_on_flag in flag for flag in unknown):
        return 2
    if args.sleep_s > 0:
        time.sleep(args.sleep_s)

    with open(args.trace_file, "w") as fh:
        for i in range(args.count):
            trace = {
                "trace_id": f"req-{i}",
                "spans": [
                    {
                        "span_id": "root",
                        "parent_id": None,
                        "service": args.service,
                        "start_s": 0.0,
                        "duration_s": args.duration_s,
                    }
                ],
            }
            fh.write(json.dumps(trace) + "\n")
    return args.exit_code


if __name__ == "__main__":
    sys.exit(main())
