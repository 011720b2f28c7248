#!/usr/bin/env python3
"""Stand-in service process for external-evaluator fixtures.

Default behavior: write the ready file, then idle until terminated. The
rendered runtime/container flags arrive as ordinary arguments and are ignored.

Fixture switches:
  --exit-now     exit 1 immediately (a target that dies before readiness)
  --never-ready  idle without ever writing the ready file
"""

import argparse
import sys
import time


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--ready-file", default=None)
    parser.add_argument("--exit-now", action="store_true")
    parser.add_argument("--never-ready", action="store_true")
    # forwarded runtime/container flags (e.g. -Xmx512m) land in `unknown`
    args, _unknown = parser.parse_known_args()

    if args.exit_now:
        return 1
    if not args.never_ready and args.ready_file:
        with open(args.ready_file, "w") as fh:
            fh.write("ready\n")
    while True:
        time.sleep(0.2)


if __name__ == "__main__":
    sys.exit(main())
