#!/usr/bin/env python3
"""Teardown marker: append one line so tests can count invocations."""

import sys

if __name__ == "__main__":
    with open(sys.argv[1], "a") as fh:
        fh.write("teardown\n")
