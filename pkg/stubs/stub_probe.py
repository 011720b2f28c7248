#!/usr/bin/env python3
"""Readiness probe: exit 0 once the ready file exists."""

import os
import sys

if __name__ == "__main__":
    sys.exit(0 if os.path.exists(sys.argv[1]) else 1)
