#!/usr/bin/env python3
"""
Query-propagation 3D multi-object tracker: simulate, track, evaluate, benchmark.

Run `python bev_tracker.py --help` for the subcommands.
"""
import sys

from bevtrack.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
