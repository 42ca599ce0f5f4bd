#!/usr/bin/env python3
"""Regenerate the comparative benchmark tables at desk scale.

Runs the knapsack, assignment, and general allocation grids plus the bin
packing grid, printing each table as it completes. Expect hours on a small
machine; pass --families to run a subset.
"""

import argparse
import sys

from make_configs import binpacking_grid, gap_grid, general_grid, knapsack_grid
from rackalloc.harness.run import render_table, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument(
        "--families",
        nargs="+",
        default=["knapsack", "gap", "general", "binpacking"],
        choices=["knapsack", "gap", "general", "binpacking"],
    )
    parser.add_argument("--runs", type=int, default=2, help="sampling runs per instance")
    args = parser.parse_args()
    builders = {
        "knapsack": knapsack_grid,
        "gap": gap_grid,
        "general": general_grid,
        "binpacking": binpacking_grid,
    }
    for fam in args.families:
        cfg = builders[fam](args.runs)
        print(f"=== {fam}: {len(cfg.cells)} cells, "
              f"{cfg.instances_per_cell} instances x {cfg.runs_per_instance} runs")
        rows = run_experiment(cfg)
        print(render_table(rows))
    return 0


if __name__ == "__main__":
    sys.exit(main())
