#!/usr/bin/env python3
"""Rack placement policy comparison on the simulated two-room data center.

Reports ratio-to-hindsight per policy across batch sizes, with and without
precedence constraints, plus the power-stranding trajectory of each policy.
"""

import argparse
import sys

import numpy as np

from make_configs import rack_grid
from rackalloc.harness.run import render_table, run_experiment
from rackalloc.milp import SolveLimits
from rackalloc.policies import run_myopic, run_oso
from rackalloc.rackplacement import (
    DemandConfig,
    RackPlacementFamily,
    gen_simulated_topology,
    power_stranding,
)


def stranding_trace(seed: int = 0) -> None:
    topo = gen_simulated_topology()
    fam = RackPlacementFamily(topo, DemandConfig(), horizon=30)
    reals = fam.realizations(seed=seed)
    lim = SolveLimits(time_limit=5.0, relative_gap=0.01)
    for name, traj in (
        ("myopic", run_myopic(fam, lim, realizations=reals)),
        ("oso-1", run_oso(fam, 1, np.random.default_rng(seed), lim, realizations=reals)),
    ):
        history = []
        series = []
        from rackalloc.rackplacement.model import PlacementDecision

        for t, rec in enumerate(traj.records):
            stage = []
            for d, r in zip(rec.decision, reals[t]):
                stage.append(
                    PlacementDecision(
                        d["id"], d["accepted"], d["row"], d["groups"],
                        r.reward if d["accepted"] else 0.0, r.power, r.cooling, r.racks,
                    )
                )
            history.append(stage)
            series.append(power_stranding(fam.state_after(history)))
        print(f"{name}: accepted value {traj.total_objective:.0f}, "
              f"final stranding {series[-1]:.4f}")


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--runs", type=int, default=2)
    parser.add_argument("--stranding-trace", action="store_true")
    args = parser.parse_args()
    if args.stranding_trace:
        stranding_trace()
        return 0
    cfg = rack_grid(args.runs)
    rows = run_experiment(cfg)
    print(render_table(rows))
    return 0


if __name__ == "__main__":
    sys.exit(main())
