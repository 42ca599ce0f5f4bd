#!/usr/bin/env python3
"""Emit the canonical experiment configs into ./configs/.

Desk-scale defaults: 5 instances x 2 sampling runs per cell (10 runs).
Pass --full for the paper-scale replication counts (5 x 5).
"""

import argparse
from pathlib import Path

from rackalloc.harness import CellSpec, ExperimentConfig
from rackalloc.harness.config import SolverSettings


def knapsack_grid(runs: int) -> ExperimentConfig:
    cells = [
        CellSpec(f"knap_p{int(psi*100):02d}_b{int(B*10):02d}", "knapsack", B=B, psi=psi)
        for psi in (0.0, 0.25)
        for B in (0.1, 0.2, 0.3, 0.4)
    ]
    return ExperimentConfig(
        name="knapsack",
        cells=tuple(cells),
        policies=("myopic", "ce", "oso-1", "oso-5"),
        instances_per_cell=5,
        runs_per_instance=runs,
        output_dir="results/knapsack",
        solver=SolverSettings(
            stage_time_limit=10.0, relative_gap=1e-4,
            hindsight_time_limit=60.0, hindsight_gap=1e-6,
        ),
    )


def gap_grid(runs: int) -> ExperimentConfig:
    cells = [
        CellSpec(f"gap_p{int(psi*100):02d}_b{int(B*10):02d}", "gap", B=B, psi=psi)
        for psi in (0.0, 0.25)
        for B in (0.2, 0.3, 0.4, 0.5)
    ]
    return ExperimentConfig(
        name="gap",
        cells=tuple(cells),
        policies=("myopic", "ce", "oso-1", "oso-5"),
        instances_per_cell=5,
        runs_per_instance=runs,
        output_dir="results/gap",
        solver=SolverSettings(
            stage_time_limit=5.0, relative_gap=1e-3,
            hindsight_time_limit=120.0, hindsight_gap=1e-4,
        ),
    )


def general_grid(runs: int) -> ExperimentConfig:
    cells = [
        CellSpec(f"gen_p{int(psi*100):02d}_b{int(B*10):02d}", "general", B=B, psi=psi)
        for psi in (0.0, 0.25)
        for B in (0.1, 0.2, 0.3)
    ]
    return ExperimentConfig(
        name="general",
        cells=tuple(cells),
        policies=("myopic", "ce", "oso-1", "oso-5"),
        instances_per_cell=5,
        runs_per_instance=runs,
        output_dir="results/general",
        solver=SolverSettings(
            stage_time_limit=3.0, relative_gap=0.01,
            hindsight_time_limit=300.0, hindsight_gap=0.01,
        ),
    )


def binpacking_grid(runs: int) -> ExperimentConfig:
    cells = [
        CellSpec(f"bp_T{T}_q{q}{'_reg' if reg else ''}", "binpacking", T=T, q=q, regularizer=reg)
        for (T, q) in ((16, 64), (32, 32), (64, 16))
        for reg in (False, True)
    ]
    return ExperimentConfig(
        name="binpacking",
        cells=tuple(cells),
        policies=("myopic", "ce", "oso-1", "oso-5"),
        instances_per_cell=5,
        runs_per_instance=runs,
        output_dir="results/binpacking",
        solver=SolverSettings(
            stage_time_limit=100.0, relative_gap=1e-4,
            hindsight_time_limit=300.0, hindsight_gap=0.0,
        ),
    )


def rack_grid(runs: int) -> ExperimentConfig:
    cells = [
        CellSpec(
            f"rack_b{batch}{'_prec' if prec else ''}",
            "rackplacement",
            batch=batch,
            items=150,
            precedence=prec,
        )
        for batch in (1, 5, 10)
        for prec in (False, True)
    ]
    return ExperimentConfig(
        name="rackplacement",
        cells=tuple(cells),
        policies=("myopic", "ce", "oso-1"),
        instances_per_cell=5,
        runs_per_instance=runs,
        output_dir="results/rackplacement",
        solver=SolverSettings(
            stage_time_limit=5.0, relative_gap=0.01,
            hindsight_time_limit=300.0, hindsight_gap=0.01,
        ),
    )


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--full", action="store_true", help="paper-scale replication counts")
    parser.add_argument("--out", default="configs")
    args = parser.parse_args()
    runs = 5 if args.full else 2
    out = Path(args.out)
    out.mkdir(exist_ok=True)
    for cfg in (
        knapsack_grid(runs),
        gap_grid(runs),
        general_grid(runs),
        binpacking_grid(runs),
        rack_grid(runs),
    ):
        path = out / f"{cfg.name}.json"
        path.write_text(cfg.to_json())
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
