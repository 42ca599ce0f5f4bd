"""Experiment driver: generate instances, run policy grids, aggregate.

Determinism: every instance and sampling stream is seeded from the config's
base seeds plus the (cell, instance, run) coordinates, aggregation happens
in sorted key order, and the CSV carries only content reproducible from the
seeds (timings go to the JSON summary).
"""

from __future__ import annotations

import csv
import io
import json
import zlib
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..allocation import (
    ResourceAllocationFamily,
    gen_gap,
    gen_general,
    gen_knapsack,
)
from ..binpacking import BatchedPackingFamily, BatchedPackingInstance
from ..milp import SolveLimits
from ..policies import PolicyFailure, run_ce, run_hindsight, run_myopic, run_oso
from ..rackplacement import (
    DemandConfig,
    PlacementObjectiveConfig,
    RackPlacementFamily,
    gen_simulated_topology,
)
from .config import CellSpec, ExperimentConfig
from .metrics import CSV_HEADER, MetricRow, summarize_excess, summarize_ratios


def _instance_seed(config: ExperimentConfig, cell_idx: int, inst_idx: int) -> int:
    ss = np.random.SeedSequence([config.instance_seed, cell_idx, inst_idx])
    return int(ss.generate_state(1)[0])


def _sampling_rng(config: ExperimentConfig, cell_idx: int, inst_idx: int, run_idx: int, policy: str):
    ss = np.random.SeedSequence(
        [config.sampling_seed, cell_idx, inst_idx, run_idx, zlib.crc32(policy.encode())]
    )
    return np.random.default_rng(ss)


def _build_family(cell: CellSpec, seed: int):
    kw = {}
    if cell.family == "knapsack":
        if cell.T is not None:
            kw["T"] = cell.T
        inst = gen_knapsack(B=cell.B, psi=cell.psi, seed=seed, **kw)
        return ResourceAllocationFamily(inst), inst
    if cell.family == "gap":
        if cell.T is not None:
            kw["T"] = cell.T
        inst = gen_gap(B=cell.B, psi=cell.psi, seed=seed, **kw)
        return ResourceAllocationFamily(inst), inst
    if cell.family == "general":
        if cell.T is not None:
            kw["T"] = cell.T
        inst = gen_general(B=cell.B, psi=cell.psi, seed=seed, **kw)
        return ResourceAllocationFamily(inst), inst
    if cell.family == "binpacking":
        inst = BatchedPackingInstance(cell.T, cell.q, 100, seed=seed)
        return BatchedPackingFamily(inst), inst
    if cell.family == "rackplacement":
        topo = gen_simulated_topology()
        demand = DemandConfig(batch_size=cell.batch or 5)
        horizon = (cell.items or 150) // (cell.batch or 5)
        fam = RackPlacementFamily(
            topo,
            demand,
            horizon,
            objective=PlacementObjectiveConfig(precedence=cell.precedence),
        )
        fam.realizations(seed=seed)
        return fam, None
    raise ValueError(cell.family)


def _realizations(family, cell: CellSpec):
    return family.realizations()


def _run_policy(family, policy, realizations, limits, rng, regularizer_weight):
    if policy == "myopic":
        return run_myopic(family, limits, realizations=realizations, regularizer_weight=regularizer_weight)
    if policy == "ce":
        return run_ce(family, limits, realizations=realizations, regularizer_weight=regularizer_weight)
    if policy.startswith("oso-"):
        return run_oso(
            family,
            int(policy[4:]),
            rng,
            limits,
            realizations=realizations,
            regularizer_weight=regularizer_weight,
        )
    raise ValueError(policy)


def _precedence_objective(traj, realizations) -> float:
    """Accepted requests up to (excluding) the first stage with a rejection."""
    total = 0.0
    for rec in traj.records:
        decisions = rec.decision
        rejected = any(not d["accepted"] for d in decisions)
        batch = realizations[rec.stage]
        total += sum(r.reward for r, d in zip(batch, decisions) if d["accepted"])
        if rejected:
            break
    return total


def run_instance_task(args: tuple) -> dict:
    """All runs for one (cell, instance); executed possibly in a worker."""
    config_json, cell_idx, inst_idx = args
    config = ExperimentConfig.from_json(config_json)
    cell = config.cells[cell_idx]
    seed = _instance_seed(config, cell_idx, inst_idx)
    family, _ = _build_family(cell, seed)
    realizations = _realizations(family, cell)

    stage_limits = SolveLimits(
        time_limit=config.solver.stage_time_limit, relative_gap=config.solver.relative_gap
    )
    hs_limits = SolveLimits(
        time_limit=config.solver.hindsight_time_limit, relative_gap=config.solver.hindsight_gap
    )
    reg_weight = 1.0 if cell.regularizer else 0.0

    out: dict = {
        "cell": cell.cell_id,
        "cell_idx": cell_idx,
        "instance": inst_idx,
        "hindsight": None,
        "runs": [],
        "trajectories": {},
        "error": None,
    }
    try:
        hs = run_hindsight(family, realizations, hs_limits)
    except PolicyFailure as exc:
        out["error"] = f"hindsight failed: {exc}"
        return out
    hs_value = hs.total_objective
    if cell.family == "rackplacement" and cell.precedence:
        hs_value = hs.total_objective  # offline packs everything it can; unchanged
    if hs_value == 0:
        out["error"] = "hindsight objective is zero; ratios undefined"
        return out
    out["hindsight"] = hs_value
    out["trajectories"]["hindsight"] = hs.to_jsonl(include_timing=False)

    for policy in config.policies:
        if policy == "hindsight":
            continue
        deterministic = policy in ("myopic", "ce")
        n_runs = 1 if deterministic else config.runs_per_instance
        for run_idx in range(n_runs):
            rng = _sampling_rng(config, cell_idx, inst_idx, run_idx, policy)
            traj = _run_policy(family, policy, realizations, stage_limits, rng, reg_weight)
            value = traj.total_objective
            if cell.family == "rackplacement" and cell.precedence:
                value = _precedence_objective(traj, realizations)
            wall = sum(r.wall_time for r in traj.records)
            out["runs"].append(
                {
                    "policy": policy,
                    "run": run_idx,
                    "value": value,
                    "hindsight": hs_value,
                    "wall_time": wall,
                }
            )
            key = f"{policy}#{run_idx}"
            out["trajectories"][key] = traj.to_jsonl(include_timing=False)
    return out


def aggregate(config: ExperimentConfig, results: list[dict]) -> list[MetricRow]:
    rows: list[MetricRow] = []
    by_cell: dict[str, list[dict]] = {}
    for r in results:
        by_cell.setdefault(r["cell"], []).append(r)
    for cell in config.cells:
        cell_results = [r for r in by_cell.get(cell.cell_id, []) if r["error"] is None]
        if not cell_results:
            continue
        policies = sorted({run["policy"] for r in cell_results for run in r["runs"]})
        for policy in policies:
            ratios, walls = [], []
            for r in sorted(cell_results, key=lambda x: x["instance"]):
                for run in r["runs"]:
                    if run["policy"] != policy:
                        continue
                    ratios.append(run["value"] / run["hindsight"])
                    walls.append(run["wall_time"])
            if not ratios:
                continue
            if cell.family == "binpacking":
                rows.append(summarize_excess(cell.cell_id, policy, ratios, walls))
            else:
                rows.append(summarize_ratios(cell.cell_id, policy, ratios, walls))
    return rows


def aggregate_from_logs(config: ExperimentConfig) -> list[MetricRow]:
    """Rebuilds the metric table from the stored trajectory logs alone."""
    from ..policies.family import Trajectory

    logs = Path(config.output_dir) / f"{config.name}_trajectories"
    if not logs.is_dir():
        raise FileNotFoundError(f"no trajectory logs under {logs}")
    results: dict[tuple[str, int], dict] = {}
    for path in sorted(logs.glob("*.jsonl")):
        cell_id, inst_part, policy_part = path.stem.split("__")
        inst_idx = int(inst_part[1:])
        traj = Trajectory.from_jsonl(path.read_text())
        rec = results.setdefault(
            (cell_id, inst_idx),
            {"cell": cell_id, "instance": inst_idx, "hindsight": None, "runs": [], "error": None},
        )
        cell = next(c for c in config.cells if c.cell_id == cell_id)
        if policy_part == "hindsight":
            rec["hindsight"] = traj.total_objective
        else:
            policy, run_idx = policy_part.rsplit("_", 1)
            value = traj.total_objective
            if cell.family == "rackplacement" and cell.precedence:
                value = _precedence_value_from_records(traj)
            rec["runs"].append(
                {
                    "policy": policy,
                    "run": int(run_idx),
                    "value": value,
                    "hindsight": None,  # filled below
                    "wall_time": 0.0,
                }
            )
    out = []
    for rec in results.values():
        if rec["hindsight"] in (None, 0):
            rec["error"] = "missing hindsight log"
            continue
        for run in rec["runs"]:
            run["hindsight"] = rec["hindsight"]
        out.append(rec)
    return aggregate(config, out)


def _precedence_value_from_records(traj) -> float:
    """Until-first-rejection objective recovered from a stored trajectory."""
    total = 0.0
    for rec in traj.records:
        total += rec.reward
        if any(not d["accepted"] for d in rec.decision):
            break
    return total


def render_csv(rows: list[MetricRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in sorted(rows, key=lambda r: (r.cell_id, r.policy)):
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def render_table(rows: list[MetricRow]) -> str:
    lines = [f"{'cell':<28} {'policy':<10} {'n':>4} {'mean':>10} {'se':>9}"]
    for r in sorted(rows, key=lambda x: (x.cell_id, x.policy)):
        lines.append(f"{r.cell_id:<28} {r.policy:<10} {r.n:>4} {r.mean:>10.4f} {r.se:>9.4f}")
    return "\n".join(lines) + "\n"


def run_experiment(config: ExperimentConfig, write_outputs: bool = True) -> list[MetricRow]:
    """Runs the grid; emits CSV, a human-readable table, raw trajectory
    logs, and a JSON summary (which carries the wall times)."""
    tasks = [
        (config.to_json(), cell_idx, inst_idx)
        for cell_idx in range(len(config.cells))
        for inst_idx in range(config.instances_per_cell)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run_instance_task, tasks))
    else:
        results = [run_instance_task(t) for t in tasks]

    rows = aggregate(config, results)
    if write_outputs:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{config.name}.csv").write_text(render_csv(rows))
        (out / f"{config.name}.txt").write_text(render_table(rows))
        logs = out / f"{config.name}_trajectories"
        logs.mkdir(exist_ok=True)
        for r in sorted(results, key=lambda x: (x["cell"], x["instance"])):
            for key, text in sorted(r["trajectories"].items()):
                safe = key.replace("#", "_")
                (logs / f"{r['cell']}__i{r['instance']}__{safe}.jsonl").write_text(text)
        summary = {
            "name": config.name,
            "errors": {
                f"{r['cell']}/i{r['instance']}": r["error"]
                for r in results
                if r["error"]
            },
            "wall_times": {
                f"{row.cell_id}/{row.policy}": row.mean_wall_time for row in rows
            },
        }
        (out / f"{config.name}_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return rows
