"""Command line: generate instances, run experiment grids, re-aggregate
reports, and analyze session event logs.

Exit codes: 0 success, 2 validation error, 3 solver/run failure,
4 reported metrics disagree with the raw logs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ExperimentConfig
from .metrics import adoption_rate, bucket_series, stranding_increase
from .run import aggregate_from_logs, render_csv, render_table, run_experiment, run_instance_task

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_ACCEPTANCE = 4


def _cmd_generate(args) -> int:
    try:
        config = ExperimentConfig.load(args.config)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    from .run import _build_family, _instance_seed

    out = Path(args.output or config.output_dir) / f"{config.name}_instances"
    out.mkdir(parents=True, exist_ok=True)
    for cell_idx, cell in enumerate(config.cells):
        for inst_idx in range(config.instances_per_cell):
            seed = _instance_seed(config, cell_idx, inst_idx)
            _, inst = _build_family(cell, seed)
            if inst is None:
                doc = json.dumps(
                    {"family": cell.family, "cell": cell.cell_id, "seed": seed},
                    sort_keys=True,
                )
            else:
                doc = inst.to_json()
            (out / f"{cell.cell_id}__i{inst_idx}.json").write_text(doc)
    print(f"wrote instances under {out}")
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        config = ExperimentConfig.load(args.config)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        rows = run_experiment(config)
    except Exception as exc:  # solver/runtime failure
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(render_table(rows))
    summary = Path(config.output_dir) / f"{config.name}_summary.json"
    if summary.exists():
        errors = json.loads(summary.read_text()).get("errors", {})
        if errors:
            print(f"{len(errors)} cell-instance(s) unusable: {sorted(errors)}", file=sys.stderr)
    return EXIT_OK


def _cmd_report(args) -> int:
    """Re-aggregates metrics from the raw trajectory logs and cross-checks the CSV."""
    try:
        config = ExperimentConfig.load(args.config)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        rows = aggregate_from_logs(config)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    text = render_csv(rows)
    existing = Path(config.output_dir) / f"{config.name}.csv"
    print(render_table(rows))
    if existing.exists() and existing.read_text() != text:
        print("recomputed metrics disagree with the stored CSV", file=sys.stderr)
        return EXIT_ACCEPTANCE
    return EXIT_OK


def _cmd_analyze_log(args) -> int:
    path = Path(args.log)
    if not path.exists():
        print(f"no such log: {path}", file=sys.stderr)
        return EXIT_VALIDATION
    events = [json.loads(ln) for ln in path.read_text().splitlines() if ln.strip()]
    rate = adoption_rate(events)
    print(f"adoption_rate: {'absent' if rate is None else repr(rate)}")
    reasons: dict[str, int] = {}
    for e in events:
        if e.get("kind") == "rejected":
            reason = e.get("payload", {}).get("reason", "other")
            reasons[reason] = reasons.get(reason, 0) + 1
    print(f"rejections_by_reason: {json.dumps(reasons, sort_keys=True)}")
    series = bucket_series(events, "stranding", args.window)
    if len(series) >= 2:
        print(f"stranding_series: {series}")
        print(f"stranding_increase: {stranding_increase(series)!r}")
    else:
        print("stranding_increase: absent (need two windows)")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rackalloc", description="online placement experiment harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="materialize instances for a config")
    p.add_argument("config")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("run", help="run a policy grid from a config file")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="recompute metrics and verify the CSV")
    p.add_argument("config")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("analyze-log", help="adoption and stranding analytics from a session event log")
    p.add_argument("log")
    p.add_argument("--window", type=float, default=3600.0, help="bucket width in seconds")
    p.set_defaults(func=_cmd_analyze_log)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
