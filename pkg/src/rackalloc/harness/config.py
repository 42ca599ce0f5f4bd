"""Experiment configuration: one declarative file drives a policy grid."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

SCHEMA = "experiment/1"

FAMILIES = ("knapsack", "gap", "general", "binpacking", "rackplacement")
POLICIES = ("myopic", "ce", "hindsight")  # plus "oso-<S>"


def _valid_policy(name: str) -> bool:
    if name in POLICIES:
        return True
    if name.startswith("oso-"):
        tail = name[4:]
        return tail.isdigit() and int(tail) >= 1
    return False


@dataclass(frozen=True)
class CellSpec:
    """One grid cell; unused knobs stay at None for a given family."""

    cell_id: str
    family: str
    B: float | None = None
    psi: float | None = None
    T: int | None = None
    q: int | None = None  # batch of items (bin packing)
    batch: int | None = None  # requests per stage (rack placement)
    items: int | None = None  # total items (rack placement)
    precedence: bool = False
    regularizer: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")


@dataclass(frozen=True)
class SolverSettings:
    time_limit: float = 60.0
    relative_gap: float = 1e-4
    stage_time_limit: float = 5.0  # per-iteration cap for resolving policies
    hindsight_time_limit: float = 300.0
    hindsight_gap: float = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    cells: tuple[CellSpec, ...]
    policies: tuple[str, ...]
    instances_per_cell: int = 5
    runs_per_instance: int = 5  # sampling replications for the sampling policy
    instance_seed: int = 20240501
    sampling_seed: int = 777
    solver: SolverSettings = field(default_factory=SolverSettings)
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        if not self.cells:
            raise ValueError("config needs at least one cell")
        seen = set()
        for c in self.cells:
            if c.cell_id in seen:
                raise ValueError(f"duplicate cell id {c.cell_id!r}")
            seen.add(c.cell_id)
        for p in self.policies:
            if not _valid_policy(p):
                raise ValueError(f"unknown policy {p!r}")
        if self.instances_per_cell < 1 or self.runs_per_instance < 1:
            raise ValueError("replication counts must be positive")

    def to_json(self) -> str:
        doc = {
            "schema": SCHEMA,
            "name": self.name,
            "cells": [asdict(c) for c in self.cells],
            "policies": list(self.policies),
            "instances_per_cell": self.instances_per_cell,
            "runs_per_instance": self.runs_per_instance,
            "instance_seed": self.instance_seed,
            "sampling_seed": self.sampling_seed,
            "solver": asdict(self.solver),
            "output_dir": self.output_dir,
            "workers": self.workers,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise ValueError(f"unsupported schema {doc.get('schema')!r}")
        return ExperimentConfig(
            name=doc["name"],
            cells=tuple(CellSpec(**c) for c in doc["cells"]),
            policies=tuple(doc["policies"]),
            instances_per_cell=doc["instances_per_cell"],
            runs_per_instance=doc["runs_per_instance"],
            instance_seed=doc["instance_seed"],
            sampling_seed=doc["sampling_seed"],
            solver=SolverSettings(**doc["solver"]),
            output_dir=doc["output_dir"],
            workers=doc.get("workers", 1),
        )

    @staticmethod
    def load(path: str | Path) -> "ExperimentConfig":
        return ExperimentConfig.from_json(Path(path).read_text())
