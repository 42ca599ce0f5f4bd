"""Problem-family contract for the multi-stage policy loop, and trajectories.

A family owns the per-stage objective and feasible set: it builds the stage
integer program from the committed history, the observed realization, and
sampled (or mean) future paths, and decodes solver assignments back into
stage decisions. Families are immutable once constructed and safe to share
across parallel replications.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from ..milp import IpModel, SolveOutcome

Realization = Any
Decision = Any
Decoder = Callable[[SolveOutcome], Decision]


class ProblemFamily(ABC):
    """Per-stage objective/feasible-set definition for the policy loop.

    ``sampling_discipline`` selects how sample paths are drawn: fresh at
    every stage (``"per_stage"``) or once up-front for the whole horizon
    (``"up_front"``, used by batched bin packing).
    """

    sense: str = "max"  # "max" reward or "min" cost
    sampling_discipline: str = "per_stage"

    @property
    @abstractmethod
    def horizon(self) -> int: ...

    @abstractmethod
    def sample_stage(self, rng: np.random.Generator) -> Realization: ...

    def sample_future_path(self, rng: np.random.Generator, length: int) -> list[Realization]:
        """One i.i.d. path of the given length; families may vectorize."""
        return [self.sample_stage(rng) for _ in range(length)]

    @abstractmethod
    def mean_stage(self) -> Realization: ...

    @abstractmethod
    def build_ip(
        self,
        history: Sequence[Decision],
        observed: Realization,
        futures: Sequence[Sequence[Realization]],
        regularizer_weight: float = 0.0,
    ) -> tuple[IpModel, Decoder]:
        """Stage problem given committed history; empty ``futures`` is myopic."""

    @abstractmethod
    def build_hindsight_ip(
        self, realizations: Sequence[Realization]
    ) -> tuple[IpModel, Decoder]:
        """Full-information offline problem; decoder returns the decision list."""

    @abstractmethod
    def stage_reward(self, decision: Decision, realization: Realization) -> float: ...

    @abstractmethod
    def occupancy(self, history: Sequence[Decision]) -> np.ndarray:
        """Cumulative per-resource consumption of the committed history."""

    @abstractmethod
    def capacities(self) -> np.ndarray: ...

    # serialization hooks for trajectory logs; defaults cover plain payloads
    def encode_realization(self, realization: Realization) -> Any:
        return realization

    def encode_decision(self, decision: Decision) -> Any:
        return decision


@dataclass(frozen=True)
class StageRecord:
    stage: int
    realization: Any
    decision: Any
    reward: float
    wall_time: float
    occupancy: tuple[float, ...]


@dataclass(frozen=True)
class Trajectory:
    policy: str
    records: tuple[StageRecord, ...]
    total_objective: float
    meta: dict = field(default_factory=dict)

    def rewards(self) -> list[float]:
        return [r.reward for r in self.records]

    def to_jsonl(self, include_timing: bool = True) -> str:
        """One stage per line; final line is the run summary.

        ``include_timing=False`` drops wall times, leaving only content that
        is reproducible bit-for-bit from the seeds.
        """
        lines = []
        for r in self.records:
            row = {
                "stage": r.stage,
                "realization": r.realization,
                "decision": r.decision,
                "reward": r.reward,
                "occupancy": list(r.occupancy),
            }
            if include_timing:
                row["wall_time"] = r.wall_time
            lines.append(json.dumps(row, sort_keys=True))
        lines.append(
            json.dumps(
                {
                    "summary": {
                        "policy": self.policy,
                        "total_objective": self.total_objective,
                        "stages": len(self.records),
                        **self.meta,
                    }
                },
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_jsonl(text: str) -> "Trajectory":
        rows = [json.loads(ln) for ln in text.splitlines() if ln.strip()]
        summary = rows[-1]["summary"]
        records = tuple(
            StageRecord(
                stage=r["stage"],
                realization=r["realization"],
                decision=r["decision"],
                reward=r["reward"],
                wall_time=r.get("wall_time", 0.0),
                occupancy=tuple(r["occupancy"]),
            )
            for r in rows[:-1]
        )
        meta = {
            k: v
            for k, v in summary.items()
            if k not in ("policy", "total_objective", "stages")
        }
        return Trajectory(
            policy=summary["policy"],
            records=records,
            total_objective=summary["total_objective"],
            meta=meta,
        )
