"""Policy-loop family for online rack placement."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..policies.family import ProblemFamily
from .demand import DemandConfig, DemandRequest, sample_demand
from .model import PlacementDecision, PlacementObjectiveConfig, build_placement_ip
from .resources import ResourceNodeSet
from .state import PlacementState
from .topology import DataCenterTopology

Batch = tuple[DemandRequest, ...]


class RackPlacementFamily(ProblemFamily):
    sense = "max"
    sampling_discipline = "per_stage"

    def __init__(
        self,
        topology: DataCenterTopology,
        demand: DemandConfig,
        horizon: int,
        objective: PlacementObjectiveConfig | None = None,
        batches: list[Batch] | None = None,
    ):
        self.topology = topology
        self.demand = demand
        self._horizon = horizon
        self.objective = objective or PlacementObjectiveConfig()
        self.resources = ResourceNodeSet(topology)
        self._batches = batches
        self._sample_counter = 0

    @property
    def horizon(self) -> int:
        return self._horizon

    def sample_stage(self, rng: np.random.Generator) -> Batch:
        self._sample_counter += 1
        return sample_demand(
            self.demand, rng, prefix=f"s{self._sample_counter}_"
        )

    def mean_stage(self) -> Batch:
        mean = self.demand.mean_request()
        return tuple([mean] * self.demand.batch_size)

    def realizations(self, seed: int | None = None) -> list[Batch]:
        if self._batches is None:
            if seed is None:
                raise ValueError("need explicit batches or a seed")
            rng = np.random.default_rng(seed)
            self._batches = [
                sample_demand(self.demand, rng, prefix=f"t{t}_")
                for t in range(self._horizon)
            ]
        return self._batches

    def capacities(self) -> np.ndarray:
        return self.resources.capacities

    def state_after(self, history: Sequence[list[PlacementDecision]]) -> PlacementState:
        state = PlacementState(self.topology, self.resources)
        for stage in history:
            for dec in stage:
                if dec.accepted:
                    req = DemandRequest(
                        dec.request_id, dec.racks, dec.power, dec.cooling, dec.reward
                    )
                    state.place(req, dec.row, dec.group_counts)
        return state

    def occupancy(self, history: Sequence[list[PlacementDecision]]) -> np.ndarray:
        return self.state_after(history).occupancy

    def build_ip(
        self,
        history: Sequence[list[PlacementDecision]],
        observed: Batch,
        futures: Sequence[Sequence[Batch]],
        regularizer_weight: float = 0.0,
    ):
        state = self.state_after(history)
        return build_placement_ip(state, observed, futures, self.objective)

    def build_hindsight_ip(self, realizations: Sequence[Batch]):
        # full information: all batches current, none sampled
        state = PlacementState(self.topology, self.resources)
        flat: list[DemandRequest] = [r for batch in realizations for r in batch]
        model, decode_flat = build_placement_ip(
            state, tuple(flat), [], PlacementObjectiveConfig()
        )

        def decode(outcome) -> list[list[PlacementDecision]]:
            decisions = decode_flat(outcome)
            by_id = {d.request_id: d for d in decisions}
            out: list[list[PlacementDecision]] = []
            for batch in realizations:
                out.append([by_id[r.id] for r in batch])
            return out

        return model, decode

    def stage_reward(self, decision: list[PlacementDecision], realization: Batch) -> float:
        return float(sum(d.reward for d in decision if d.accepted))

    def encode_realization(self, realization: Batch):
        return [
            {
                "id": r.id,
                "racks": r.racks,
                "power": round(r.power, 9),
                "cooling": round(r.cooling, 9),
                "reward": r.reward,
            }
            for r in realization
        ]

    def encode_decision(self, decision):
        if isinstance(decision, list) and decision and isinstance(decision[0], list):
            return [self.encode_decision(d) for d in decision]
        return [
            {
                "id": d.request_id,
                "accepted": d.accepted,
                "row": d.row,
                "groups": d.group_counts,
            }
            for d in decision
        ]
