"""Policy-loop family for online batched bin packing.

Minimization family with the up-front sampling discipline: every sample
path's batches are drawn once at the start of the run, and stage t sees the
path tails. The certainty-equivalent future is a path of batches of the
rounded mean size (the mean item size is fractional, which the integral
size grid cannot represent; rounding is this artifact's interpretation).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..milp import SolveLimits
from ..policies.engine import run_oso
from ..policies.family import ProblemFamily
from .flow import FlowModelState, build_flow_ip, _network
from .instance import BatchedPackingInstance


@dataclass(frozen=True)
class PackDecision:
    arc_flows: tuple[float, ...]
    bins_opened: int


class BatchedPackingFamily(ProblemFamily):
    sense = "min"
    sampling_discipline = "up_front"

    def __init__(self, instance: BatchedPackingInstance):
        self.instance = instance
        self._net = _network(instance.bin_capacity)

    @property
    def horizon(self) -> int:
        return self.instance.T

    def sample_stage(self, rng: np.random.Generator) -> tuple[int, ...]:
        batch = self.instance.sizes.sample_batch(rng, self.instance.q)
        return tuple(s for s in batch if s > 0)

    def mean_stage(self) -> tuple[int, ...]:
        mean = int(round(self.instance.sizes.mean_size()))
        mean = max(1, min(mean, self.instance.bin_capacity))
        return tuple([mean] * self.instance.q)

    def realizations(self) -> list[tuple[int, ...]]:
        return self.instance.batches()

    def capacities(self) -> np.ndarray:
        return np.zeros(0)  # bins are never scarce; no capacity vector

    def occupancy(self, history: Sequence[PackDecision]) -> np.ndarray:
        return np.zeros(0)

    def state_after(self, history: Sequence[PackDecision]) -> FlowModelState:
        state = FlowModelState.empty(self.instance.bin_capacity)
        for dec in history:
            state = state.advance(np.asarray(dec.arc_flows), dec.bins_opened)
        return state

    def build_ip(
        self,
        history: Sequence[PackDecision],
        observed: tuple[int, ...],
        futures: Sequence[Sequence[tuple[int, ...]]],
        regularizer_weight: float = 0.0,
    ):
        state = self.state_after(history)
        counts = self._net.size_counts(observed)
        paths = [[b for b in path if b] for path in futures]
        paths = [p for p in paths if p]
        model, decode_flow = build_flow_ip(
            state, counts, paths, regularizer_weight=regularizer_weight
        )

        def decode(outcome) -> PackDecision:
            flows, bins = decode_flow(outcome)
            return PackDecision(tuple(float(v) for v in flows), bins)

        return model, decode

    def build_hindsight_ip(self, realizations: Sequence[tuple[int, ...]]):
        state = FlowModelState.empty(self.instance.bin_capacity)
        all_items = [s for batch in realizations for s in batch]
        counts = self._net.size_counts(all_items)
        model, decode_flow = build_flow_ip(state, counts, [])

        def decode(outcome) -> PackDecision:
            flows, bins = decode_flow(outcome)
            return PackDecision(tuple(float(v) for v in flows), bins)

        return model, decode

    def stage_reward(self, decision: PackDecision, realization) -> float:
        return float(decision.bins_opened)

    def encode_realization(self, realization):
        return list(realization)

    def encode_decision(self, decision):
        if isinstance(decision, PackDecision):
            nz = {
                str(i): float(v)
                for i, v in enumerate(decision.arc_flows)
                if v
            }
            return {"bins_opened": decision.bins_opened, "arcs": nz}
        return decision


def run_batched_oso(
    instance: BatchedPackingInstance,
    seed: int,
    regularize: bool = False,
    limits: SolveLimits = SolveLimits(time_limit=100.0, relative_gap=1e-4),
    sample_paths: int = 1,
):
    """Sampling policy on a packing instance: all future batches drawn
    up-front, one aggregated extension block per path at each stage."""
    fam = BatchedPackingFamily(instance)
    return run_oso(
        fam,
        sample_paths,
        np.random.default_rng(seed),
        limits,
        realizations=fam.realizations(),
        regularizer_weight=1.0 if regularize else 0.0,
    )
