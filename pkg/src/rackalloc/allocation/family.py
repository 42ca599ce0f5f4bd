"""Policy-loop family for online resource allocation.

Stage model at time t (maximization): pick at most one supply node for the
observed item, plus one supply per sampled future item per path, subject to
per-path capacity on the residual budget. The future objective is weighted
1/S across paths. A mean-path future (every element the same object, as the
certainty-equivalent policy sends it) collapses to integer copy-counts of
the mean item, which is an exact reformulation since identical copies are
exchangeable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..milp import BINARY, INTEGER, IpModel, ModelBuilder, SolveOutcome
from ..policies.family import ProblemFamily
from .instance import ResourceAllocInstance, StageSample


@dataclass(frozen=True)
class AllocDecision:
    supply: int | None  # chosen supply node, None = rejected
    reward: float
    consumption: tuple[float, ...]  # realized A row of the chosen supply (zeros if rejected)


def _is_mean_path(path: Sequence[StageSample]) -> bool:
    return len(path) > 0 and all(p is path[0] for p in path)


class ResourceAllocationFamily(ProblemFamily):
    sense = "max"
    sampling_discipline = "per_stage"

    def __init__(self, instance: ResourceAllocInstance):
        self.instance = instance

    @property
    def horizon(self) -> int:
        return self.instance.T

    def sample_stage(self, rng: np.random.Generator) -> StageSample:
        return self.instance.dist.sample(rng)

    def sample_future_path(self, rng: np.random.Generator, length: int) -> list[StageSample]:
        return self.instance.dist.sample_batch(rng, length)

    def mean_stage(self) -> StageSample:
        return self.instance.dist.mean()

    def realizations(self) -> list[StageSample]:
        return self.instance.stages()

    def capacities(self) -> np.ndarray:
        return self.instance.capacities

    def occupancy(self, history: Sequence[AllocDecision]) -> np.ndarray:
        occ = np.zeros(self.instance.d)
        for dec in history:
            occ += np.asarray(dec.consumption)
        return occ

    def _residual(self, history: Sequence[AllocDecision]) -> np.ndarray:
        # clip tolerance-level overshoot from committed incumbents
        return np.maximum(self.instance.capacities - self.occupancy(history), 0.0)

    def build_ip(
        self,
        history: Sequence[AllocDecision],
        observed: StageSample,
        futures: Sequence[Sequence[StageSample]],
        regularizer_weight: float = 0.0,
    ):
        m, d = self.instance.m, self.instance.d
        resid = self._residual(history)
        S = max(len(futures), 1)

        # sampled future items are stand-ins; when the solver is exactly
        # indifferent between serving the observed item and an identical
        # sampled one, prefer the real one. The mean path keeps the plain
        # objective so the certainty-equivalent policy stays untouched.
        sampled_futures = any(path and not _is_mean_path(list(path)) for path in futures)
        bias = 1e-4 if sampled_futures else 0.0

        b = ModelBuilder(sense="max")
        x_cur = b.add_vars("x", m, 0, 1, BINARY)
        b.add_objective_terms(x_cur, observed.rewards * (1.0 + bias))
        if m > 1:
            b.add_constr(x_cur, np.ones(m), "<=", 1.0, name="assign")

        for s, path in enumerate(futures):
            # stages sorted by a fixed lexicographic key: canonicalized model
            path = sorted(path, key=lambda st: st.key())
            if _is_mean_path(path):
                mean = path[0]
                n = b.add_vars(f"n{s}", m, 0, float(len(path)), INTEGER)
                b.add_objective_terms(n, mean.rewards / len(futures))
                b.add_constr(n, np.ones(m), "<=", float(len(path)), name=f"count{s}")
                for k in range(d):
                    idx = np.concatenate([x_cur, n])
                    cf = np.concatenate([observed.consumption[:, k], mean.consumption[:, k]])
                    nz = cf != 0.0
                    b.add_constr(idx[nz], cf[nz], "<=", resid[k], name=f"cap{s}_{k}")
            else:
                n_f = len(path)
                xf = b.add_vars(f"f{s}", n_f * m, 0, 1, BINARY)
                rewards_flat = (
                    np.concatenate([st.rewards for st in path])
                    if n_f
                    else np.zeros(0)
                )
                b.add_objective_terms(xf, rewards_flat / len(futures))
                if m > 1 and n_f:
                    from scipy import sparse

                    rows_ = np.repeat(np.arange(n_f), m)
                    mat = sparse.csr_matrix(
                        (np.ones(n_f * m), (rows_, xf)), shape=(n_f, int(xf[-1]) + 1)
                    )
                    b.add_constr_rows(mat, "<=", np.ones(n_f), name_prefix=f"assign{s}_")
                A_flat = (
                    np.concatenate([st.consumption for st in path])
                    if n_f
                    else np.zeros((0, d))
                )
                idx_all = np.concatenate([x_cur, xf])
                for k in range(d):
                    cf = np.concatenate([observed.consumption[:, k], A_flat[:, k]])
                    nz = cf != 0.0
                    b.add_constr(idx_all[nz], cf[nz], "<=", resid[k], name=f"cap{s}_{k}")
        if not futures:
            for k in range(d):
                cf = observed.consumption[:, k]
                nz = cf != 0.0
                b.add_constr(x_cur[nz], cf[nz], "<=", resid[k], name=f"cap_{k}")

        model = b.build()

        def decode(outcome: SolveOutcome) -> AllocDecision:
            vals = outcome.values[:m]
            j = int(np.argmax(vals))
            if vals[j] < 0.5:
                return AllocDecision(None, 0.0, tuple(0.0 for _ in range(d)))
            return AllocDecision(
                j,
                float(observed.rewards[j]),
                tuple(float(v) for v in observed.consumption[j]),
            )

        return model, decode

    def build_hindsight_ip(self, realizations: Sequence[StageSample]):
        m, d = self.instance.m, self.instance.d
        T = len(realizations)
        b = ModelBuilder(sense="max")
        x = b.add_vars("x", T * m, 0, 1, BINARY)
        b.add_objective_terms(x, np.concatenate([st.rewards for st in realizations]))
        if m > 1:
            from scipy import sparse

            rows_ = np.repeat(np.arange(T), m)
            mat = sparse.csr_matrix(
                (np.ones(T * m), (rows_, x)), shape=(T, T * m)
            )
            b.add_constr_rows(mat, "<=", np.ones(T), name_prefix="assign")
        A_flat = np.concatenate([st.consumption for st in realizations])
        for k in range(d):
            cf = A_flat[:, k]
            nz = cf != 0.0
            b.add_constr(x[nz], cf[nz], "<=", self.instance.capacities[k], name=f"cap{k}")
        model = b.build()

        def decode(outcome: SolveOutcome) -> list[AllocDecision]:
            out = []
            for t, st in enumerate(realizations):
                vals = outcome.values[t * m : (t + 1) * m]
                j = int(np.argmax(vals))
                if vals[j] < 0.5:
                    out.append(AllocDecision(None, 0.0, tuple(0.0 for _ in range(d))))
                else:
                    out.append(
                        AllocDecision(
                            j,
                            float(st.rewards[j]),
                            tuple(float(v) for v in st.consumption[j]),
                        )
                    )
            return out

        return model, decode

    def stage_reward(self, decision: AllocDecision, realization: StageSample) -> float:
        return decision.reward

    def encode_realization(self, realization: StageSample):
        return {
            "rewards": realization.rewards.tolist(),
            "consumption": realization.consumption.tolist(),
        }

    def encode_decision(self, decision):
        if isinstance(decision, list):
            return [self.encode_decision(d) for d in decision]
        return {"supply": decision.supply, "reward": decision.reward}
