"""The four resolving policies over any :class:`ProblemFamily`.

Per stage the sampling policy observes the realization, draws ``S``
independent future paths, solves the stage program with the 1/S-weighted
future objective, and commits only the current-stage decision. The
certainty-equivalent policy runs the same loop with the single mean path;
the myopic policy passes no future at all; hindsight solves the offline
full-information program once.

A stage solve that times out with an incumbent commits the incumbent (the
deployed behavior under a per-run time limit); a timeout with no incumbent
or an infeasible stage raises :class:`PolicyFailure`.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..milp import SolveLimits, SolveStatus, solve
from .family import Decision, ProblemFamily, Realization, StageRecord, Trajectory

_OCC_TOL = 1e-6


class PolicyFailure(RuntimeError):
    def __init__(self, stage: int, status, message: str = ""):
        super().__init__(f"stage {stage}: {status} {message}".strip())
        self.stage = stage
        self.status = status


def _draw_instance(problem: ProblemFamily, rng: np.random.Generator) -> list[Realization]:
    return [problem.sample_stage(rng) for _ in range(problem.horizon)]


def _resolve_loop(
    problem: ProblemFamily,
    realizations: Sequence[Realization],
    futures_for_stage,
    limits: SolveLimits,
    regularizer_weight: float,
    policy: str,
) -> Trajectory:
    capacities = problem.capacities()
    history: list[Decision] = []
    records: list[StageRecord] = []
    total = 0.0
    for t, observed in enumerate(realizations):
        futures = futures_for_stage(t)
        model, decode = problem.build_ip(
            history, observed, futures, regularizer_weight=regularizer_weight
        )
        outcome = solve(model, limits)
        if not outcome.status.has_incumbent:
            raise PolicyFailure(t, outcome.status.value)
        decision = decode(outcome)
        history.append(decision)
        occ = problem.occupancy(history)
        if np.any(occ > capacities + _OCC_TOL):
            k = int(np.argmax(occ - capacities))
            raise PolicyFailure(
                t, "capacity_violation", f"resource {k}: {occ[k]} > {capacities[k]}"
            )
        reward = problem.stage_reward(decision, observed)
        total += reward
        records.append(
            StageRecord(
                stage=t,
                realization=problem.encode_realization(observed),
                decision=problem.encode_decision(decision),
                reward=reward,
                wall_time=outcome.wall_time,
                occupancy=tuple(float(v) for v in occ),
            )
        )
    return Trajectory(policy=policy, records=tuple(records), total_objective=total)


def run_oso(
    problem: ProblemFamily,
    sample_paths: int,
    rng: np.random.Generator,
    limits: SolveLimits = SolveLimits(),
    realizations: Sequence[Realization] | None = None,
    regularizer_weight: float = 0.0,
) -> Trajectory:
    """Sampling policy with ``sample_paths`` future paths per stage.

    When ``realizations`` is omitted the instance itself is drawn from
    ``rng`` first; passing it explicitly lets replications share one
    instance across policies while varying the sampling stream.
    """
    if sample_paths < 1:
        raise ValueError("sample_paths must be >= 1")
    T = problem.horizon
    if realizations is None:
        realizations = _draw_instance(problem, rng)
    if len(realizations) != T:
        raise ValueError(f"expected {T} stage realizations, got {len(realizations)}")

    if problem.sampling_discipline == "up_front":
        paths = [problem.sample_future_path(rng, T) for _ in range(sample_paths)]

        def futures_for_stage(t: int):
            return [p[t + 1 :] for p in paths]

    else:

        def futures_for_stage(t: int):
            return [
                problem.sample_future_path(rng, T - t - 1)
                for _ in range(sample_paths)
            ]

    return _resolve_loop(
        problem, realizations, futures_for_stage, limits, regularizer_weight,
        policy=f"oso-{sample_paths}",
    )


def run_ce(
    problem: ProblemFamily,
    limits: SolveLimits = SolveLimits(),
    realizations: Sequence[Realization] | None = None,
    rng: np.random.Generator | None = None,
    regularizer_weight: float = 0.0,
) -> Trajectory:
    """Mean-path resolving policy: the single future path (mean, ..., mean).

    The mean stage object is shared across the path so families can detect
    and aggregate the identical copies.
    """
    T = problem.horizon
    if realizations is None:
        if rng is None:
            raise ValueError("need realizations or an rng to draw them")
        realizations = _draw_instance(problem, rng)
    mean = problem.mean_stage()

    def futures_for_stage(t: int):
        return [[mean] * (T - t - 1)]

    return _resolve_loop(
        problem, realizations, futures_for_stage, limits, regularizer_weight,
        policy="ce",
    )


def run_myopic(
    problem: ProblemFamily,
    limits: SolveLimits = SolveLimits(),
    realizations: Sequence[Realization] | None = None,
    rng: np.random.Generator | None = None,
    regularizer_weight: float = 0.0,
) -> Trajectory:
    T = problem.horizon
    if realizations is None:
        if rng is None:
            raise ValueError("need realizations or an rng to draw them")
        realizations = _draw_instance(problem, rng)

    def futures_for_stage(t: int):
        return []

    return _resolve_loop(
        problem, realizations, futures_for_stage, limits, regularizer_weight,
        policy="myopic",
    )


def run_hindsight(
    problem: ProblemFamily,
    realizations: Sequence[Realization],
    limits: SolveLimits = SolveLimits(),
) -> Trajectory:
    """Offline optimum with the full realization known; the ratio denominator."""
    model, decode = problem.build_hindsight_ip(realizations)
    outcome = solve(model, limits)
    if not outcome.status.has_incumbent:
        raise PolicyFailure(0, outcome.status.value, "hindsight solve failed")
    decisions = decode(outcome)
    history: list[Decision] = []
    records: list[StageRecord] = []
    total = 0.0
    capacities = problem.capacities()
    if isinstance(decisions, list) and len(decisions) == len(realizations):
        for t, (decision, observed) in enumerate(zip(decisions, realizations)):
            history.append(decision)
            occ = problem.occupancy(history)
            if np.any(occ > capacities + _OCC_TOL):
                raise PolicyFailure(t, "capacity_violation", "hindsight decode")
            reward = problem.stage_reward(decision, observed)
            total += reward
            records.append(
                StageRecord(
                    stage=t,
                    realization=problem.encode_realization(observed),
                    decision=problem.encode_decision(decision),
                    reward=reward,
                    wall_time=outcome.wall_time if t == 0 else 0.0,
                    occupancy=tuple(float(v) for v in occ),
                )
            )
    else:
        # family reports an aggregate (e.g. a whole packing); trust its objective
        total = float(outcome.objective_value)
        records.append(
            StageRecord(
                stage=0,
                realization=None,
                decision=problem.encode_decision(decisions),
                reward=total,
                wall_time=outcome.wall_time,
                occupancy=tuple(float(v) for v in problem.occupancy([decisions])),
            )
        )
    return Trajectory(
        policy="hindsight",
        records=tuple(records),
        total_objective=total if records else float(outcome.objective_value),
        meta={"solver_objective": float(outcome.objective_value)},
    )
