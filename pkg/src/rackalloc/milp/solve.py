"""MILP solving: a branch-and-bound backend behind a fixed outcome contract,
plus an exhaustive-enumeration oracle for tiny models.

The shipped backend is HiGHS (via scipy). ``solve`` accepts per-call limits
and reports one of six statuses; any incumbent it returns has been re-checked
against the model within the feasibility tolerance (1e-6 absolute).
"""

from __future__ import annotations

import itertools
import time
import warnings
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .model import BINARY, CONTINUOUS, INTEGER, IpModel

FEASIBILITY_TOL = 1e-6


class SolverError(RuntimeError):
    """Backend failure or a returned incumbent violating the model."""


class BruteForceError(ValueError):
    """Enumeration refused: preconditions unmet or cap exceeded."""


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"  # proven feasible, positive gap reported
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIMED_OUT_WITH_INCUMBENT = "timed_out_with_incumbent"
    TIMED_OUT_NO_INCUMBENT = "timed_out_no_incumbent"

    @property
    def has_incumbent(self) -> bool:
        return self in (
            SolveStatus.OPTIMAL,
            SolveStatus.FEASIBLE,
            SolveStatus.TIMED_OUT_WITH_INCUMBENT,
        )


@dataclass(frozen=True)
class SolveLimits:
    time_limit: float = 60.0  # seconds
    relative_gap: float = 1e-4
    thread_count: int = 1
    heuristic_effort: float | None = None  # backend incumbent-search effort (0..1)

    def scaled(self, time_limit: float | None = None, relative_gap: float | None = None) -> "SolveLimits":
        return SolveLimits(
            time_limit=self.time_limit if time_limit is None else time_limit,
            relative_gap=self.relative_gap if relative_gap is None else relative_gap,
            thread_count=self.thread_count,
            heuristic_effort=self.heuristic_effort,
        )


@dataclass(frozen=True)
class SolveOutcome:
    status: SolveStatus
    objective_value: float | None
    gap: float | None
    wall_time: float
    values: np.ndarray | None = field(repr=False, default=None)
    _model: IpModel | None = field(repr=False, default=None, compare=False)

    @property
    def assignment(self) -> dict[str, float] | None:
        if self.values is None or self._model is None:
            return None
        return dict(zip(self._model.var_names(), self.values.tolist()))

    def value_of(self, flat_index: int) -> float:
        if self.values is None:
            raise SolverError("no incumbent available")
        return float(self.values[flat_index])


def _empty_model_outcome(model: IpModel, t0: float) -> SolveOutcome:
    # no variables: the model is its constant offset, feasible iff all rows
    # hold with zero left-hand side
    zeros = np.zeros(0)
    bad = model.check_feasible(zeros, FEASIBILITY_TOL)
    if bad:
        return SolveOutcome(SolveStatus.INFEASIBLE, None, None, time.perf_counter() - t0)
    return SolveOutcome(
        SolveStatus.OPTIMAL, model.obj_offset, 0.0, time.perf_counter() - t0, zeros, model
    )


def solve(model: IpModel, limits: SolveLimits = SolveLimits()) -> SolveOutcome:
    """Solves the model within the given limits.

    Deterministic for a fixed model and thread count. Raises
    :class:`SolverError` if the backend misbehaves (incumbent infeasible
    beyond tolerance, unknown status).
    """
    t0 = time.perf_counter()
    if model.num_vars == 0:
        return _empty_model_outcome(model, t0)

    sign = 1.0 if model.sense == "min" else -1.0
    c = sign * model.obj_coefs

    lo = np.full(model.num_constraints, -np.inf)
    hi = np.full(model.num_constraints, np.inf)
    le = model.con_senses == "<="
    ge = model.con_senses == ">="
    eq = model.con_senses == "="
    hi[le] = model.con_rhs[le]
    lo[ge] = model.con_rhs[ge]
    lo[eq] = model.con_rhs[eq]
    hi[eq] = model.con_rhs[eq]

    options = {
        "time_limit": float(limits.time_limit),
        "mip_rel_gap": float(limits.relative_gap),
        "threads": int(limits.thread_count),
    }
    if limits.heuristic_effort is not None:
        options["mip_heuristic_effort"] = float(limits.heuristic_effort)

    def _call(opts):
        with warnings.catch_warnings():
            # scipy warns when forwarding backend-specific options verbatim
            warnings.simplefilter("ignore")
            return milp(
                c=c,
                integrality=model.integrality,
                bounds=Bounds(model.lb, model.ub),
                constraints=LinearConstraint(model.con_matrix, lo, hi)
                if model.num_constraints
                else None,
                options=opts,
            )

    res = _call(options)
    if res.status in (2, 3):
        # the backend's presolve occasionally misclassifies feasible MIPs;
        # confirm infeasibility/unboundedness with presolve disabled
        res = _call({**options, "presolve": False})
    wall = time.perf_counter() - t0

    has_x = res.x is not None
    gap = getattr(res, "mip_gap", None)
    if gap is None and has_x:
        gap = 0.0

    if res.status == 0:
        status = (
            SolveStatus.OPTIMAL if (gap is None or gap <= 1e-9) else SolveStatus.FEASIBLE
        )
    elif res.status == 1:
        status = (
            SolveStatus.TIMED_OUT_WITH_INCUMBENT
            if has_x
            else SolveStatus.TIMED_OUT_NO_INCUMBENT
        )
    elif res.status == 2:
        status = SolveStatus.INFEASIBLE
    elif res.status == 3:
        status = SolveStatus.UNBOUNDED
    else:
        raise SolverError(f"backend reported unexpected status {res.status}: {res.message}")

    if not status.has_incumbent:
        return SolveOutcome(status, None, None, wall)

    values = np.asarray(res.x, dtype=float)
    # snap integer variables; HiGHS returns them within integrality tolerance
    ints = model.integrality.astype(bool)
    values[ints] = np.round(values[ints])
    bad = model.check_feasible(values, FEASIBILITY_TOL)
    if bad:
        raise SolverError(f"backend incumbent violates constraints: {bad[:5]}")
    objective = float(model.obj_coefs @ values + model.obj_offset)
    return SolveOutcome(status, objective, None if gap is None else float(gap), wall, values, model)


_ENUM_DEFAULT_CAP = 2_000_000


def brute_force_solve(model: IpModel, enumeration_cap: int = _ENUM_DEFAULT_CAP) -> SolveOutcome:
    """Provably optimal solution of a tiny all-integer model by enumeration.

    Arithmetic is exact (rationals built from the binary float inputs), so
    the reported objective is the true optimum of the model as given.
    Refuses when any variable is continuous or unbounded, or when the
    number of assignments exceeds ``enumeration_cap``.
    """
    t0 = time.perf_counter()
    if model.num_vars == 0:
        return _empty_model_outcome(model, t0)

    for b in model.blocks:
        if b.kind == CONTINUOUS:
            raise BruteForceError(f"block {b.name!r} is continuous; enumeration needs integers")
    if not (np.all(np.isfinite(model.lb)) and np.all(np.isfinite(model.ub))):
        raise BruteForceError("enumeration needs finite bounds on every variable")

    los = np.ceil(model.lb - 1e-9).astype(np.int64)
    his = np.floor(model.ub + 1e-9).astype(np.int64)
    counts = his - los + 1
    if np.any(counts <= 0):
        return SolveOutcome(SolveStatus.INFEASIBLE, None, None, time.perf_counter() - t0)
    total = 1
    for k in counts:
        total *= int(k)
        if total > enumeration_cap:
            raise BruteForceError(
                f"enumeration would visit >= {total} assignments (cap {enumeration_cap})"
            )

    rows = [model.constraint(r) for r in range(model.num_constraints)]
    row_coefs = [
        [(int(i), Fraction(float(cv))) for i, cv in zip(rw.indices, rw.coefs)] for rw in rows
    ]
    rhss = [Fraction(float(rw.rhs)) for rw in rows]
    senses = [rw.sense for rw in rows]
    obj = [Fraction(float(v)) for v in model.obj_coefs]
    offset = Fraction(float(model.obj_offset))

    best_val: Fraction | None = None
    best_x: tuple[int, ...] | None = None
    maximize = model.sense == "max"
    for x in itertools.product(*(range(lo, hi + 1) for lo, hi in zip(los, his))):
        ok = True
        for coefs, rhs, sense in zip(row_coefs, rhss, senses):
            lhs = sum(cv * x[i] for i, cv in coefs)
            if sense == "<=" and lhs > rhs:
                ok = False
            elif sense == ">=" and lhs < rhs:
                ok = False
            elif sense == "=" and lhs != rhs:
                ok = False
            if not ok:
                break
        if not ok:
            continue
        val = sum(obj[i] * x[i] for i in range(model.num_vars)) + offset
        if best_val is None or (val > best_val if maximize else val < best_val):
            best_val = val
            best_x = x
    wall = time.perf_counter() - t0
    if best_val is None:
        return SolveOutcome(SolveStatus.INFEASIBLE, None, None, wall)
    return SolveOutcome(
        SolveStatus.OPTIMAL,
        float(best_val),
        0.0,
        wall,
        np.array(best_x, dtype=float),
        model,
    )
