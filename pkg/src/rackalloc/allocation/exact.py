"""Exact benchmarks for small instances with discrete uncertainty.

``dp_solve`` runs backward induction over (stage, remaining capacity); it is
exact for integer-valued consumption and refuses otherwise, matching the
intractability of continuous state spaces. ``scenario_tree_solve`` builds the
extensive-form stochastic integer program over the complete outcome tree and
solves it with the MILP backend, giving an independent route to the same
optimal expected value.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..milp import BINARY, ModelBuilder, SolveLimits, SolveStatus, solve
from .instance import ResourceAllocInstance, StageSample

DEFAULT_STATE_CAP = 5_000_000
DEFAULT_TREE_CAP = 2_200_000


class StateSpaceError(ValueError):
    """Exact method refused; carries the offending size estimate."""


def _discrete_support(instance: ResourceAllocInstance):
    support = instance.dist.discrete_support()
    if support is None:
        raise StateSpaceError(
            "distribution has continuous support; exact recursion would need "
            "an infinite state space"
        )
    return support


def _integer_columns(support) -> list[tuple[float, np.ndarray, np.ndarray]]:
    out = []
    for prob, st in support:
        A = st.consumption
        if not np.allclose(A, np.round(A)):
            raise StateSpaceError("consumption must be integral for the capacity grid")
        out.append((prob, st.rewards, np.round(A).astype(np.int64)))
    return out


@dataclass(frozen=True)
class DpPolicy:
    """Optimal online policy: value-to-go tables plus a greedy evaluator."""

    T: int
    m: int
    d: int
    capacities: tuple[int, ...]
    expected_value: float
    expected_value_exact: Fraction
    values: list[np.ndarray]  # values[t] indexed by remaining-capacity grid, t = 0..T

    def decide(self, t: int, remaining: tuple[int, ...], stage: StageSample) -> int | None:
        """Best supply for the observed stage, None to reject; accepts ties."""
        vnext = self.values[t + 1]
        best_j, best_v = None, float(vnext[remaining])
        A = np.round(stage.consumption).astype(np.int64)
        for j in range(self.m):
            nxt = tuple(np.asarray(remaining) - A[j])
            if min(nxt) < 0:
                continue
            v = stage.rewards[j] + float(vnext[nxt])
            if v >= best_v - 1e-12 and (best_j is None or v > best_v + 1e-12):
                best_j, best_v = j, v
        return best_j

    def evaluate(self, stages: Sequence[StageSample]) -> float:
        remaining = tuple(self.capacities)
        total = 0.0
        for t, st in enumerate(stages):
            j = self.decide(t, remaining, st)
            if j is not None:
                A = np.round(st.consumption).astype(np.int64)
                remaining = tuple(np.asarray(remaining) - A[j])
                total += float(st.rewards[j])
        return total


def dp_solve(
    instance: ResourceAllocInstance,
    state_cap: int = DEFAULT_STATE_CAP,
    exact: bool = False,
) -> DpPolicy:
    """Backward induction over (stage, remaining capacity vector).

    ``exact=True`` computes values in rational arithmetic (small grids only);
    the float tables are always built for policy evaluation.
    """
    support = _integer_columns(_discrete_support(instance))
    caps = instance.capacities
    if not np.allclose(caps, np.round(caps)):
        raise StateSpaceError("capacities must be integral for the capacity grid")
    caps_i = tuple(int(round(c)) for c in caps)
    shape = tuple(c + 1 for c in caps_i)
    n_states = int(np.prod(shape))
    if instance.T * n_states > state_cap:
        raise StateSpaceError(
            f"state space has {instance.T} x {n_states} = {instance.T * n_states} "
            f"entries, above the cap of {state_cap}"
        )

    d = instance.d

    def accept_value(v: np.ndarray, col: np.ndarray, reward: float) -> np.ndarray:
        """reward + v at the shifted state; -inf where infeasible."""
        out = np.full(shape, -np.inf)
        src = tuple(slice(0, shape[k] - col[k]) for k in range(d))
        dst = tuple(slice(col[k], shape[k]) for k in range(d))
        out[dst] = reward + v[src]
        return out

    values: list[np.ndarray] = [np.zeros(shape)]
    for _ in range(instance.T):
        v = values[0]
        ev = np.zeros(shape)
        for prob, rewards, A in support:
            best = v.copy()  # reject
            for j in range(instance.m):
                np.maximum(best, accept_value(v, A[j], float(rewards[j])), out=best)
            ev += prob * best
        values.insert(0, ev)

    exact_value = Fraction(0)
    if exact:
        neg_inf = Fraction(-(10**15))  # infeasible-shift sentinel
        fr_values: list = [np.full(shape, Fraction(0), dtype=object)]
        for _ in range(instance.T):
            v = fr_values[0]
            ev = np.full(shape, Fraction(0), dtype=object)
            for prob, rewards, A in support:
                best = v.copy()
                for j in range(instance.m):
                    shifted = np.full(shape, neg_inf, dtype=object)
                    src = tuple(slice(0, shape[k] - A[j][k]) for k in range(d))
                    dst = tuple(slice(A[j][k], shape[k]) for k in range(d))
                    rj = Fraction(float(rewards[j]))
                    shifted[dst] = v[src] + rj
                    best = np.where(shifted > best, shifted, best)
                ev = ev + Fraction(prob).limit_denominator(10**9) * best
            fr_values.insert(0, ev)
        exact_value = fr_values[0][caps_i]

    return DpPolicy(
        T=instance.T,
        m=instance.m,
        d=instance.d,
        capacities=caps_i,
        expected_value=float(values[0][caps_i]),
        expected_value_exact=exact_value,
        values=values,
    )


@dataclass(frozen=True)
class TreeSolution:
    expected_value: float
    scaled_value: int  # expected value times K^T, exact integer
    support_size: int
    T: int


def scenario_tree_solve(
    instance: ResourceAllocInstance,
    tree_cap: int = DEFAULT_TREE_CAP,
    limits: SolveLimits = SolveLimits(time_limit=280.0, relative_gap=0.0),
) -> TreeSolution:
    """Extensive-form stochastic IP over the complete scenario tree.

    Nodes at depth t are outcome histories; each holds one accept/assign
    decision made after observing the depth-t outcome. Capacity is enforced
    along every leaf path. Requires a uniform discrete support so node
    probabilities scale to integers (K^{T-t}), keeping the optimum exact on
    the 1/K^T grid.
    """
    support = _integer_columns(_discrete_support(instance))
    K = len(support)
    probs = [p for p, _, _ in support]
    if any(abs(p - 1.0 / K) > 1e-12 for p in probs):
        raise StateSpaceError("scenario tree needs a uniform discrete support")
    T, m, d = instance.T, instance.m, instance.d
    n_leaves = K**T
    if n_leaves > tree_cap:
        raise StateSpaceError(
            f"scenario tree has {n_leaves} leaves, above the cap of {tree_cap}"
        )

    counts = [K**t for t in range(1, T + 1)]
    offsets = np.concatenate([[0], np.cumsum(counts)])[:-1]
    n_nodes = int(np.sum(counts))

    rewards = np.array([r for _, r, _ in support])  # (K, m)
    cols = np.array([A for _, _, A in support])  # (K, m, d)

    b = ModelBuilder(sense="max")
    x = b.add_vars("x", n_nodes * m, 0, 1, BINARY)

    # objective: sum over nodes of K^{T-t} * r_outcome(node) . x_node
    obj = np.zeros(n_nodes * m)
    for t in range(1, T + 1):
        node_ids = np.arange(counts[t - 1], dtype=np.int64)
        out = node_ids % K
        weight = float(K ** (T - t))
        for j in range(m):
            obj[(offsets[t - 1] + node_ids) * m + j] = weight * rewards[out, j]
    b.add_objective_terms(np.arange(n_nodes * m), obj)

    if m > 1:
        for node in range(n_nodes):
            b.add_constr(
                np.arange(node * m, (node + 1) * m), np.ones(m), "<=", 1.0,
                name=f"assign{node}",
            )

    leaf_ids = np.arange(n_leaves, dtype=np.int64)
    from scipy import sparse

    rows_all, cols_all, vals_all = [], [], []
    for t in range(1, T + 1):
        loc = leaf_ids // (K ** (T - t))
        node = offsets[t - 1] + loc
        out = loc % K
        for j in range(m):
            for k in range(d):
                a = cols[:, j, k][out]
                nz = a != 0
                rows_all.append(np.nonzero(nz)[0] * d + k)
                cols_all.append(node[nz] * m + j)
                vals_all.append(a[nz].astype(float))
    mat = sparse.csr_matrix(
        (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
        shape=(n_leaves * d, n_nodes * m),
    )
    rhs = np.tile(instance.capacities, n_leaves)
    b.add_constr_rows(mat, "<=", rhs, name_prefix="leafcap")

    model = b.build()
    outcome = solve(model, limits)
    if outcome.status != SolveStatus.OPTIMAL:
        raise StateSpaceError(
            f"scenario tree solve did not reach proven optimality: {outcome.status}"
        )
    scaled = float(outcome.objective_value)
    return TreeSolution(
        expected_value=scaled / (K**T),
        scaled_value=int(round(scaled)),
        support_size=K,
        T=T,
    )
