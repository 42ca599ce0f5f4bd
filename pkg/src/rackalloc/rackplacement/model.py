"""Stage integer program for rack placement.

Variables per request: row indicators y (binary) and, when a row holds more
than one tile group, per-group rack counts x with the same-row linking
equalities. Topologies whose rows each hold a single group (the simulated
one) skip x entirely: the group split is forced to n_i * y. Identical
future requests within one sample path collapse to integer copy counts per
row, an exact reduction for exchangeable copies on single-group rows.

Secondary objectives (production tie-breakers) apply to the current batch:
room and row opening penalties tiered by fullness at batch start, a
tile-group spread penalty, and the pairwise power surplus / imbalance
terms over same-room UPS pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from ..milp import BINARY, INTEGER, ModelBuilder, SolveLimits, SolveOutcome, SolveStatus, solve
from .demand import DemandRequest
from .state import PlacementState
from .topology import DataCenterTopology


@dataclass(frozen=True)
class SecondaryWeights:
    """Production defaults: room 40/3/0 at 0%/<=20% full, row 2/1/0 at
    0%/<=50% full, tile-group 1, surplus 1e-3, imbalance 1e-5."""

    room_empty: float = 40.0
    room_low: float = 3.0
    room_low_threshold: float = 0.20
    row_empty: float = 2.0
    row_low: float = 1.0
    row_low_threshold: float = 0.50
    tile_group: float = 1.0
    surplus: float = 1e-3
    imbalance: float = 1e-5

    def room_weight(self, fullness: float) -> float:
        if fullness <= 0.0:
            return self.room_empty
        if fullness <= self.room_low_threshold:
            return self.room_low
        return 0.0

    def row_weight(self, fullness: float) -> float:
        if fullness <= 0.0:
            return self.row_empty
        if fullness <= self.row_low_threshold:
            return self.row_low
        return 0.0


@dataclass(frozen=True)
class PlacementObjectiveConfig:
    secondary: bool = False
    weights: SecondaryWeights = field(default_factory=SecondaryWeights)
    precedence: bool = False
    prioritize_current: bool = False  # lexicographic weight on current batch
    precheck_limits: SolveLimits = field(default_factory=lambda: SolveLimits(time_limit=10.0, relative_gap=1e-6))


@dataclass(frozen=True)
class PlacementDecision:
    request_id: str
    accepted: bool
    row: str | None
    group_counts: dict[str, int] | None
    reward: float
    power: float
    cooling: float
    racks: int


def _single_group_rows(topology: DataCenterTopology) -> dict[str, str] | None:
    """row -> its only group, or None if any row has several groups."""
    mapping: dict[str, str] = {}
    for row_id in topology.row_ids:
        gs = topology.groups_in_row(row_id)
        if len(gs) != 1:
            return None
        mapping[row_id] = gs[0].id
    return mapping


def can_place(state: PlacementState, request: DemandRequest) -> bool:
    """Exact feasibility of placing the request alone on the current state."""
    topo = state.topology
    single = _single_group_rows(topo)
    if single is not None:
        for row_id in topo.row_ids:
            g = single[row_id]
            if state.free_tiles_in_group(g) < request.racks:
                continue
            add = request.racks * state.resources.consumption_row(
                request.power, request.cooling, g
            )
            if np.all(state.occupancy + add <= state.resources.capacities + 1e-9):
                return True
        return False
    model, _ = build_placement_ip(
        state, (request,), [], PlacementObjectiveConfig(), _forced_ids=[request.id]
    )
    out = solve(model, SolveLimits(time_limit=10.0, relative_gap=1e-6))
    return out.status != SolveStatus.INFEASIBLE and out.status.has_incumbent


def forcible_requests(
    state: PlacementState,
    batch: Sequence[DemandRequest],
    limits: SolveLimits,
) -> list[str]:
    """Requests that must be placed under precedence, chosen greedily in
    batch order so the forced set stays jointly feasible."""
    forced: list[str] = []
    for req in batch:
        if not can_place(state, req):
            continue
        trial = forced + [req.id]
        model, _ = build_placement_ip(
            state,
            tuple(batch),
            [],
            PlacementObjectiveConfig(),
            _forced_ids=trial,
        )
        out = solve(model, limits)
        if out.status.has_incumbent:
            forced = trial
    return forced


def build_placement_ip(
    state: PlacementState,
    batch: Sequence[DemandRequest],
    futures: Sequence[Sequence[Sequence[DemandRequest]]],
    config: PlacementObjectiveConfig | None = None,
    _forced_ids: Sequence[str] | None = None,
):
    """Model over the current batch plus per-path sampled futures.

    ``futures`` is one path per sample; each path is a sequence of batches.
    Returns the model and a decoder yielding the current batch's
    :class:`PlacementDecision` list.
    """
    config = config or PlacementObjectiveConfig()
    topo = state.topology
    res = state.resources
    if not batch:
        raise ValueError("batch must be nonempty")
    single = _single_group_rows(topo)
    rows = topo.row_ids
    n_rows = len(rows)
    row_index = {r: i for i, r in enumerate(rows)}
    # committed solutions can overshoot by the solver feasibility tolerance;
    # a tolerance-negative residual must not make the next stage infeasible
    resid = np.maximum(state.residual(), 0.0)
    S = max(len(futures), 1)

    forced = set(_forced_ids or [])
    if config.precedence and _forced_ids is None:
        forced = set(forcible_requests(state, batch, config.precheck_limits))

    b = ModelBuilder(sense="max")

    future_total_reward = sum(
        req.reward for path in futures for stage in path for req in stage
    )
    # prefer placing a real request over an identical sampled one on ties
    bias = 1e-4 if futures and not config.prioritize_current else 0.0

    # --- current batch variables ---------------------------------------------
    y_idx: list[np.ndarray] = []
    x_idx: list[dict[str, np.ndarray]] = []
    cur_cols: list[sparse.csr_matrix] = []  # per request: (vars x K) consumption
    for i, req in enumerate(batch):
        y = b.add_vars(f"y{i}", n_rows, 0, 1, BINARY)
        y_idx.append(y)
        weight = req.reward * (1.0 + bias)
        if config.prioritize_current:
            weight = req.reward + future_total_reward
        b.add_objective_terms(y, np.full(n_rows, weight))
        if req.id in forced:
            b.add_constr(y, np.ones(n_rows), "=", 1.0, name=f"force{i}")
        else:
            b.add_constr(y, np.ones(n_rows), "<=", 1.0, name=f"assign{i}")
        if single is not None:
            # consumption column per row: n_i racks of the row's only group
            M = res.consumption_matrix(req.power, req.cooling)  # groups x K
            order = [res.group_index[single[r]] for r in rows]
            cur_cols.append(sparse.csr_matrix(req.racks * M[order]))
            x_idx.append({})
        else:
            groups = topo.group_ids
            x = b.add_vars(f"x{i}", len(groups), 0, float(req.racks), INTEGER)
            gx = {g: x[k] for k, g in enumerate(groups)}
            x_idx.append(gx)
            # same-row linking per row: sum_{groups in row} x = n_i y_row
            for r in rows:
                gs = [gx[g.id] for g in topo.groups_in_row(r)]
                b.add_constr(
                    gs + [y[row_index[r]]],
                    [1.0] * len(gs) + [-float(req.racks)],
                    "=",
                    0.0,
                    name=f"link{i}_{r}",
                )
            M = res.consumption_matrix(req.power, req.cooling)
            cur_cols.append(sparse.csr_matrix(M))

    def _capacity_block(col_mats, col_vars, name):
        """sum over blocks of consumption^T x <= resid (one row per node)."""
        width = b.num_vars
        n_nodes = res.num_nodes
        pieces = []
        for mat, vars_ in zip(col_mats, col_vars):
            mt = mat.T.tocoo()  # (K x block vars)
            pieces.append(
                sparse.csr_matrix(
                    (mt.data, (mt.row, np.asarray(vars_)[mt.col])),
                    shape=(n_nodes, width),
                )
            )
        block = pieces[0]
        for p in pieces[1:]:
            block = block + p
        block = block.tocsr()
        keep = np.diff(block.indptr) > 0
        b.add_constr_rows(block[keep], "<=", resid[keep], name_prefix=name)

    # current-request variable list per block
    cur_vars = []
    for i, req in enumerate(batch):
        if single is not None:
            cur_vars.append(y_idx[i])
        else:
            cur_vars.append(np.array([x_idx[i][g] for g in topo.group_ids]))

    # --- future paths ----------------------------------------------------------
    fut_blocks: list[tuple[list[sparse.csr_matrix], list[np.ndarray]]] = []
    for s, path in enumerate(futures):
        flat = [req for stage in path for req in stage]
        mats: list[sparse.csr_matrix] = []
        vars_: list[np.ndarray] = []
        if single is not None:
            # pool identical future requests: integer copies per row
            pools: dict[tuple, list[DemandRequest]] = {}
            for req in flat:
                pools.setdefault(req.signature(), []).append(req)
            for pi, (sig, reqs) in enumerate(sorted(pools.items())):
                proto = reqs[0]
                count = len(reqs)
                u = b.add_vars(f"u{s}_{pi}", n_rows, 0, float(count), INTEGER)
                b.add_objective_terms(u, np.full(n_rows, proto.reward / S))
                b.add_constr(u, np.ones(n_rows), "<=", float(count), name=f"pool{s}_{pi}")
                M = res.consumption_matrix(proto.power, proto.cooling)
                order = [res.group_index[single[r]] for r in rows]
                mats.append(sparse.csr_matrix(proto.racks * M[order]))
                vars_.append(u)
        else:
            for fi, req in enumerate(flat):
                yv = b.add_vars(f"fy{s}_{fi}", n_rows, 0, 1, BINARY)
                b.add_objective_terms(yv, np.full(n_rows, req.reward / S))
                b.add_constr(yv, np.ones(n_rows), "<=", 1.0, name=f"fassign{s}_{fi}")
                xv = b.add_vars(f"fx{s}_{fi}", len(topo.group_ids), 0, float(req.racks), INTEGER)
                gx = {g: xv[k] for k, g in enumerate(topo.group_ids)}
                for r in rows:
                    gs = [gx[g.id] for g in topo.groups_in_row(r)]
                    b.add_constr(
                        gs + [yv[row_index[r]]],
                        [1.0] * len(gs) + [-float(req.racks)],
                        "=",
                        0.0,
                        name=f"flink{s}_{fi}_{r}",
                    )
                mats.append(sparse.csr_matrix(res.consumption_matrix(req.power, req.cooling)))
                vars_.append(xv)
        fut_blocks.append((mats, vars_))

    # --- capacity rows: one block per path (or current-only when myopic) -------
    if futures:
        for s, (mats, vars_) in enumerate(fut_blocks):
            _capacity_block(cur_cols + mats, cur_vars + vars_, f"cap{s}_")
    else:
        _capacity_block(cur_cols, cur_vars, "cap_")

    # --- secondary objectives ---------------------------------------------------
    if config.secondary:
        secondary_objectives(b, state, batch, y_idx, x_idx, single, config.weights)

    model = b.build()

    def decode(outcome: SolveOutcome) -> list[PlacementDecision]:
        out: list[PlacementDecision] = []
        for i, req in enumerate(batch):
            yv = outcome.values[y_idx[i]]
            r = int(np.argmax(yv))
            if yv[r] < 0.5:
                out.append(
                    PlacementDecision(req.id, False, None, None, 0.0, req.power, req.cooling, req.racks)
                )
                continue
            row_id = rows[r]
            if single is not None:
                counts = {single[row_id]: req.racks}
            else:
                counts = {}
                for g, vi in x_idx[i].items():
                    v = int(round(outcome.values[vi]))
                    if v > 0:
                        counts[g] = v
            out.append(
                PlacementDecision(
                    req.id, True, row_id, counts, req.reward, req.power, req.cooling, req.racks
                )
            )
        return out

    return model, decode


def secondary_objectives(
    b: ModelBuilder,
    state: PlacementState,
    batch: Sequence[DemandRequest],
    y_idx: list[np.ndarray],
    x_idx: list[dict[str, np.ndarray]],
    single: dict[str, str] | None,
    weights: SecondaryWeights,
) -> None:
    """Appends the tie-breaking terms for the current batch to the builder.

    Room/row opening penalties use fullness measured in occupied tiles at
    batch start. The surplus and imbalance terms range over same-room UPS
    pairs; pair load counts the full rack power of dual-homed groups,
    committed plus current.
    """
    topo = state.topology
    rows = topo.row_ids
    row_index = {r: i for i, r in enumerate(rows)}
    n = len(batch)

    # room opening penalties
    lam = {m: weights.room_weight(state.room_fullness(m)) for m in topo.rooms}
    for i in range(n):
        w = b.add_vars(f"roomw{i}", len(topo.rooms), 0, 1, BINARY)
        b.add_objective_terms(w, [-lam[m] for m in topo.rooms])
        room_pos = {m: k for k, m in enumerate(topo.rooms)}
        for r in rows:
            b.add_constr(
                [y_idx[i][row_index[r]], w[room_pos[topo.rows[r].room]]],
                [1.0, -1.0],
                "<=",
                0.0,
                name=f"roomlink{i}_{r}",
            )

    # row opening penalties (one indicator per row, shared across the batch)
    theta = np.array([weights.row_weight(state.row_fullness(r)) for r in rows])
    z = b.add_vars("rowz", len(rows), 0, 1, BINARY)
    b.add_objective_terms(z, -theta)
    for i in range(n):
        for r_pos in range(len(rows)):
            b.add_constr(
                [y_idx[i][r_pos], z[r_pos]], [1.0, -1.0], "<=", 0.0, name=f"rowlink{i}_{r_pos}"
            )

    # tile-group spread penalty
    for i, req in enumerate(batch):
        if single is not None:
            # one group per row: group use coincides with row use
            b.add_objective_terms(
                y_idx[i], np.full(len(rows), -weights.tile_group), accumulate=True
            )
        else:
            groups = topo.group_ids
            v = b.add_vars(f"tgv{i}", len(groups), 0, 1, BINARY)
            b.add_objective_terms(v, np.full(len(groups), -weights.tile_group))
            for k, g in enumerate(groups):
                b.add_constr(
                    [x_idx[i][g], v[k]],
                    [1.0, -float(req.racks)],
                    "<=",
                    0.0,
                    name=f"tglink{i}_{g}",
                )

    # pairwise power surplus and imbalance
    phi = b.add_var("surplus", 0, np.inf)
    gam_u = b.add_var("load_hi", 0, np.inf)
    gam_l = b.add_var("load_lo", 0, np.inf)
    b.add_objective_terms([phi, gam_u, gam_l], [-weights.surplus, -weights.imbalance, weights.imbalance])

    ups_by_room = {
        m: sorted(
            d.id for d in topo.devices.values() if d.level == "ups" and d.id.startswith(f"{m}/")
        )
        for m in topo.rooms
    }
    # fall back to room prefix match failing, group by subtree rows
    for m in topo.rooms:
        if not ups_by_room[m]:
            ups_by_room[m] = sorted(
                {topo.ancestors(g.psus[0])[1] for g in topo.groups.values() if topo.rows[g.row].room == m}
                | {topo.ancestors(g.psus[1])[1] for g in topo.groups.values() if topo.rows[g.row].room == m}
            )

    committed_pair_load: dict[tuple[str, str], float] = {}
    for p in state.placements:
        for g, cnt in p.group_counts.items():
            devs, _ = topo.device_chain_of_group[g]
            pair = tuple(sorted(d for d in devs if topo.devices[d].level == "ups"))
            committed_pair_load[pair] = committed_pair_load.get(pair, 0.0) + cnt * p.request.power

    for m in topo.rooms:
        ups = ups_by_room[m]
        if len(ups) < 2:
            continue
        n_pairs = len(ups) * (len(ups) - 1) // 2
        balanced = sum(topo.devices[u].regular for u in ups) / n_pairs
        for a in range(len(ups)):
            for c in range(a + 1, len(ups)):
                pair = (ups[a], ups[c])
                # only pairs that actually share dual-homed groups can carry
                # a pairwise load; others would pin the lower bound at zero
                coupled = bool(
                    topo.groups_of_device[pair[0]] & topo.groups_of_device[pair[1]]
                )
                if not coupled:
                    continue
                const = committed_pair_load.get(pair, 0.0)
                idx: list[int] = []
                cf: list[float] = []
                for i, req in enumerate(batch):
                    for g in topo.groups.values():
                        devs, _ = topo.device_chain_of_group[g.id]
                        gpair = tuple(sorted(d for d in devs if topo.devices[d].level == "ups"))
                        if gpair != pair:
                            continue
                        if single is not None:
                            idx.append(y_idx[i][row_index[g.row]])
                            cf.append(req.power * req.racks)
                        else:
                            idx.append(x_idx[i][g.id])
                            cf.append(req.power)
                # surplus: pair load - balanced <= phi
                b.add_constr(idx + [phi], cf + [-1.0], "<=", balanced - const, name=f"phi_{pair[0]}_{pair[1]}")
                b.add_constr(idx + [gam_u], cf + [-1.0], "<=", -const, name=f"gu_{pair[0]}_{pair[1]}")
                b.add_constr([gam_l] + idx, [1.0] + [-c_ for c_ in cf], "<=", const, name=f"gl_{pair[0]}_{pair[1]}")
