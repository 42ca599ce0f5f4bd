"""Arc-flow bin packing: network, stage model, regularizer, and decoding.

A packing over bins of capacity B is a flow on nodes 0..B: packing arcs
(i, j) carry items of size j - i, loss arcs (j, j+1) carry wasted capacity,
and z units of flow run source-to-sink (one per bin). The stage model
extends committed flows with the current batch and, per sample path, one
aggregated future block; aggregating future batches is exact here because
any cumulative packing decomposes into valid per-batch increments (a
partially filled bin is a path prefix padded by loss arcs).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import sparse

from ..milp import INTEGER, IpModel, ModelBuilder, SolveOutcome


class CertificateError(ValueError):
    """Cumulative flows admit no loss-arc certificate."""


@lru_cache(maxsize=8)
def _network(B: int) -> "ArcNetwork":
    return ArcNetwork(B)


class ArcNetwork:
    """Packing arcs and cached constraint backbones for capacity B."""

    def __init__(self, B: int):
        if B < 1:
            raise ValueError("bin capacity must be at least 1")
        self.B = B
        self.arcs = [(i, j) for i in range(B) for j in range(i + 1, B + 1)]
        self.n_arcs = len(self.arcs)
        self.arc_index = {a: n for n, a in enumerate(self.arcs)}
        self.sizes = np.array([j - i for i, j in self.arcs])
        self.ends = np.array([j for _, j in self.arcs])

        # flow balance over [x (n_arcs) | w (B) | z (1)]: rows = nodes 0..B
        rows, cols, vals = [], [], []
        for n, (i, j) in enumerate(self.arcs):
            rows += [j, i]
            cols += [n, n]
            vals += [1.0, -1.0]
        for wj in range(B):  # w_j is the loss arc j -> j+1
            rows += [wj + 1, wj]
            cols += [self.n_arcs + wj, self.n_arcs + wj]
            vals += [1.0, -1.0]
        rows += [0, B]
        cols += [self.n_arcs + B, self.n_arcs + B]
        vals += [1.0, -1.0]
        self.width = self.n_arcs + B + 1
        self.balance = sparse.csr_matrix(
            (vals, (rows, cols)), shape=(B + 1, self.width)
        )
        # per-size counts over x columns: row s-1 sums arcs of size s
        self.counts = sparse.csr_matrix(
            (np.ones(self.n_arcs), (self.sizes - 1, np.arange(self.n_arcs))),
            shape=(B, self.width),
        )
        # z contribution to balance as a dense column
        self.z_col = np.zeros(B + 1)
        self.z_col[0] = 1.0
        self.z_col[B] = -1.0

    def size_counts(self, items: Sequence[int]) -> np.ndarray:
        c = np.zeros(self.B)
        for s in items:
            if not 1 <= s <= self.B:
                raise ValueError(f"item size {s} outside 1..{self.B}")
            c[s - 1] += 1
        return c

    def psi_coefs(self) -> np.ndarray:
        """Fuller-bin preference: arc (i, j) weighs 1 - (j/B)^2."""
        return 1.0 - (self.ends / self.B) ** 2


def regularizer_psi(arc_flows: np.ndarray, batch_size: int, B: int) -> float:
    """Average fuller-bin penalty of a stage flow: (1/|batch|) sum (1 - (j/B)^2) x_ij."""
    net = _network(B)
    flows = np.asarray(arc_flows, dtype=float)
    if flows.shape != (net.n_arcs,):
        raise ValueError(f"expected {net.n_arcs} arc flows")
    if np.any(flows < 0):
        raise ValueError("arc flows must be nonnegative")
    if batch_size <= 0:
        return 0.0
    return float(net.psi_coefs() @ flows) / batch_size


@dataclass(frozen=True)
class FlowModelState:
    """Cumulative committed flows, bin count, and packed per-size counts."""

    B: int
    arc_flows: np.ndarray  # cumulative x over arcs
    bins: int  # cumulative z
    packed_counts: np.ndarray  # per size 1..B

    @staticmethod
    def empty(B: int) -> "FlowModelState":
        net = _network(B)
        return FlowModelState(B, np.zeros(net.n_arcs), 0, np.zeros(B))

    def loss_certificate(self) -> np.ndarray:
        """The unique loss-arc vector balancing the flows; raises if invalid."""
        net = _network(self.B)
        in_out = net.balance[:, : net.n_arcs] @ self.arc_flows  # in - out per node
        w = np.zeros(self.B)
        # node 0: -out_0 - w_0 + z = 0
        w[0] = self.bins + in_out[0]
        for j in range(1, self.B):
            w[j] = w[j - 1] + in_out[j]
        if np.any(w < -1e-9):
            raise CertificateError("negative loss flow: cumulative flows are not a packing")
        if abs(in_out[self.B] + w[self.B - 1] - self.bins) > 1e-9:
            raise CertificateError("sink imbalance: bins do not match flows")
        return w

    def validate(self) -> None:
        net = _network(self.B)
        self.loss_certificate()
        got = net.counts[:, : net.n_arcs] @ self.arc_flows
        if not np.allclose(got, self.packed_counts):
            raise CertificateError("per-size arc totals disagree with packed counts")

    def advance(self, arc_flows: np.ndarray, bins: int) -> "FlowModelState":
        net = _network(self.B)
        new = FlowModelState(
            self.B,
            self.arc_flows + arc_flows,
            self.bins + int(bins),
            self.packed_counts + net.counts[:, : net.n_arcs] @ arc_flows,
        )
        new.validate()
        return new


def build_flow_ip(
    state: FlowModelState,
    current_counts: np.ndarray,
    future_batches: Sequence[Sequence[Sequence[int]]],
    regularizer_weight: float = 0.0,
    max_new_bins: float = np.inf,
):
    """Stage model: pack the current batch now, each sampled path later.

    ``future_batches`` holds one path per sample; a path is a sequence of
    batches. Returns the model plus a decoder yielding (stage arc flows,
    stage bins opened).
    """
    state.validate()
    net = _network(state.B)
    B, NA = state.B, net.n_arcs
    S = len(future_batches)

    b = ModelBuilder(sense="min")
    x_t = b.add_vars("x", NA, 0, np.inf, INTEGER)
    # loss flows are integral automatically once packing flows and bin counts
    # are; keeping them continuous trims the integer variable count
    w_t = b.add_vars("w", B, 0, np.inf)
    z_t = b.add_var("z", 0, max_new_bins, INTEGER)

    b.add_objective_terms([z_t], [1.0])
    if regularizer_weight:
        psi = regularizer_weight * net.psi_coefs() / max(current_counts.sum(), 1.0)
        nz = psi != 0.0
        b.add_objective_terms(x_t[nz], psi[nz])

    committed_balance = net.balance[:, :NA] @ state.arc_flows + state.bins * net.z_col

    # current block: cumulative flows (committed + stage) balance and counts
    cur = sparse.csr_matrix(net.balance)
    b.add_constr_rows(cur, "=", -committed_balance, name_prefix="bal")
    b.add_constr_rows(
        net.counts, "=", current_counts, name_prefix="cnt"
    )

    fut_x: list[np.ndarray] = []
    fut_z: list[int] = []
    for s, path in enumerate(future_batches):
        X = b.add_vars(f"X{s}", NA, 0, np.inf, INTEGER)
        W = b.add_vars(f"W{s}", B, 0, np.inf)
        Z = b.add_var(f"Z{s}", 0, np.inf, INTEGER)
        b.add_objective_terms([Z], [1.0 / S])
        fut_x.append(X)
        fut_z.append(Z)
        fut_counts = np.zeros(B)
        for batch in path:
            fut_counts += net.size_counts(batch)
        # cumulative balance over committed + stage + this path's aggregate
        shifted = sparse.hstack(
            [
                net.balance[:, :NA],  # x_t
                sparse.csr_matrix((B + 1, B)),  # w_t unused in this block
                sparse.csr_matrix(net.z_col.reshape(-1, 1)),  # z_t
            ]
            + [sparse.csr_matrix((B + 1, (NA + B + 1) * s))]
            + [net.balance]
        )
        pad = b.num_vars - shifted.shape[1]
        if pad:
            shifted = sparse.hstack([shifted, sparse.csr_matrix((B + 1, pad))])
        b.add_constr_rows(sparse.csr_matrix(shifted), "=", -committed_balance, name_prefix=f"balf{s}")
        cnt = sparse.hstack(
            [
                net.counts[:, :NA],
                sparse.csr_matrix((B, B + 1)),
            ]
            + [sparse.csr_matrix((B, (NA + B + 1) * s))]
            + [net.counts]
        )
        pad = b.num_vars - cnt.shape[1]
        if pad:
            cnt = sparse.hstack([cnt, sparse.csr_matrix((B, pad))])
        b.add_constr_rows(
            sparse.csr_matrix(cnt), "=", current_counts + fut_counts, name_prefix=f"cntf{s}"
        )

    model = b.build()

    def decode(outcome: SolveOutcome) -> tuple[np.ndarray, int]:
        flows = np.round(outcome.values[x_t]).astype(np.int64)
        bins = int(round(outcome.value_of(z_t)))
        return flows.astype(float), bins

    return model, decode


def decode_packing(arc_flows: np.ndarray, bins: int, B: int) -> list[list[int]]:
    """Path decomposition of a flow into bins of item sizes.

    Every source-to-sink unit of flow is one bin; packing arcs along the
    path are its items and loss arcs its waste. Flow-decomposition on the
    DAG guarantees greedy extraction succeeds whenever the certificate
    holds; a stuck walk means the input was not a packing.
    """
    net = _network(B)
    state = FlowModelState(
        B,
        np.asarray(arc_flows, dtype=float),
        int(bins),
        net.counts[:, : net.n_arcs] @ np.asarray(arc_flows, dtype=float),
    )
    w = np.round(state.loss_certificate()).astype(np.int64)
    x = np.round(np.asarray(arc_flows)).astype(np.int64)
    # arcs out of each node, packing arcs preferred over loss arcs
    out_arcs: list[list[int]] = [[] for _ in range(B + 1)]
    for n, (i, _) in enumerate(net.arcs):
        if x[n] > 0:
            out_arcs[i].append(n)
    bins_out: list[list[int]] = []
    for _ in range(int(bins)):
        node = 0
        items: list[int] = []
        while node < B:
            moved = False
            while out_arcs[node] and x[out_arcs[node][-1]] == 0:
                out_arcs[node].pop()
            if out_arcs[node]:
                a = out_arcs[node][-1]
                x[a] -= 1
                items.append(int(net.sizes[a]))
                node = int(net.ends[a])
                moved = True
            elif w[node] > 0:
                w[node] -= 1
                node += 1
                moved = True
            if not moved:
                raise CertificateError(f"no path decomposition: stuck at node {node}")
        bins_out.append(items)
    if x.sum() != 0:
        raise CertificateError("leftover packing flow after extracting all bins")
    return bins_out
