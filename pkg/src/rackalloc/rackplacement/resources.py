"""Resource-node mapping: tile groups, cooling zones, power devices, and
failover pairs flattened into one capacitated resource index.

The consumption of placing one rack of request i on tile group j decomposes
as A[i,j,k] = space[j,k] + gamma_i * cool[j,k] + rho_i * load[j,k], where
``load`` carries the 1/2 sharing across the two power paths and doubles on
the surviving path of a dual-homed failover pair. Failover pairs (p', p)
with no dual-homed group are omitted: their failover load equals the
regular load, already bounded by the tighter regular capacity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .topology import DataCenterTopology, UPS


@dataclass(frozen=True)
class ResourceNode:
    kind: str  # space | cooling | power | failover
    key: tuple  # (group,) | (zone,) | (device,) | (failed_ups, device)
    capacity: float


class ResourceNodeSet:
    """Structural consumption matrices over (tile group, resource node)."""

    def __init__(self, topology: DataCenterTopology):
        self.topology = topology
        nodes: list[ResourceNode] = []
        g_ids = topology.group_ids
        g_index = {g: i for i, g in enumerate(g_ids)}
        self.group_index = g_index

        space_rows, space_cols = [], []
        cool_rows, cool_cols = [], []
        load_rows, load_cols, load_vals = [], [], []

        for g in g_ids:
            nodes.append(ResourceNode("space", (g,), float(topology.groups[g].size)))
            space_rows.append(g_index[g])
            space_cols.append(len(nodes) - 1)

        for z in topology.zones.values():
            nodes.append(ResourceNode("cooling", (z.id,), z.capacity))
            k = len(nodes) - 1
            for g in g_ids:
                row = topology.rows[topology.groups[g].row]
                if row.cooling_zone == z.id:
                    cool_rows.append(g_index[g])
                    cool_cols.append(k)

        for dev in topology.devices.values():
            nodes.append(ResourceNode("power", (dev.id,), dev.regular))
            k = len(nodes) - 1
            for g in topology.groups_of_device[dev.id]:
                load_rows.append(g_index[g])
                load_cols.append(k)
                load_vals.append(0.5)

        ups_ids = topology.ups_ids()
        for failed in ups_ids:
            subtree = topology.subtree[failed]
            for dev in topology.devices.values():
                if dev.id in subtree:
                    continue
                shared = topology.groups_of_device[dev.id] & topology.groups_of_device[failed]
                if not shared:
                    continue  # failover load equals regular load; regular row is tighter
                nodes.append(ResourceNode("failover", (failed, dev.id), dev.failover))
                k = len(nodes) - 1
                for g in topology.groups_of_device[dev.id]:
                    load_rows.append(g_index[g])
                    load_cols.append(k)
                    load_vals.append(1.0 if g in shared else 0.5)

        self.nodes = nodes
        n_g, n_k = len(g_ids), len(nodes)
        self.space = sparse.csr_matrix(
            (np.ones(len(space_rows)), (space_rows, space_cols)), shape=(n_g, n_k)
        )
        self.cool = sparse.csr_matrix(
            (np.ones(len(cool_rows)), (cool_rows, cool_cols)), shape=(n_g, n_k)
        )
        self.load = sparse.csr_matrix(
            (load_vals, (load_rows, load_cols)), shape=(n_g, n_k)
        )
        self.capacities = np.array([n.capacity for n in nodes])

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def consumption_row(self, power: float, cooling: float, group_id: str) -> np.ndarray:
        """Per-rack consumption over all resource nodes for one tile group."""
        gi = self.group_index[group_id]
        return np.asarray(
            self.space[gi].todense()
        ).ravel() + cooling * np.asarray(self.cool[gi].todense()).ravel() + power * np.asarray(
            self.load[gi].todense()
        ).ravel()

    def consumption_matrix(self, power: float, cooling: float) -> sparse.csr_matrix:
        """(groups x nodes) per-rack consumption for given power/cooling."""
        return self.space + cooling * self.cool + power * self.load

    def node_label(self, k: int) -> str:
        n = self.nodes[k]
        return f"{n.kind}:{'/'.join(str(p) for p in n.key)}"
