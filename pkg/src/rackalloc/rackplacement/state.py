"""Placement state: committed placements, occupancy, acceptance record."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .demand import DemandRequest
from .resources import ResourceNodeSet
from .topology import DataCenterTopology


class PlacementError(ValueError):
    """A placement violates a structural or capacity rule; names the rule."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class PlacedRequest:
    request: DemandRequest
    row: str
    group_counts: dict[str, int]  # tile group -> racks


class PlacementState:
    """Mutable committed state over a fixed topology.

    Occupancy is maintained incrementally and re-derivable from the
    placement list; ``recompute_occupancy`` is the independent check used
    by event-log replay validation.
    """

    def __init__(self, topology: DataCenterTopology, resources: ResourceNodeSet | None = None):
        self.topology = topology
        self.resources = resources if resources is not None else ResourceNodeSet(topology)
        self.placements: list[PlacedRequest] = []
        self.rejections: list[str] = []  # request ids
        self.occupancy = np.zeros(self.resources.num_nodes)
        self.tiles_used: dict[str, int] = {g: 0 for g in topology.group_ids}

    # --- queries -------------------------------------------------------------
    def residual(self) -> np.ndarray:
        return self.resources.capacities - self.occupancy

    def free_tiles_in_group(self, group_id: str) -> int:
        return self.topology.groups[group_id].size - self.tiles_used[group_id]

    def free_tiles_in_row(self, row_id: str) -> int:
        return sum(
            self.free_tiles_in_group(g.id) for g in self.topology.groups_in_row(row_id)
        )

    def occupied_tiles_in_room(self, room: str) -> int:
        return sum(
            self.tiles_used[g.id]
            for g in self.topology.groups.values()
            if self.topology.rows[g.row].room == room
        )

    def room_fullness(self, room: str) -> float:
        total = sum(r.tiles for r in self.topology.rows_in_room(room))
        return self.occupied_tiles_in_room(room) / total if total else 0.0

    def row_fullness(self, row_id: str) -> float:
        row = self.topology.rows[row_id]
        used = sum(self.tiles_used[g.id] for g in self.topology.groups_in_row(row_id))
        return used / row.tiles if row.tiles else 0.0

    def device_load(self, device_id: str) -> float:
        k = next(
            i
            for i, n in enumerate(self.resources.nodes)
            if n.kind == "power" and n.key == (device_id,)
        )
        return float(self.occupancy[k])

    def placement_consumption(self, request: DemandRequest, group_counts: dict[str, int]) -> np.ndarray:
        add = np.zeros(self.resources.num_nodes)
        for g, cnt in group_counts.items():
            add += cnt * self.resources.consumption_row(request.power, request.cooling, g)
        return add

    # --- validation ----------------------------------------------------------
    def check_placement(
        self, request: DemandRequest, row: str, group_counts: dict[str, int]
    ) -> list[str]:
        """Violations of the placement rules, empty when feasible.

        Checks the same-row rule, the rack-count linking, tile-group
        membership, and every capacity class by name (space, cooling,
        regular power, failover with device id).
        """
        violations: list[str] = []
        if row not in self.topology.rows:
            return [f"unknown row {row}"]
        total = sum(group_counts.values())
        if total != request.racks:
            violations.append(
                f"linking: request {request.id} needs {request.racks} racks, got {total}"
            )
        for g, cnt in group_counts.items():
            if g not in self.topology.groups:
                violations.append(f"unknown tile group {g}")
                continue
            if self.topology.groups[g].row != row:
                violations.append(f"same-row: group {g} is not on row {row}")
            if cnt < 0:
                violations.append(f"negative count on group {g}")
        if violations:
            return violations
        add = self.placement_consumption(request, group_counts)
        over = self.occupancy + add - self.resources.capacities
        for k in np.nonzero(over > 1e-6)[0]:
            node = self.resources.nodes[k]
            kind = {
                "space": "space",
                "cooling": "cooling",
                "power": "regular-power",
                "failover": "failover",
            }[node.kind]
            violations.append(f"{kind}:{'/'.join(node.key)} over by {over[k]:.6g}")
        return violations

    # --- mutation ------------------------------------------------------------
    def place(
        self,
        request: DemandRequest,
        row: str,
        group_counts: dict[str, int],
        enforce: bool = True,
    ) -> None:
        """Commits a placement; ``enforce=False`` skips the capacity check
        (structural rules still apply), for reconstructing states that are
        deliberately overloaded."""
        violations = self.check_placement(request, row, group_counts)
        if enforce and violations:
            raise PlacementError(violations)
        if not enforce:
            structural = [v for v in violations if ":" not in v or v.startswith(("linking", "same-row", "unknown"))]
            if structural:
                raise PlacementError(structural)
        self.occupancy = self.occupancy + self.placement_consumption(request, group_counts)
        for g, cnt in group_counts.items():
            self.tiles_used[g] += cnt
        self.placements.append(PlacedRequest(request, row, dict(group_counts)))

    def reject(self, request: DemandRequest) -> None:
        self.rejections.append(request.id)

    def copy(self) -> "PlacementState":
        clone = PlacementState(self.topology, self.resources)
        clone.placements = list(self.placements)
        clone.rejections = list(self.rejections)
        clone.occupancy = self.occupancy.copy()
        clone.tiles_used = dict(self.tiles_used)
        return clone

    # --- independent re-derivation -------------------------------------------
    def recompute_occupancy(self) -> np.ndarray:
        occ = np.zeros(self.resources.num_nodes)
        for p in self.placements:
            occ += self.placement_consumption(p.request, p.group_counts)
        return occ

    def verify_consistency(self, tol: float = 1e-6) -> None:
        occ = self.recompute_occupancy()
        if not np.allclose(occ, self.occupancy, atol=tol):
            raise PlacementError(["occupancy drift: incremental != recomputed"])
        if np.any(occ > self.resources.capacities + tol):
            k = int(np.argmax(occ - self.resources.capacities))
            raise PlacementError([f"capacity exceeded at {self.resources.node_label(k)}"])
        for p in self.placements:
            rows = {self.topology.groups[g].row for g in p.group_counts if p.group_counts[g] > 0}
            if len(rows) > 1:
                raise PlacementError([f"request {p.request.id} spans rows {sorted(rows)}"])
            if sum(p.group_counts.values()) != p.request.racks:
                raise PlacementError([f"request {p.request.id} rack count mismatch"])
