"""Failover validation, power stranding, and the moving horizon rule."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .demand import DemandConfig
from .state import PlacementState
from .topology import UPS


@dataclass(frozen=True)
class DeviceLoadReport:
    device: str
    level: str
    load: float  # load with the failed UPS offline
    capacity: float  # failover capacity

    @property
    def violated(self) -> bool:
        return self.load > self.capacity + 1e-6


def validate_failover(state: PlacementState, failed_ups: str) -> list[DeviceLoadReport]:
    """Loads on every surviving device when ``failed_ups`` goes offline.

    Dual-homed racks shift their full power onto the surviving path; a state
    that satisfies the failover-pair constraints flags nothing.
    """
    topo = state.topology
    if failed_ups not in topo.devices or topo.devices[failed_ups].level != UPS:
        raise ValueError(f"{failed_ups} is not a UPS")
    subtree = topo.subtree[failed_ups]
    load: dict[str, float] = {
        d.id: 0.0 for d in topo.devices.values() if d.id not in subtree
    }
    for p in state.placements:
        rho = p.request.power
        for g, cnt in p.group_counts.items():
            devs, _ = topo.device_chain_of_group[g]
            dual = failed_ups in devs
            for dev in devs:
                if dev in subtree or dev not in load:
                    continue
                load[dev] += cnt * (rho if dual else rho / 2.0)
    return [
        DeviceLoadReport(
            dev, topo.devices[dev].level, load[dev], topo.devices[dev].failover
        )
        for dev in sorted(load)
    ]


def power_stranding(state: PlacementState) -> float:
    """Fraction of top-level regular power no longer usable.

    A UPS's residual counts as stranded once none of its connected tile
    groups has a free tile; the denominator is total UPS regular capacity.
    """
    topo = state.topology
    total = 0.0
    stranded = 0.0
    for ups in topo.ups_ids():
        cap = topo.devices[ups].regular
        total += cap
        residual = max(0.0, cap - state.device_load(ups))
        has_free_tile = any(
            state.free_tiles_in_group(g) > 0 for g in topo.groups_of_device[ups]
        )
        if not has_free_tile:
            stranded += residual
    return stranded / total if total else 0.0


def moving_horizon_length(
    state: PlacementState,
    demand: DemandConfig,
    default_horizon: int = 10,
) -> int:
    """Smallest number of future periods whose expected demand fills the
    residual power of all non-empty rooms; current requests keep priority
    through objective weighting, not through the horizon."""
    topo = state.topology
    nonempty = [m for m in topo.rooms if state.occupied_tiles_in_room(m) > 0]
    if not nonempty:
        return default_horizon
    residual = 0.0
    for ups in topo.ups_ids():
        rooms_served = {
            topo.rows[topo.groups[g].row].room for g in topo.groups_of_device[ups]
        }
        if not (rooms_served & set(nonempty)):
            continue
        # residual behind a UPS with no free connected tile is stranded, not fillable
        if not any(state.free_tiles_in_group(g) > 0 for g in topo.groups_of_device[ups]):
            continue
        residual += max(0.0, topo.devices[ups].regular - state.device_load(ups))
    per_period = demand.batch_size * demand.mean_request_power()
    if residual <= 1e-9:
        return 0
    return max(1, math.ceil(residual / per_period))
