from .topology import (
    CoolingZone,
    DataCenterTopology,
    PowerDevice,
    Row,
    TileGroup,
    TopologyError,
    gen_simulated_topology,
)
from .demand import DemandConfig, DemandRequest, sample_demand
from .resources import ResourceNodeSet
from .state import PlacementState, PlacedRequest
from .model import PlacementObjectiveConfig, SecondaryWeights, build_placement_ip, secondary_objectives
from .analysis import moving_horizon_length, power_stranding, validate_failover
from .family import PlacementDecision, RackPlacementFamily

__all__ = [
    "CoolingZone",
    "DataCenterTopology",
    "DemandConfig",
    "DemandRequest",
    "PlacedRequest",
    "PlacementDecision",
    "PlacementObjectiveConfig",
    "PlacementState",
    "PowerDevice",
    "RackPlacementFamily",
    "ResourceNodeSet",
    "Row",
    "SecondaryWeights",
    "TileGroup",
    "TopologyError",
    "build_placement_ip",
    "gen_simulated_topology",
    "moving_horizon_length",
    "power_stranding",
    "sample_demand",
    "secondary_objectives",
    "validate_failover",
]
