from .instance import (
    BimodalSpec,
    DiscreteColumnsSpec,
    ResourceAllocInstance,
    RewardMixSpec,
    StageSample,
)
from .generators import (
    gen_binary_knapsack,
    gen_gap,
    gen_general,
    gen_knapsack,
    gen_prop3_instance,
    gen_prop4_instance,
)
from .family import AllocDecision, ResourceAllocationFamily
from .exact import DpPolicy, StateSpaceError, dp_solve, scenario_tree_solve

__all__ = [
    "AllocDecision",
    "BimodalSpec",
    "DiscreteColumnsSpec",
    "DpPolicy",
    "ResourceAllocInstance",
    "ResourceAllocationFamily",
    "RewardMixSpec",
    "StageSample",
    "StateSpaceError",
    "dp_solve",
    "gen_binary_knapsack",
    "gen_gap",
    "gen_general",
    "gen_knapsack",
    "gen_prop3_instance",
    "gen_prop4_instance",
    "scenario_tree_solve",
]
