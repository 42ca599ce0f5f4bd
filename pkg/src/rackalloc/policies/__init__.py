from .family import ProblemFamily, StageRecord, Trajectory
from .engine import PolicyFailure, run_ce, run_hindsight, run_myopic, run_oso

__all__ = [
    "PolicyFailure",
    "ProblemFamily",
    "StageRecord",
    "Trajectory",
    "run_ce",
    "run_hindsight",
    "run_myopic",
    "run_oso",
]
