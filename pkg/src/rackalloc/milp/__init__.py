from .model import (
    BINARY,
    CONTINUOUS,
    INTEGER,
    Constraint,
    IpModel,
    ModelBuilder,
    ModelValidationError,
    VarBlock,
)
from .lp_io import dump_lp, load_lp
from .solve import (
    BruteForceError,
    SolveLimits,
    SolveOutcome,
    SolveStatus,
    SolverError,
    brute_force_solve,
    solve,
)

__all__ = [
    "BINARY",
    "CONTINUOUS",
    "INTEGER",
    "BruteForceError",
    "Constraint",
    "IpModel",
    "ModelBuilder",
    "ModelValidationError",
    "SolveLimits",
    "SolveOutcome",
    "SolveStatus",
    "SolverError",
    "VarBlock",
    "brute_force_solve",
    "dump_lp",
    "load_lp",
    "solve",
]
