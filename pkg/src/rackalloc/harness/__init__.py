from .config import CellSpec, ExperimentConfig
from .metrics import MetricRow, adoption_rate, stranding_increase
from .run import run_experiment

__all__ = [
    "CellSpec",
    "ExperimentConfig",
    "MetricRow",
    "adoption_rate",
    "run_experiment",
    "stranding_increase",
]
