"""Online stochastic optimization engine: resolving policies over MILP stage
problems, with resource allocation, batched bin packing, and rack placement
problem families, an experiment harness, and a placement session service."""

__version__ = "0.1.0"
