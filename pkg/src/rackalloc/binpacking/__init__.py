from .instance import BatchedPackingInstance, UniformSizes
from .flow import (
    ArcNetwork,
    CertificateError,
    FlowModelState,
    build_flow_ip,
    decode_packing,
    regularizer_psi,
)
from .family import BatchedPackingFamily, PackDecision, run_batched_oso

__all__ = [
    "ArcNetwork",
    "BatchedPackingFamily",
    "BatchedPackingInstance",
    "CertificateError",
    "FlowModelState",
    "PackDecision",
    "UniformSizes",
    "build_flow_ip",
    "decode_packing",
    "regularizer_psi",
    "run_batched_oso",
]
