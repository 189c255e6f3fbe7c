"""Region-aware INR image codec and fog communication planner."""

from ._rinr import (
    decode,
    encode,
    entropy,
    fog_plan,
    group_latency,
    parameter_count,
    psnr,
    route_decision,
    select_object_arch,
)

__all__ = [
    "decode",
    "encode",
    "entropy",
    "fog_plan",
    "group_latency",
    "parameter_count",
    "psnr",
    "route_decision",
    "select_object_arch",
]
