"""Attack Reachable Domain engine and Attack Penetration Index."""

from ibr_ard.ard.api import ApiResult, BusApiReport, bus_report, compute_api
from ibr_ard.ard.attack_set import (
    FeasibleAttackSet,
    StealthModel,
    is_stealthy,
    project,
    stealth_distances,
)
from ibr_ard.ard.engine import (
    ArdCloud,
    ArdSample,
    AscentConfig,
    boundary_ascent,
    drift,
    sample_ard,
    trace_boundary,
)
from ibr_ard.ard.studies import (
    EngineConfig,
    assess_mode,
    cross_layer_study,
    privilege_chain,
    validate_worst_case,
)

__all__ = [
    "ApiResult",
    "ArdCloud",
    "ArdSample",
    "AscentConfig",
    "BusApiReport",
    "EngineConfig",
    "FeasibleAttackSet",
    "StealthModel",
    "assess_mode",
    "boundary_ascent",
    "bus_report",
    "compute_api",
    "cross_layer_study",
    "drift",
    "is_stealthy",
    "privilege_chain",
    "project",
    "sample_ard",
    "stealth_distances",
    "trace_boundary",
    "validate_worst_case",
]
