"""Multi-bus network: description, Thevenin reduction and bus assessment."""

from ibr_ard.network.pipeline import (
    AssessmentConfig,
    BusAssessment,
    BusModes,
    FitSettings,
    RankingReport,
    SurrogateSettings,
    assess_bus,
    identify_bus_modes,
    rank_buses,
)
from ibr_ard.network.reduction import (
    TheveninEquivalent,
    kron_reduce,
    nodal_admittance,
    scr_proxy,
    thevenin_at,
    thevenin_impedance,
)
from ibr_ard.network.system import Branch, Bus, IbrUnit, Shunt, SystemDescription

__all__ = [
    "AssessmentConfig",
    "Branch",
    "Bus",
    "BusAssessment",
    "BusModes",
    "FitSettings",
    "IbrUnit",
    "RankingReport",
    "Shunt",
    "SurrogateSettings",
    "SystemDescription",
    "TheveninEquivalent",
    "assess_bus",
    "identify_bus_modes",
    "kron_reduce",
    "nodal_admittance",
    "rank_buses",
    "scr_proxy",
    "thevenin_at",
    "thevenin_impedance",
]
