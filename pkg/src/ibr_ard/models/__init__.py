"""White-box dq-frame models and the interconnection eigenvalue oracle."""

from ibr_ard.models.interconnect import (
    assemble_interconnection,
    dominant_frequency,
    evaluate_impedance,
    grid_impedance_spectrum,
    impedance_spectrum,
    linear_response,
    modal_pole_residue,
)
from ibr_ard.models.types import (
    Bases,
    FilterParameters,
    FrequencyGrid,
    GridEquivalent,
    ImpedanceSpectrum,
    ParameterVector,
    PoleResidueModel,
    StateSpaceModel,
    TimeResponse,
)
from ibr_ard.models.vsg import SteadyState, build_vsg_state_space, solve_steady_state

__all__ = [
    "Bases",
    "FilterParameters",
    "FrequencyGrid",
    "GridEquivalent",
    "ImpedanceSpectrum",
    "ParameterVector",
    "PoleResidueModel",
    "StateSpaceModel",
    "SteadyState",
    "TimeResponse",
    "assemble_interconnection",
    "build_vsg_state_space",
    "dominant_frequency",
    "evaluate_impedance",
    "grid_impedance_spectrum",
    "impedance_spectrum",
    "linear_response",
    "modal_pole_residue",
    "solve_steady_state",
]
