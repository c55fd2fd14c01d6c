"""Gray-box identification: ERA, vector fitting, critical modes."""

from ibr_ard.identification.era import era_identify, markov_parameters
from ibr_ard.identification.modes import (
    Mode,
    ParticipationFactor,
    participation_factor,
    select_critical_modes,
    track_mode,
)
from ibr_ard.identification.records import TransientRecord, synthesize_transients
from ibr_ard.identification.vector_fitting import (
    assemble_admittance,
    fit_rms_error,
    vector_fit,
)

__all__ = [
    "Mode",
    "ParticipationFactor",
    "TransientRecord",
    "assemble_admittance",
    "era_identify",
    "fit_rms_error",
    "markov_parameters",
    "participation_factor",
    "select_critical_modes",
    "synthesize_transients",
    "track_mode",
    "vector_fit",
]
