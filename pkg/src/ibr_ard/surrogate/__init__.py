"""Parameter-to-impedance surrogates and their training data."""

from ibr_ard.surrogate.base import AffineSurrogate, Surrogate
from ibr_ard.surrogate.dataset import TrainingDataset, bounds_of, generate_dataset
from ibr_ard.surrogate.oracle import WhiteBoxSurrogate
from ibr_ard.surrogate.rational import (
    RationalSurrogate,
    fit_surrogate,
    surrogate_eval,
    surrogate_grad,
)
from ibr_ard.surrogate.sampling import active_coordinates, lhs_sample, uniform_sample

__all__ = [
    "AffineSurrogate",
    "RationalSurrogate",
    "Surrogate",
    "TrainingDataset",
    "WhiteBoxSurrogate",
    "active_coordinates",
    "bounds_of",
    "fit_surrogate",
    "generate_dataset",
    "lhs_sample",
    "surrogate_eval",
    "surrogate_grad",
    "uniform_sample",
]
