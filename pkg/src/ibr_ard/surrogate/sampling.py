# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Seeded Latin-hypercube and uniform sampling over coordinate boxes."""

import logging
from typing import Dict, List, Mapping, Tuple

import numpy as np
from scipy.stats import qmc

from ibr_ard.models.types import COORDINATES, ParameterVector

logger = logging.getLogger(__name__)

Bounds = Dict[str, Tuple[float, float]]


def check_bounds(bounds: Mapping[str, Tuple[float, float]]) -> Bounds:
    """Validate a full per-coordinate box and return it as plain tuples."""
    missing = [name for name in COORDINATES if name not in bounds]
    if missing:
        raise ValueError(f"bounds missing coordinates: {missing}")
    checked: Bounds = {}
    for name in COORDINATES:
        lo, hi = (float(v) for v in bounds[name])
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
            raise ValueError(f"invalid interval for {name}: [{lo}, {hi}]")
        checked[name] = (lo, hi)
    return checked


def active_coordinates(bounds: Mapping[str, Tuple[float, float]]) -> List[str]:
    """Coordinates with a non-degenerate interval, in canonical order."""
    return [name for name in COORDINATES if bounds[name][1] > bounds[name][0]]


def _scale(unit: np.ndarray, bounds: Bounds, names: List[str]) -> List[ParameterVector]:
    lo = np.array([bounds[name][0] for name in COORDINATES])
    samples = np.tile(lo, (unit.shape[0], 1))
    for column, name in enumerate(names):
        a, b = bounds[name]
        samples[:, COORDINATES.index(name)] = a + (b - a) * unit[:, column]
    return [ParameterVector.from_array(row) for row in samples]


def lhs_sample(
    bounds: Mapping[str, Tuple[float, float]], n: int, seed: int
) -> List[ParameterVector]:
    """Latin-hypercube sample with one point per stratum on every 1-D projection.

    Degenerate intervals (lo == hi) hold that coordinate constant and are
    reported at WARNING level.
    """
    if n < 2:
        raise ValueError(f"lhs_sample needs n >= 2, got {n}")
    checked = check_bounds(bounds)
    names = active_coordinates(checked)
    degenerate = [name for name in COORDINATES if name not in names]
    if degenerate:
        logger.warning("Degenerate sampling intervals held constant | coordinates=%s", degenerate)
    if not names:
        return _scale(np.zeros((n, 0)), checked, names)
    unit = qmc.LatinHypercube(d=len(names), seed=seed).random(n)
    return _scale(unit, checked, names)


def uniform_sample(
    bounds: Mapping[str, Tuple[float, float]], n: int, seed: int
) -> List[ParameterVector]:
    checked = check_bounds(bounds)
    names = active_coordinates(checked)
    unit = np.random.default_rng(seed).random((n, len(names)))
    return _scale(unit, checked, names)
