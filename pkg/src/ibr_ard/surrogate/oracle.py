# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""White-box oracle surrogate backed by the dq-frame VSG model."""

from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from ibr_ard.models.interconnect import evaluate_impedance
from ibr_ard.models.types import COORDINATES, DqMatrix, FilterParameters, ParameterVector
from ibr_ard.models.vsg import build_vsg_state_space
from ibr_ard.surrogate.base import Surrogate

RELATIVE_STEP = 1e-6
NON_NEGATIVE = ("Dp", "Rv", "Lv")
CACHE_SIZE = 4096


class WhiteBoxSurrogate(Surrogate):
    """Exact impedance from the linearized VSG; gradients by central differences."""

    kind = "whitebox_oracle"

    def __init__(self, filter_params: FilterParameters, omega0: float):
        self.filter_params = filter_params
        self.omega0 = omega0
        self._cached = lru_cache(maxsize=CACHE_SIZE)(self._evaluate_uncached)

    def model(self, v: ParameterVector):
        return build_vsg_state_space(v, self.filter_params, self.omega0)

    def _evaluate_uncached(self, v: ParameterVector, s: complex) -> DqMatrix:
        return evaluate_impedance(self.model(v), s)

    def evaluate(self, v: ParameterVector, s: complex) -> DqMatrix:
        # cached arrays are shared
        return self._cached(v, complex(s)).copy()

    def gradient(
        self, v: ParameterVector, s: complex, coordinates: Optional[Sequence[str]] = None
    ) -> np.ndarray:
        names = list(COORDINATES if coordinates is None else coordinates)
        derivatives = []
        for name in names:
            value = getattr(v, name)
            h = RELATIVE_STEP * max(abs(value), 1e-3)
            upper = self.evaluate(v.with_values(**{name: value + h}), s)
            if name in NON_NEGATIVE and value - h < 0:
                derivatives.append((upper - self.evaluate(v, s)) / h)
                continue
            lower = self.evaluate(v.with_values(**{name: value - h}), s)
            derivatives.append((upper - lower) / (2 * h))
        return np.stack(derivatives) if derivatives else np.zeros((0, 2, 2), dtype=complex)
