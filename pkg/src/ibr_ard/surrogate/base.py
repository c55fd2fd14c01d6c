# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Common interface of parameter-to-impedance surrogates."""

from abc import ABC, abstractmethod
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from ibr_ard.models.types import COORDINATES, DqMatrix, ParameterVector, as_dq_matrix


class Surrogate(ABC):
    """Maps a ParameterVector to the inverter impedance at complex frequency s."""

    kind = "abstract"

    @abstractmethod
    def evaluate(self, v: ParameterVector, s: complex) -> DqMatrix:
        """Impedance (ohm) at ``s``."""

    @abstractmethod
    def gradient(
        self, v: ParameterVector, s: complex, coordinates: Optional[Sequence[str]] = None
    ) -> np.ndarray:
        """Derivatives w.r.t. SI coordinates, shape (len(coordinates), 2, 2)."""

    def delta(self, v: ParameterVector, nominal: ParameterVector, s: complex) -> DqMatrix:
        if v == nominal:
            return np.zeros((2, 2), dtype=complex)
        return self.evaluate(v, s) - self.evaluate(nominal, s)


class AffineSurrogate(Surrogate):
    """``Z(v) = Z0 + sum_c (v_c - v0_c) * G_c``, independent of s.

    Used to study the engine geometry with an exactly linear drift map.
    """

    kind = "affine"

    def __init__(
        self,
        nominal: ParameterVector,
        base: DqMatrix,
        slopes: Mapping[str, DqMatrix],
    ):
        unknown = set(slopes) - set(COORDINATES)
        if unknown:
            raise ValueError(f"unknown coordinates in slopes: {sorted(unknown)}")
        self.nominal = nominal
        self.base = as_dq_matrix(base, "base impedance")
        self.slopes: Dict[str, np.ndarray] = {
            name: as_dq_matrix(value, f"slope {name}") for name, value in slopes.items()
        }

    def evaluate(self, v: ParameterVector, s: complex) -> DqMatrix:
        value = self.base.copy()
        for name, slope in self.slopes.items():
            value = value + (getattr(v, name) - getattr(self.nominal, name)) * slope
        return value

    def gradient(
        self, v: ParameterVector, s: complex, coordinates: Optional[Sequence[str]] = None
    ) -> np.ndarray:
        names = list(COORDINATES if coordinates is None else coordinates)
        zero = np.zeros((2, 2), dtype=complex)
        return np.array([self.slopes.get(name, zero) for name in names], dtype=complex).reshape(
            len(names), 2, 2
        )
