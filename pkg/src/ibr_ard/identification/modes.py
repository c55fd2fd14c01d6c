# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Critical modes and impedance participation factors."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from ibr_ard.models.types import DqMatrix, PoleResidueModel, as_dq_matrix
from ibr_ard.shared.errors import UnknownModeError

logger = logging.getLogger(__name__)

POLE_MATCH_RTOL = 1e-6
MODE_TRACKING_TOL = 2 * np.pi * 0.5
RESIDUE_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class ParticipationFactor:
    """Sensitivity of an eigenvalue to the inverter impedance, ``P = -Res^H``."""

    P: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P", as_dq_matrix(self.P, "participation factor"))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.P))

    def pair(self, delta_z: DqMatrix) -> complex:
        """First-order eigenvalue drift ``<P, dZ> = sum conj(P_mn) * dZ_mn``.

        With ``P = -Res^H`` this equals ``-sum (Res^T)_mn dZ_mn``, the
        eigenvalue shift of ``det(Z_inv + Z_g) = 0`` under ``Z_inv -> Z_inv + dZ``.
        """
        return complex(np.sum(np.conj(self.P) * np.asarray(delta_z)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "P": [[[float(v.real), float(v.imag)] for v in row] for row in self.P],
            "norm": self.norm,
        }


@dataclass(frozen=True, eq=False)
class Mode:
    """Positive-frequency representative of a critical oscillatory pole pair."""

    lambda0: complex
    participation: ParticipationFactor
    index: int = 0
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.lambda0.imag <= 0:
            raise ValueError(f"mode eigenvalue must have Im > 0, got {self.lambda0}")

    @property
    def frequency_hz(self) -> float:
        return self.lambda0.imag / (2 * np.pi)

    @property
    def damping_ratio(self) -> float:
        return -self.lambda0.real / abs(self.lambda0)

    @property
    def mode_id(self) -> str:
        return f"mode{self.index}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.mode_id,
            "lambda0": {"re": self.lambda0.real, "im": self.lambda0.imag},
            "frequency_hz": self.frequency_hz,
            "damping_ratio": self.damping_ratio,
            "participation": self.participation.to_dict(),
        }


def participation_factor(m: PoleResidueModel, lambda0: complex) -> ParticipationFactor:
    """Negated conjugate transpose of the residue at ``lambda0``.

    Raises:
        UnknownModeError: ``lambda0`` is not a pole of ``m`` within 1e-6 relative.
    """
    index = m.pole_index(lambda0, POLE_MATCH_RTOL)
    if index is None:
        raise UnknownModeError(f"lambda0={lambda0:.6g} does not match any pole of the model")
    return ParticipationFactor(-np.conj(m.residues[index]).T)


def select_critical_modes(
    m: PoleResidueModel,
    band_hz: Tuple[float, float],
    top_k: int = 2,
    residue_floor: float = RESIDUE_FLOOR,
) -> List[Mode]:
    """Oscillatory in-band poles sorted by descending real part.

    Poles whose residue norm is below ``residue_floor`` times the largest
    in-band residue norm carry no measurable participation and are dropped.
    An empty selection is recorded in ``m.metadata["mode_selection"]``.
    """
    low, high = band_hz
    if not 0 <= low < high:
        raise ValueError(f"invalid band {band_hz}")
    upper = np.nonzero(
        (m.poles.imag > 2 * np.pi * low) & (m.poles.imag <= 2 * np.pi * high)
    )[0]
    if upper.size:
        norms = np.linalg.norm(m.residues[upper], axis=(1, 2))
        upper = upper[norms >= residue_floor * norms.max()]
    order = sorted(upper, key=lambda k: (-m.poles[k].real, m.poles[k].imag))
    modes = [
        Mode(
            lambda0=complex(m.poles[k]),
            participation=participation_factor(m, complex(m.poles[k])),
            index=rank,
        )
        for rank, k in enumerate(order[:top_k])
    ]
    m.metadata["mode_selection"] = {"band_hz": list(band_hz), "n_selected": len(modes)}
    if not modes:
        m.metadata["mode_selection"]["empty"] = True
        logger.warning("No oscillatory pole in band | band_hz=%s", band_hz)
    return modes


def track_mode(modes: List[Mode], lambda0: complex, tol: float = MODE_TRACKING_TOL) -> Mode:
    """Find the mode closest to ``lambda0`` within an absolute tolerance (rad/s)."""
    if not modes:
        raise UnknownModeError("no modes to track against")
    best = min(modes, key=lambda mode: abs(mode.lambda0 - lambda0))
    if abs(best.lambda0 - lambda0) > tol:
        raise UnknownModeError(f"no mode within {tol:.3f} rad/s of {lambda0:.6g}")
    return best
