# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Attack Penetration Index per mode and per bus."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ibr_ard.ard.engine import ArdCloud, ArdSample
from ibr_ard.identification.modes import Mode
from ibr_ard.shared.errors import BaselineUnstableError

logger = logging.getLogger(__name__)

MARGIN_EROSION = "margin_erosion"
REACHABLE_INSTABILITY = "reachable_instability"
DEFAULT_GRID_RESOLUTION = 200
DEFAULT_GAMMA = 0.1


@dataclass(frozen=True, eq=False)
class ApiResult:
    value: float
    branch: str
    max_re_drift: float
    unstable_fraction: float
    worst_case: ArdSample
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "branch": self.branch,
            "max_re_drift": self.max_re_drift,
            "unstable_fraction": self.unstable_fraction,
            "worst_case": self.worst_case.to_dict(),
            "metadata": self.metadata,
        }


@dataclass(frozen=True, eq=False)
class BusApiReport:
    bus_id: str
    per_mode: List[Tuple[Mode, ApiResult]]
    bus_api: float
    dominant_mode_set: List[str]
    critical_mode: str

    @property
    def critical(self) -> Tuple[Mode, ApiResult]:
        return next(pair for pair in self.per_mode if pair[0].mode_id == self.critical_mode)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bus_id": self.bus_id,
            "bus_api": self.bus_api,
            "dominant_mode_set": self.dominant_mode_set,
            "critical_mode": self.critical_mode,
            "modes": [
                {"mode": mode.to_dict(), "api": result.to_dict()}
                for mode, result in self.per_mode
            ],
        }


def occupancy_fraction(points: np.ndarray, grid_resolution: int) -> Tuple[float, int, int]:
    """Fraction of occupied cells whose center lies in the closed right half-plane.

    The grid spans the bounding box of ``points`` with ``grid_resolution``
    cells per axis; a degenerate axis collapses to a single cell row.

    Returns:
        ``(fraction, unstable_cells, occupied_cells)``
    """
    x, y = points.real, points.imag
    x_lo, x_hi = float(x.min()), float(x.max())
    y_lo, y_hi = float(y.min()), float(y.max())
    x_width = (x_hi - x_lo) / grid_resolution
    y_width = (y_hi - y_lo) / grid_resolution

    def cells(values: np.ndarray, lo: float, width: float) -> np.ndarray:
        if width <= 0:
            return np.zeros(values.shape, dtype=int)
        return np.clip(np.floor((values - lo) / width).astype(int), 0, grid_resolution - 1)

    ix = cells(x, x_lo, x_width)
    iy = cells(y, y_lo, y_width)
    occupied = np.unique(np.stack([ix, iy], axis=1), axis=0)
    if x_width > 0:
        centers = x_lo + (occupied[:, 0] + 0.5) * x_width
    else:
        centers = np.full(occupied.shape[0], x_lo)
    unstable = int(np.count_nonzero(centers >= 0))
    return unstable / occupied.shape[0], unstable, int(occupied.shape[0])


def compute_api(cloud: ArdCloud, grid_resolution: int = DEFAULT_GRID_RESOLUTION) -> ApiResult:
    """Attack Penetration Index of one mode from its reachable-domain cloud.

    Margin erosion (every point stable) gives ``max Re(drift) / |Re(lambda0)|``;
    otherwise the value is ``1 + unstable occupied cells / occupied cells``.

    Raises:
        BaselineUnstableError: ``Re(lambda0) >= 0``.
    """
    if grid_resolution < 1:
        raise ValueError(f"grid_resolution must be positive, got {grid_resolution}")
    lambda0 = cloud.mode.lambda0
    if lambda0.real >= 0:
        raise BaselineUnstableError(
            f"baseline mode {cloud.mode.mode_id} is not stable (Re={lambda0.real:.6g})"
        )
    points = cloud.points()
    if not points:
        raise ValueError("cannot compute API of an empty cloud")

    worst = max(points, key=lambda p: (p.delta_lambda.real, -p.delta_lambda.imag))
    max_re_drift = float(worst.delta_lambda.real)
    eigenvalues = cloud.eigenvalues()

    if np.all(eigenvalues.real < 0):
        value = max(max_re_drift, 0.0) / abs(lambda0.real)
        result = ApiResult(
            value=value,
            branch=MARGIN_EROSION,
            max_re_drift=max_re_drift,
            unstable_fraction=0.0,
            worst_case=worst,
            metadata={"grid_resolution": grid_resolution, "n_points": len(points)},
        )
    else:
        fraction, unstable, occupied = occupancy_fraction(eigenvalues, grid_resolution)
        result = ApiResult(
            value=1.0 + fraction,
            branch=REACHABLE_INSTABILITY,
            max_re_drift=max_re_drift,
            unstable_fraction=fraction,
            worst_case=worst,
            metadata={
                "grid_resolution": grid_resolution,
                "n_points": len(points),
                "unstable_cells": unstable,
                "occupied_cells": occupied,
            },
        )
    logger.info(
        "API computed | mode=%s branch=%s value=%.6g",
        cloud.mode.mode_id,
        result.branch,
        result.value,
    )
    return result


def bus_report(
    bus_id: str,
    modes: Sequence[Tuple[Mode, ApiResult]],
    gamma: float = DEFAULT_GAMMA,
) -> BusApiReport:
    """Bus-level API over the modes with non-negligible participation.

    A mode is dominant when ``||P||_F >= gamma * max_k ||P_k||_F``. Ties in
    API go to the lowest mode frequency.
    """
    if not modes:
        raise ValueError("bus_report needs at least one mode")
    if not 0 <= gamma <= 1:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    largest = max(mode.participation.norm for mode, _ in modes)
    dominant = [
        (mode, result) for mode, result in modes if mode.participation.norm >= gamma * largest
    ]
    critical_mode, critical_result = min(
        dominant, key=lambda pair: (-pair[1].value, pair[0].frequency_hz)
    )
    return BusApiReport(
        bus_id=str(bus_id),
        per_mode=list(modes),
        bus_api=critical_result.value,
        dominant_mode_set=[mode.mode_id for mode, _ in dominant],
        critical_mode=critical_mode.mode_id,
    )
