# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Nodal admittance assembly with dq blocks and Thevenin reduction."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ibr_ard.models.interconnect import evaluate_impedance
from ibr_ard.models.types import (
    IDENTITY,
    ROTATION,
    DqMatrix,
    FrequencyGrid,
    GridEquivalent,
    ImpedanceSpectrum,
    rl_block,
)
from ibr_ard.models.vsg import build_vsg_state_space
from ibr_ard.network.system import SystemDescription
from ibr_ard.shared.errors import ArdError, ComponentSingularityError, NearResonanceError
from ibr_ard.shared.export import export_spectrum_as_csv

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class TheveninEquivalent:
    bus_id: str
    spectrum: ImpedanceSpectrum

    def __post_init__(self):
        if not np.all(np.isfinite(self.spectrum.values)):
            raise ValueError(f"Thevenin spectrum at bus {self.bus_id} is not finite")

    def to_csv(self) -> str:
        return export_spectrum_as_csv(self.spectrum)


def _invert(block: DqMatrix, element: str, s: complex) -> DqMatrix:
    if not np.all(np.isfinite(block)) or np.linalg.cond(block) > CONDITION_LIMIT:
        raise ComponentSingularityError(f"{element} is singular at s={s:.6g}")
    return np.linalg.inv(block)


def capacitor_admittance(C: float, omega0: float, s: complex) -> DqMatrix:
    return s * C * IDENTITY + omega0 * C * ROTATION


def bus_index(sys: SystemDescription) -> List[str]:
    """Order of the non-slack buses in the nodal matrix."""
    return [bus.id for bus in sys.buses if bus.type != "slack"]


def nodal_admittance(
    sys: SystemDescription,
    s: complex,
    exclude_unit_at: Optional[str] = None,
    include_units: bool = True,
) -> Tuple[np.ndarray, List[str]]:
    """Nodal admittance matrix of 2x2 dq blocks with the slack bus eliminated.

    IBR units other than ``exclude_unit_at`` enter as shunt admittances
    ``Z_inv^-1`` of their nominal white-box model.

    Returns:
        ``(Y, order)`` with ``Y`` of shape (2n, 2n) over the non-slack buses
        listed in ``order``.

    Raises:
        ComponentSingularityError: A branch, shunt or unit block is singular.
    """
    order = bus_index(sys)
    position = {bus_id: k for k, bus_id in enumerate(order)}
    Y = np.zeros((2 * len(order), 2 * len(order)), dtype=complex)

    def stamp(i: int, j: int, block: DqMatrix) -> None:
        Y[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] += block

    for branch in sys.branches:
        y = _invert(rl_block(branch.R, branch.L, sys.omega0, s), branch.name, s)
        ends = [position.get(branch.from_bus), position.get(branch.to_bus)]
        for k in ends:
            if k is not None:
                stamp(k, k, y)
        if None not in ends:
            stamp(ends[0], ends[1], -y)
            stamp(ends[1], ends[0], -y)

    for shunt in sys.shunts:
        k = position.get(shunt.bus)
        if k is None:
            continue
        y = capacitor_admittance(shunt.C, sys.omega0, s)
        if shunt.has_rl:
            y = y + _invert(rl_block(shunt.R, shunt.L, sys.omega0, s), shunt.name, s)
        stamp(k, k, y)

    if include_units:
        for unit in sys.ibr_units:
            if unit.bus == exclude_unit_at:
                continue
            element = f"IBR unit at bus {unit.bus}"
            try:
                model = build_vsg_state_space(unit.params, unit.filter_params, sys.omega0)
                z_inv = evaluate_impedance(model, s)
            except ArdError as exc:
                raise ComponentSingularityError(f"{element}: {exc}") from exc
            stamp(position[unit.bus], position[unit.bus], _invert(z_inv, element, s))
    return Y, order


def kron_reduce(Y: np.ndarray, keep: int, omega: float = 0.0) -> DqMatrix:
    """Eliminate every block except ``keep`` and return the reduced 2x2 block.

    Raises:
        NearResonanceError: The eliminated sub-matrix is singular.
    """
    rows = slice(2 * keep, 2 * keep + 2)
    mask = np.ones(Y.shape[0], dtype=bool)
    mask[rows] = False
    Y_kk = Y[rows, rows]
    if not mask.any():
        return Y_kk
    Y_ee = Y[np.ix_(mask, mask)]
    if np.linalg.cond(Y_ee) > CONDITION_LIMIT:
        raise NearResonanceError(f"Kron reduction singular at omega={omega:.6g} rad/s", omega)
    return Y_kk - Y[rows][:, mask] @ np.linalg.solve(Y_ee, Y[mask][:, rows])


def thevenin_impedance(
    sys: SystemDescription, bus: str, s: complex, include_units: bool = True
) -> DqMatrix:
    """Grid-side impedance at ``bus`` with its own unit removed."""
    if sys.bus(bus).type != "ibr":
        raise ValueError(f"bus {bus} is not an ibr bus")
    Y, order = nodal_admittance(sys, s, exclude_unit_at=bus, include_units=include_units)
    reduced = kron_reduce(Y, order.index(bus), omega=float(np.imag(s)))
    if np.linalg.cond(reduced) > CONDITION_LIMIT:
        raise NearResonanceError(
            f"reduced admittance at bus {bus} is singular at omega={np.imag(s):.6g} rad/s",
            float(np.imag(s)),
        )
    return np.linalg.inv(reduced)


def thevenin_at(
    sys: SystemDescription, bus: str, grid: FrequencyGrid, max_workers: int = 1
) -> TheveninEquivalent:
    """Thevenin impedance spectrum seen from ``bus`` on ``grid``.

    Raises:
        NearResonanceError: Reduction singular at a grid point (names omega).
    """
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        values = list(executor.map(lambda s: thevenin_impedance(sys, bus, s), grid.s))
    logger.debug("Thevenin sweep complete | bus=%s points=%d", bus, len(grid))
    return TheveninEquivalent(bus_id=bus, spectrum=ImpedanceSpectrum(grid, np.stack(values)))


def scr_proxy(sys: SystemDescription, bus: str) -> float:
    """Short-circuit ratio proxy ``(V_base^2 / ||Z_th||_2) / P_rated``.

    Evaluated on the passive network at the synchronous frequency, which is
    ``s = 0`` in the synchronous dq frame. A zero Thevenin impedance gives
    ``inf``.
    """
    unit = sys.unit_at(bus)
    z_th = thevenin_impedance(sys, bus, 0j, include_units=False)
    magnitude = float(np.linalg.norm(z_th, 2))
    if magnitude == 0:
        logger.warning("Zero Thevenin impedance | bus=%s scr=inf", bus)
        return float("inf")
    return (sys.bases.v_base**2 / magnitude) / unit.P_rated


def rl_equivalent(sys: SystemDescription, bus: str) -> GridEquivalent:
    """Series RL grid with the passive Thevenin block of ``bus`` at ``s = 0``.

    Exact when the path to the slack bus is resistive-inductive only. Shunts
    are folded into the synchronous-frequency value; other units are left out.

    Raises:
        ValueError: The equivalent reactance is not inductive.
    """
    z_th = thevenin_impedance(sys, bus, 0j, include_units=False)
    resistance, reactance = float(z_th[0, 0].real), float(z_th[1, 0].real)
    if reactance <= 0:
        raise ValueError(f"Thevenin reactance at bus {bus} is not inductive ({reactance:.6g})")
    return GridEquivalent(Rg=max(resistance, 0.0), Lg=reactance / sys.omega0, omega0=sys.omega0)
