# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Impedance evaluation, series interconnection and the eigenvalue oracle."""

import logging
from typing import Optional, Union

import numpy as np
from scipy.linalg import expm

from ibr_ard.models.types import (
    DqMatrix,
    FrequencyGrid,
    GridEquivalent,
    ImpedanceSpectrum,
    PoleResidueModel,
    StateSpaceModel,
    TimeResponse,
)
from ibr_ard.shared.errors import AssemblyError, NearSingularEvaluationError

logger = logging.getLogger(__name__)

EIGEN_PROXIMITY = 1e-9


def _resolvent_guard(model: StateSpaceModel, s: complex) -> None:
    if model.n_states == 0:
        return
    scale = np.linalg.norm(model.A)
    gap = np.min(np.abs(model.eigenvalues - s))
    if gap <= EIGEN_PROXIMITY * max(scale, 1.0):
        raise NearSingularEvaluationError(
            f"s={s:.6g} lies within {gap:.3e} of an eigenvalue of A"
        )


def evaluate_impedance(model: StateSpaceModel, s: complex) -> DqMatrix:
    """Evaluate ``C(sI-A)^-1 B + D + sE`` at one complex frequency.

    Raises:
        NearSingularEvaluationError: ``s`` coincides with an eigenvalue of A.
    """
    _resolvent_guard(model, s)
    value = model.D + s * model.E
    if model.n_states:
        resolvent = np.linalg.solve(s * np.eye(model.n_states) - model.A, model.B)
        value = value + model.C @ resolvent
    return np.asarray(value, dtype=complex)


def impedance_spectrum(
    model: StateSpaceModel, grid: FrequencyGrid, role: str = "impedance"
) -> ImpedanceSpectrum:
    values = np.stack([evaluate_impedance(model, s) for s in grid.s])
    return ImpedanceSpectrum(grid, values, role)


def grid_impedance_spectrum(g: GridEquivalent, grid: FrequencyGrid) -> ImpedanceSpectrum:
    return ImpedanceSpectrum(grid, np.stack([g.impedance(s) for s in grid.s]))


def assemble_interconnection(
    inverter: StateSpaceModel, g: Union[GridEquivalent, StateSpaceModel]
) -> StateSpaceModel:
    """Series loop of the inverter and the grid behind an ideal source.

    States are ``[x_inv; x_grid; i]`` where ``i`` is the loop current. The
    input is a series voltage injection and the output is the loop current,
    so the transfer equals ``(Z_inv + Z_g)^-1`` and the eigenvalues of A are
    the system modes.

    Raises:
        AssemblyError: Incompatible port dimensions, or the combined series
            inductance is singular (algebraic loop).
    """
    grid_model = g.to_state_space() if isinstance(g, GridEquivalent) else g
    if inverter.D.shape != (2, 2) or grid_model.D.shape != (2, 2):
        raise AssemblyError(
            f"interconnection needs 2x2 ports, got {inverter.D.shape} and {grid_model.D.shape}"
        )
    inductance = inverter.E + grid_model.E
    if np.linalg.cond(inductance) > 1e12:
        raise AssemblyError("combined series inductance is singular; the loop is algebraic")
    m_inv = np.linalg.inv(inductance)

    n_inv, n_grid = inverter.n_states, grid_model.n_states
    n = n_inv + n_grid + 2
    inv_slice = slice(0, n_inv)
    grid_slice = slice(n_inv, n_inv + n_grid)
    loop_slice = slice(n_inv + n_grid, n)

    A = np.zeros((n, n))
    A[inv_slice, inv_slice] = inverter.A
    A[inv_slice, loop_slice] = inverter.B
    A[grid_slice, grid_slice] = grid_model.A
    A[grid_slice, loop_slice] = grid_model.B
    A[loop_slice, inv_slice] = -m_inv @ inverter.C
    A[loop_slice, grid_slice] = -m_inv @ grid_model.C
    A[loop_slice, loop_slice] = -m_inv @ (inverter.D + grid_model.D)

    B = np.zeros((n, 2))
    B[loop_slice, :] = m_inv
    C = np.zeros((2, n))
    C[:, loop_slice] = np.eye(2)

    labels = (
        tuple(f"inv.{label}" for label in inverter.state_labels)
        + tuple(f"grid.{label}" for label in grid_model.state_labels)
        + ("loop.id", "loop.iq")
    )
    return StateSpaceModel(
        A=A,
        B=B,
        C=C,
        D=np.zeros((2, 2)),
        state_labels=labels,
        input_labels=("vd_inj", "vq_inj"),
        output_labels=("id", "iq"),
    )


def modal_pole_residue(model: StateSpaceModel) -> PoleResidueModel:
    """Exact pole/residue form of a state-space transfer by eigendecomposition.

    Assumes A is diagonalizable, which holds for the interconnected models
    built here (distinct modes).
    """
    eigenvalues, right = np.linalg.eig(model.A)
    left = np.linalg.inv(right)
    residues = np.einsum("pk,km->kpm", model.C @ right, left @ model.B)
    return PoleResidueModel(
        poles=eigenvalues,
        residues=residues,
        feedthrough=model.D,
        linear=model.E,
        metadata={"source": "modal"},
    )


def linear_response(
    model: StateSpaceModel,
    x0: np.ndarray,
    t_end: float,
    dt: float,
    output: Optional[np.ndarray] = None,
) -> TimeResponse:
    """Free response by fixed-step matrix-exponential propagation.

    Args:
        model: Model whose A and C drive the response.
        x0: Initial state.
        t_end: Final time (s).
        dt: Step (s).
        output: Optional output matrix replacing ``model.C``.

    Returns:
        Samples ``y_k = C x_k`` at ``t_k = k * dt``.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_end < dt:
        raise ValueError(f"t_end must be at least dt, got t_end={t_end} dt={dt}")
    x = np.asarray(x0, dtype=float).reshape(model.n_states)
    c_out = model.C if output is None else np.asarray(output, dtype=float)
    steps = int(np.floor(t_end / dt + 1e-9))
    transition = expm(model.A * dt)

    states = np.empty((steps + 1, model.n_states))
    states[0] = x
    for k in range(steps):
        states[k + 1] = transition @ states[k]
    t = dt * np.arange(steps + 1)
    return TimeResponse(t=t, y=states @ c_out.T, output_labels=model.output_labels)


def dominant_frequency(response: TimeResponse) -> float:
    """Frequency (Hz) of the largest spectral peak summed over outputs."""
    y = response.y - response.y.mean(axis=0)
    if y.shape[0] < 4:
        raise ValueError("time response too short for a spectral estimate")
    dt = float(response.t[1] - response.t[0])
    window = np.hanning(y.shape[0])[:, None]
    magnitude = np.abs(np.fft.rfft(y * window, axis=0)).sum(axis=1)
    freqs = np.fft.rfftfreq(y.shape[0], dt)
    magnitude[0] = 0.0
    return float(freqs[int(np.argmax(magnitude))])
