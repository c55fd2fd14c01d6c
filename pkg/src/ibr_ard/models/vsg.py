# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Reduced-order grid-forming VSG linearized in the synchronous dq frame.

States are ``[d_delta, d_omega, d_E]``. The inputs are the current
injected into the inverter terminal and the outputs are the terminal voltage,
so the transfer is the output impedance ``Z_inv`` with ``dv = Z_inv * di``.
The current delivered to the grid is ``-di``.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ibr_ard.models.types import (
    IDENTITY,
    ROTATION,
    FilterParameters,
    ParameterVector,
    StateSpaceModel,
)
from ibr_ard.shared.errors import DegenerateModelError, InfeasibleOperatingPointError

logger = logging.getLogger(__name__)

NEWTON_TOLERANCE = 1e-10
NEWTON_MAX_ITER = 50

STATE_LABELS = ("delta", "omega", "E")
INPUT_LABELS = ("id", "iq")
OUTPUT_LABELS = ("vd", "vq")


@dataclass(frozen=True)
class SteadyState:
    """Equilibrium of the VSG branch: EMF angle/magnitude and grid current."""

    delta0: float
    E0: float
    I0d: float
    I0q: float
    iterations: int = 0

    @property
    def emf(self) -> np.ndarray:
        return np.array([self.E0 * np.cos(self.delta0), self.E0 * np.sin(self.delta0)])

    @property
    def current(self) -> np.ndarray:
        return np.array([self.I0d, self.I0q])


def _branch_power(
    delta: float, E: float, V0: float, z_branch: complex
) -> Tuple[complex, complex, complex]:
    """Terminal complex power and its derivatives w.r.t. (delta, E)."""
    rotor = np.exp(1j * delta)
    current = (E * rotor - V0) / z_branch
    d_current_d_delta = 1j * E * rotor / z_branch
    d_current_d_E = rotor / z_branch
    return (
        V0 * np.conj(current),
        V0 * np.conj(d_current_d_delta),
        V0 * np.conj(d_current_d_E),
    )


def solve_steady_state(
    v: ParameterVector, filter_params: FilterParameters, omega0: float
) -> SteadyState:
    """Damped Newton iteration on (delta0, E0) from a flat start.

    The mismatch is normalized by the apparent-power scale of the operating
    point so the tolerance reads as per-unit.

    Raises:
        InfeasibleOperatingPointError: No solution within tolerance, or the
            solution lies beyond the static stability limit.
    """
    resistance = v.Rv + filter_params.Rf
    inductance = v.Lv + filter_params.Lf
    z_branch = complex(resistance, omega0 * inductance)
    target = complex(v.P0, v.Q0)
    scale = max(abs(target), v.V0**2 / abs(z_branch))

    def mismatch(state: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        power, d_delta, d_E = _branch_power(state[0], state[1], v.V0, z_branch)
        residual = np.array([(power - target).real, (power - target).imag]) / scale
        jacobian = np.array([[d_delta.real, d_E.real], [d_delta.imag, d_E.imag]]) / scale
        return residual, jacobian

    state = np.array([0.0, v.V0])
    residual, jacobian = mismatch(state)
    for iteration in range(1, NEWTON_MAX_ITER + 1):
        if np.linalg.norm(residual, np.inf) < NEWTON_TOLERANCE:
            break
        try:
            step = np.linalg.solve(jacobian, -residual)
        except np.linalg.LinAlgError as exc:
            raise InfeasibleOperatingPointError(
                f"singular power-flow Jacobian at iteration {iteration}"
            ) from exc
        damping = 1.0
        while damping > 1e-6:
            candidate = state + damping * step
            if candidate[1] > 0:
                trial_residual, trial_jacobian = mismatch(candidate)
                if np.linalg.norm(trial_residual) < np.linalg.norm(residual):
                    break
            damping *= 0.5
        else:
            raise InfeasibleOperatingPointError(
                f"Newton iteration stalled | P0={v.P0} Q0={v.Q0} V0={v.V0}"
            )
        state, residual, jacobian = candidate, trial_residual, trial_jacobian
    else:
        if np.linalg.norm(residual, np.inf) >= NEWTON_TOLERANCE:
            raise InfeasibleOperatingPointError(
                f"no steady state within {NEWTON_MAX_ITER} iterations | "
                f"P0={v.P0} Q0={v.Q0} V0={v.V0} mismatch={np.linalg.norm(residual, np.inf):.3e}"
            )

    delta0, E0 = float(state[0]), float(state[1])
    if abs(delta0) >= np.pi / 2:
        raise InfeasibleOperatingPointError(
            f"operating point beyond the static limit | delta0={delta0:.4f} rad"
        )
    return SteadyState(
        delta0=delta0,
        E0=E0,
        I0d=v.P0 / v.V0,
        I0q=-v.Q0 / v.V0,
        iterations=iteration,
    )


def build_vsg_state_space(
    v: ParameterVector,
    filter_params: FilterParameters,
    omega0: float,
    steady_state: Optional[SteadyState] = None,
) -> StateSpaceModel:
    """Linearized VSG output-impedance model.

    The power deviations ``dP_e`` and ``dQ_e`` are linearized at the internal
    EMF, not at the terminal. Terminal power ``v_d*i_d + v_q*i_q`` would feed
    the series inductance drop ``sL*di`` back into the swing and voltage loops
    and make the model improper (a transfer growing like ``s^2``).

    Args:
        v: Operating point and control parameters (SI units).
        filter_params: Output filter series resistance and inductance.
        omega0: Synchronous angular frequency (rad/s).
        steady_state: Reuse a precomputed equilibrium.

    Returns:
        A 3-state model whose transfer ``C(sI-A)^-1 B + D + sE`` is Z_inv.
    """
    v.validate()
    if omega0 <= 0:
        raise ValueError(f"omega0 must be positive, got {omega0}")
    ss = steady_state or solve_steady_state(v, filter_params, omega0)

    resistance = v.Rv + filter_params.Rf
    inductance = v.Lv + filter_params.Lf
    reactance = omega0 * inductance
    e0d, e0q = ss.emf
    i0d, i0q = ss.current
    sin0, cos0 = np.sin(ss.delta0), np.cos(ss.delta0)

    # d(e_dq) / d[delta, omega, E]
    c_emf = np.array([[-ss.E0 * sin0, 0.0, cos0], [ss.E0 * cos0, 0.0, sin0]])
    p_state = i0d * c_emf[0] + i0q * c_emf[1]
    q_state = i0d * c_emf[1] - i0q * c_emf[0]
    e_omega = np.array([0.0, 1.0, 0.0])
    e_voltage = np.array([0.0, 0.0, 1.0])

    A = np.vstack(
        [
            e_omega,
            (-p_state - v.Dp * e_omega) / v.J,
            (-v.Kq * q_state - e_voltage) / v.tau_q,
        ]
    )
    B = np.array(
        [
            [0.0, 0.0],
            [e0d / v.J, e0q / v.J],
            [v.Kq * e0q / v.tau_q, -v.Kq * e0d / v.tau_q],
        ]
    )
    D = resistance * IDENTITY + reactance * ROTATION
    E = inductance * IDENTITY

    if np.linalg.matrix_rank(c_emf) < 2:
        raise DegenerateModelError(f"EMF linearization is rank deficient at E0={ss.E0}")

    logger.debug(
        "Built VSG model | P0=%s Q0=%s V0=%s delta0=%.6f E0=%.6f newton_iter=%d",
        v.P0,
        v.Q0,
        v.V0,
        ss.delta0,
        ss.E0,
        ss.iterations,
    )
    return StateSpaceModel(
        A=A,
        B=B,
        C=c_emf,
        D=D,
        E=E,
        state_labels=STATE_LABELS,
        input_labels=INPUT_LABELS,
        output_labels=OUTPUT_LABELS,
    )
