# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Mode assessment and the studies built on it.

- ``assess_mode``: cloud, traced boundary and API for one mode
- ``privilege_chain``: API over nested homothetic attack boxes
- ``cross_layer_study``: operating-point-only vs control-only vs joint privileges
- ``validate_worst_case``: time-domain check of the attacked interconnection
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ibr_ard.ard.api import (
    DEFAULT_GRID_RESOLUTION,
    REACHABLE_INSTABILITY,
    ApiResult,
    compute_api,
)
from ibr_ard.ard.attack_set import FeasibleAttackSet, StealthModel
from ibr_ard.ard.engine import ArdCloud, ArdSample, AscentConfig, sample_ard, trace_boundary
from ibr_ard.identification.modes import (
    MODE_TRACKING_TOL,
    Mode,
    select_critical_modes,
    track_mode,
)
from ibr_ard.models.interconnect import (
    assemble_interconnection,
    dominant_frequency,
    linear_response,
    modal_pole_residue,
)
from ibr_ard.models.types import (
    RHO_COORDINATES,
    X_OP_COORDINATES,
    DqMatrix,
    GridEquivalent,
    ParameterVector,
    StateSpaceModel,
    hz,
)
from ibr_ard.shared.errors import NumericalConditioningError

logger = logging.getLogger(__name__)

ROOT_TOLERANCE = 1e-10
ROOT_MAX_ITER = 60
TRACKING_DRIFT_FRACTION = 0.25

LoopImpedance = Callable[[ParameterVector, complex], DqMatrix]


@dataclass(frozen=True)
class EngineConfig:
    n_samples: int = 2000
    seed: int = 0
    n_directions: int = 32
    ascent: AscentConfig = field(default_factory=AscentConfig)
    grid_resolution: int = DEFAULT_GRID_RESOLUTION
    max_workers: int = 4


def assess_mode(
    omega: FeasibleAttackSet,
    s: StealthModel,
    f,
    mode: Mode,
    cfg: Optional[EngineConfig] = None,
) -> Tuple[ArdCloud, ApiResult]:
    cfg = cfg or EngineConfig()
    cloud = sample_ard(omega, s, f, mode, cfg.n_samples, cfg.seed, cfg.max_workers)
    trace_boundary(
        omega,
        s,
        f,
        mode,
        cfg.n_directions,
        cfg.ascent,
        cloud=cloud,
        max_workers=cfg.max_workers,
    )
    return cloud, compute_api(cloud, cfg.grid_resolution)


def closed_loop_root(
    loop: Callable[[complex], DqMatrix],
    s0: complex,
    tol: float = ROOT_TOLERANCE,
    max_iter: int = ROOT_MAX_ITER,
) -> complex:
    """Root of ``det(loop(s)) = 0`` near ``s0`` by the secant method.

    Raises:
        NumericalConditioningError: No convergence within ``max_iter`` steps.
    """
    scale = max(abs(s0), 1.0)
    s_prev, s_curr = s0, s0 + 1e-6 * scale
    f_prev = np.linalg.det(loop(s_prev))
    f_curr = np.linalg.det(loop(s_curr))
    for _ in range(max_iter):
        denominator = f_curr - f_prev
        if denominator == 0:
            break
        s_next = s_curr - f_curr * (s_curr - s_prev) / denominator
        if abs(s_next - s_curr) <= tol * scale:
            return complex(s_next)
        s_prev, f_prev = s_curr, f_curr
        s_curr, f_curr = s_next, np.linalg.det(loop(s_next))
    if abs(s_curr - s_prev) <= 1e3 * tol * scale:
        return complex(s_curr)
    raise NumericalConditioningError(f"closed-loop root search from {s0:.6g} did not converge")


def oracle_eigenvalue(
    loop_impedance: LoopImpedance, v: ParameterVector, predicted: complex
) -> complex:
    """Exact eigenvalue of the attacked loop tracked from the predicted location."""
    return closed_loop_root(lambda s: loop_impedance(v, s), predicted)


def _chain_step(
    factor: float,
    cloud: ArdCloud,
    result: ApiResult,
    loop_impedance: Optional[LoopImpedance],
) -> Dict[str, Any]:
    step: Dict[str, Any] = {
        "factor": factor,
        "api": result.value,
        "branch": result.branch,
        "max_re_drift": result.max_re_drift,
        "worst_case": result.worst_case.to_dict(),
        "n_points": len(cloud.points()),
    }
    if loop_impedance is not None:
        root = oracle_eigenvalue(loop_impedance, result.worst_case.v_atk, result.worst_case.lam)
        step["oracle_eigenvalue"] = root
        step["oracle_unstable"] = bool(root.real >= 0)
    return step


def privilege_chain(
    omega: FeasibleAttackSet,
    s: StealthModel,
    f,
    mode: Mode,
    factors: Sequence[float],
    cfg: Optional[EngineConfig] = None,
    loop_impedance: Optional[LoopImpedance] = None,
) -> List[Dict[str, Any]]:
    """API over boxes ``omega.scaled(factor)`` for increasing factors.

    With ``loop_impedance`` the attacked loop is re-solved at each worst case
    and the exact eigenvalue is reported next to the engine verdict.
    """
    if list(factors) != sorted(factors):
        raise ValueError("privilege chain factors must be non-decreasing")
    steps = []
    for factor in factors:
        cloud, result = assess_mode(omega.scaled(factor), s, f, mode, cfg)
        steps.append(_chain_step(factor, cloud, result, loop_impedance))
        logger.info(
            "Privilege chain step | factor=%.4g api=%.6g branch=%s",
            factor,
            result.value,
            result.branch,
        )
    return steps


def chain_crossing(steps: Sequence[Dict[str, Any]]) -> Dict[str, Optional[int]]:
    """First chain index where the API reaches 1, the branch flips and the oracle goes unstable."""

    def first(predicate) -> Optional[int]:
        return next((k for k, step in enumerate(steps) if predicate(step)), None)

    return {
        "api_crossing_index": first(lambda step: step["api"] >= 1.0),
        "branch_flip_index": first(lambda step: step["branch"] == REACHABLE_INSTABILITY),
        "oracle_crossing_index": first(lambda step: step.get("oracle_unstable", False)),
    }


def cross_layer_study(
    omega: FeasibleAttackSet,
    s: StealthModel,
    f,
    mode: Mode,
    cfg: Optional[EngineConfig] = None,
) -> Dict[str, ApiResult]:
    """API for operating-point-only, control-only and joint privileges."""
    variants = {
        "x_op_only": omega.restricted(X_OP_COORDINATES),
        "rho_only": omega.restricted(RHO_COORDINATES),
        "joint": omega,
    }
    results = {}
    for name, variant in variants.items():
        _, results[name] = assess_mode(variant, s, f, mode, cfg)
    return results


def validate_worst_case(
    worst: ArdSample,
    inverter_builder: Callable[[ParameterVector], StateSpaceModel],
    grid: GridEquivalent,
    t_end: float = 1.0,
    dt: float = 1e-4,
    tol: Optional[float] = None,
) -> Dict[str, Any]:
    """Free response of the attacked interconnection excited along the tracked mode.

    The attacked mode is tracked among the exact closed-loop modes from the
    predicted eigenvalue ``worst.lam``. The default tolerance widens with the
    predicted drift.

    Returns:
        The tracked eigenvalue, its frequency, the dominant frequency of the
        response, their relative disagreement and the relative error of the
        predicted drift against the exact shift.

    Raises:
        UnknownModeError: No closed-loop mode lies within ``tol`` of the prediction.
    """
    if tol is None:
        tol = max(MODE_TRACKING_TOL, TRACKING_DRIFT_FRACTION * abs(worst.delta_lambda))
    model = assemble_interconnection(inverter_builder(worst.v_atk), grid)
    modal = modal_pole_residue(model)
    modes = select_critical_modes(modal, (0.0, np.inf), top_k=modal.poles.size, residue_floor=0.0)
    tracked = track_mode(modes, worst.lam, tol).lambda0
    index = int(np.argmin(np.abs(modal.poles - tracked)))
    _, vectors = np.linalg.eig(model.A)
    response = linear_response(model, vectors[:, index].real, t_end, dt)
    measured = dominant_frequency(response)
    expected = hz(abs(tracked.imag))
    baseline = worst.lam - worst.delta_lambda
    shift = tracked - baseline
    drift_error = None
    if abs(shift) > 1e-9 * max(abs(baseline), 1.0):
        drift_error = abs(worst.delta_lambda - shift) / abs(shift)
    logger.info(
        "Worst case validated | eigenvalue=%.6g%+.6gj tracked_from=%.6g%+.6gj",
        tracked.real,
        tracked.imag,
        worst.lam.real,
        worst.lam.imag,
    )
    return {
        "eigenvalue": tracked,
        "predicted": worst.lam,
        "eigen_frequency_hz": expected,
        "dominant_frequency_hz": measured,
        "frequency_relative_error": abs(measured - expected) / expected if expected else None,
        "drift_relative_error": drift_error,
        "unstable": bool(tracked.real >= 0),
    }
