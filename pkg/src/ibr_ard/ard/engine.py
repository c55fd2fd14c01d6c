# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Attack Reachable Domain: drift cloud, worst-case ascent and boundary tracing."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from ibr_ard.ard.attack_set import (
    FeasibleAttackSet,
    StealthModel,
    is_stealthy,
    omega_digest,
    project,
)
from ibr_ard.identification.modes import Mode, ParticipationFactor
from ibr_ard.models.types import ParameterVector
from ibr_ard.shared.errors import (
    ArdError,
    InfeasibleStartError,
    OverConstrainedError,
    SurrogateDomainError,
)
from ibr_ard.shared.export import CLOUD_HEADER, export_rows_as_csv
from ibr_ard.surrogate.base import Surrogate
from ibr_ard.surrogate.sampling import lhs_sample, uniform_sample

logger = logging.getLogger(__name__)

MIN_CLOUD_SAMPLES = 100
MIN_FEASIBLE_FRACTION = 0.5
MIN_DIRECTIONS = 8
MAX_HALVINGS = 20


@dataclass(frozen=True, eq=False)
class ArdSample:
    """Attacked point with its eigenvalue drift.

    ``lam`` is ``lambda0 + delta_lambda``.
    """

    v_atk: ParameterVector
    delta_lambda: complex
    lam: complex
    stealth_ok: bool
    source: str = "sample"
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "v_atk": self.v_atk.to_dict(),
            "delta_lambda": self.delta_lambda,
            "lambda": self.lam,
            "stealth_ok": self.stealth_ok,
            "source": self.source,
            "metadata": self.metadata,
        }


@dataclass(eq=False)
class ArdCloud:
    mode: Mode
    samples: List[ArdSample]
    boundary: List[ArdSample] = field(default_factory=list)
    seed: int = 0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def points(self) -> List[ArdSample]:
        return self.samples + self.boundary

    def eigenvalues(self) -> np.ndarray:
        return np.array([p.lam for p in self.points()], dtype=complex)

    def to_csv(self, worst_case: Optional[ArdSample] = None) -> str:
        """CSV rows ``re_lambda,im_lambda,stealth_ok,source``."""
        rows = [[p.lam.real, p.lam.imag, p.stealth_ok, p.source] for p in self.points()]
        if worst_case is not None:
            lam = worst_case.lam
            rows.append([lam.real, lam.imag, worst_case.stealth_ok, "worst_case"])
        return export_rows_as_csv(CLOUD_HEADER, rows)

    def metadata_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode.to_dict(),
            "seed": self.seed,
            "n_samples": len(self.samples),
            "n_boundary": len(self.boundary),
            **self.metadata,
        }


@dataclass(frozen=True)
class AscentConfig:
    """Projected gradient ascent settings; ``alpha`` is in normalized box units."""

    alpha: float = 0.05
    max_iter: int = 200
    restarts: int = 8
    tol: float = 1e-9
    seed: int = 0
    record_trace: bool = False

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.restarts < 1 or self.max_iter < 1:
            raise ValueError("restarts and max_iter must be at least 1")


def _make_sample(
    v: ParameterVector,
    delta_lambda: complex,
    mode: Mode,
    source: str = "sample",
    metadata: Optional[Dict[str, Any]] = None,
) -> ArdSample:
    return ArdSample(
        v_atk=v,
        delta_lambda=delta_lambda,
        lam=mode.lambda0 + delta_lambda,
        stealth_ok=True,
        source=source,
        metadata=metadata or {},
    )


def drift(
    v_atk: ParameterVector,
    f: Surrogate,
    p: ParticipationFactor,
    mode: Mode,
    nominal: ParameterVector,
) -> complex:
    """First-order eigenvalue drift ``<P, Z(v_atk)(lambda0) - Z(nominal)(lambda0)>``."""
    return p.pair(f.delta(v_atk, nominal, mode.lambda0))


def drift_gradient(
    v_atk: ParameterVector,
    f: Surrogate,
    p: ParticipationFactor,
    mode: Mode,
    coordinates: Sequence[str],
) -> np.ndarray:
    """Complex derivative of the drift with respect to each SI coordinate."""
    jacobian = f.gradient(v_atk, mode.lambda0, coordinates)
    return np.array([p.pair(block) for block in jacobian], dtype=complex)


def sample_ard(
    omega: FeasibleAttackSet,
    s: StealthModel,
    f: Surrogate,
    mode: Mode,
    n: int,
    seed: int,
    max_workers: int = 1,
) -> ArdCloud:
    """Sample the attack box and map stealthy draws to eigenvalue locations.

    Half of the draws come from a Latin hypercube and half from a uniform
    distribution over the attackable coordinates; the nominal point is
    always included.

    Raises:
        OverConstrainedError: Fewer than half of the draws are stealthy.
    """
    if n < MIN_CLOUD_SAMPLES:
        raise ValueError(f"sample_ard needs n >= {MIN_CLOUD_SAMPLES}, got {n}")
    nominal = omega.nominal
    p = mode.participation
    digest = omega_digest(omega, s)
    if omega.is_singleton:
        logger.info("Attack set is a single point | mode=%s", mode.mode_id)
        return ArdCloud(
            mode=mode,
            samples=[_make_sample(nominal, 0j, mode, "sample")],
            seed=seed,
            metadata={"omega_digest": digest, "n_draws": 0, "rejected_fraction": 0.0},
        )

    bounds = omega.si_bounds()
    n_lhs = n // 2
    draws = lhs_sample(bounds, n_lhs, seed) + uniform_sample(bounds, n - n_lhs, seed + 1)
    feasible = [v for v in draws if is_stealthy(v, nominal, s)]
    fraction = len(feasible) / len(draws)
    if fraction < MIN_FEASIBLE_FRACTION:
        raise OverConstrainedError(
            f"only {fraction:.1%} of {len(draws)} draws satisfy the stealth thresholds; "
            "review eps1/eps2 or the attack box"
        )

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        drifts = list(executor.map(lambda v: drift(v, f, p, mode, nominal), feasible))

    samples = [_make_sample(nominal, 0j, mode)]
    samples.extend(_make_sample(v, d, mode) for v, d in zip(feasible, drifts))
    logger.info(
        "ARD cloud sampled | mode=%s draws=%d feasible=%d seed=%d",
        mode.mode_id,
        len(draws),
        len(feasible),
        seed,
    )
    return ArdCloud(
        mode=mode,
        samples=samples,
        seed=seed,
        metadata={
            "omega_digest": digest,
            "n_draws": len(draws),
            "rejected_fraction": 1.0 - fraction,
        },
    )


def _start_points(
    omega: FeasibleAttackSet,
    s: StealthModel,
    cfg: AscentConfig,
    warm_starts: Sequence[ParameterVector],
) -> List[ParameterVector]:
    starts = [omega.nominal]
    if cfg.restarts > 1:
        dims = len(omega.attack_coordinates)
        unit = qmc.LatinHypercube(d=dims, seed=cfg.seed).random(cfg.restarts - 1)
        starts.extend(omega.from_unit(row) for row in unit)
    starts.extend(warm_starts)
    return [project(v, omega, s) for v in starts]


def boundary_ascent(
    omega: FeasibleAttackSet,
    s: StealthModel,
    f: Surrogate,
    mode: Mode,
    direction_phi: float = 0.0,
    cfg: Optional[AscentConfig] = None,
    warm_starts: Sequence[ParameterVector] = (),
) -> ArdSample:
    """Maximize ``Re(exp(-j*phi) * delta_lambda)`` over the stealthy attack set.

    Steps follow the normalized gradient in unit-box coordinates and are
    halved (at most 20 times per iteration) until the objective increases.
    Every iterate is projected onto the feasible set.

    Args:
        omega: Attack set.
        s: Stealth thresholds.
        f: Surrogate.
        mode: Mode whose drift is maximized.
        direction_phi: Direction in the complex plane; 0 maximizes Re(drift).
        cfg: Ascent settings.
        warm_starts: Extra start points (e.g. the best cloud sample).

    Returns:
        Best feasible iterate over all starts, ``source="boundary"``.

    Raises:
        InfeasibleStartError: No start could be evaluated or made feasible.
        SurrogateDomainError: Non-finite gradient.
    """
    cfg = cfg or AscentConfig()
    nominal = omega.nominal
    p = mode.participation
    rotation = np.exp(-1j * direction_phi)
    names = omega.attack_coordinates
    if not names:
        return _make_sample(
            nominal, 0j, mode, "boundary", {"phi": direction_phi, "iterations": 0}
        )
    widths = omega.widths()

    def objective(v: ParameterVector) -> float:
        return float((rotation * drift(v, f, p, mode, nominal)).real)

    def unit_gradient(v: ParameterVector) -> np.ndarray:
        grad = (rotation * drift_gradient(v, f, p, mode, names)).real * widths
        if not np.all(np.isfinite(grad)):
            raise SurrogateDomainError(f"non-finite drift gradient at {v.to_dict()}")
        return grad

    best: Optional[ParameterVector] = None
    best_value = -np.inf
    total_iterations = 0
    trace: List[ParameterVector] = []
    failures = 0
    for start in _start_points(omega, s, cfg, warm_starts):
        if not is_stealthy(start, nominal, s):
            failures += 1
            continue
        try:
            v = start
            value = objective(v)
            alpha = cfg.alpha
            for _ in range(cfg.max_iter):
                total_iterations += 1
                if cfg.record_trace:
                    trace.append(v)
                grad = unit_gradient(v)
                norm = float(np.linalg.norm(grad))
                if norm <= cfg.tol:
                    break
                u = omega.to_unit(v)
                improved = False
                for _ in range(MAX_HALVINGS + 1):
                    candidate = project(omega.from_unit(u + alpha * grad / norm), omega, s)
                    candidate_value = objective(candidate)
                    if candidate_value > value:
                        improved = True
                        break
                    alpha /= 2
                if not improved:
                    break
                step = float(np.linalg.norm(omega.to_unit(candidate) - u))
                v, value = candidate, candidate_value
                if step <= cfg.tol:
                    break
        except SurrogateDomainError:
            raise
        except ArdError as exc:
            failures += 1
            logger.warning(
                "Ascent start failed | mode=%s phi=%.4f category=%s message=%s",
                mode.mode_id,
                direction_phi,
                exc.category,
                exc,
            )
            continue
        if value > best_value:
            best, best_value = v, value

    if best is None:
        raise InfeasibleStartError(
            f"all {failures} ascent starts failed for {mode.mode_id} at phi={direction_phi:.4f}"
        )
    delta = drift(best, f, p, mode, nominal)
    metadata: Dict[str, Any] = {
        "phi": direction_phi,
        "objective": best_value,
        "iterations": total_iterations,
        "failed_starts": failures,
        "gradient_norm": float(np.linalg.norm(unit_gradient(best))),
    }
    if cfg.record_trace:
        metadata["trace"] = trace
    return _make_sample(best, delta, mode, "boundary", metadata)


def _best_in_direction(cloud: Optional[ArdCloud], phi: float) -> List[ParameterVector]:
    if cloud is None or not cloud.samples:
        return []
    rotation = np.exp(-1j * phi)
    best = max(cloud.samples, key=lambda p: (rotation * p.delta_lambda).real)
    return [best.v_atk]


def trace_boundary(
    omega: FeasibleAttackSet,
    s: StealthModel,
    f: Surrogate,
    mode: Mode,
    n_directions: int = 32,
    cfg: Optional[AscentConfig] = None,
    cloud: Optional[ArdCloud] = None,
    max_workers: int = 1,
) -> List[ArdSample]:
    """Sweep ``boundary_ascent`` over ``phi_k = 2*pi*k/n_directions``.

    When ``cloud`` is given, its best sample in each direction seeds an
    extra start and the traced points are appended to ``cloud.boundary``.
    """
    if n_directions < MIN_DIRECTIONS:
        raise ValueError(f"trace_boundary needs n_directions >= {MIN_DIRECTIONS}")
    phis = [2 * np.pi * k / n_directions for k in range(n_directions)]

    def run(phi: float) -> ArdSample:
        return boundary_ascent(omega, s, f, mode, phi, cfg, _best_in_direction(cloud, phi))

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        points = list(executor.map(run, phis))
    if cloud is not None:
        cloud.boundary.extend(points)
    logger.info("Boundary traced | mode=%s directions=%d", mode.mode_id, n_directions)
    return points
