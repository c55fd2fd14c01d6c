# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Feasible attack set, stealth constraints and the projection onto them.

Box limits on the operating point are absolute per-unit values; limits on the
control parameters are multipliers of the nominal value. A control parameter
whose nominal value is zero keeps a collapsed interval.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from ibr_ard.models.types import (
    COORDINATES,
    RHO_COORDINATES,
    X_OP_COORDINATES,
    Bases,
    ParameterVector,
)
from ibr_ard.shared.export import canonical_digest
from ibr_ard.surrogate.sampling import Bounds

SHRINK = 1.0 - 1e-9
MAX_PROJECTION_ROUNDS = 20
PROJECTION_TOLERANCE = 1e-12

X_OP_ATTRIBUTES = {"P0": "s_base", "Q0": "s_base", "V0": "v_base"}


def _scale_of(name: str, bases: Bases) -> float:
    return getattr(bases, X_OP_ATTRIBUTES[name])


def _box_center(name: str, nominal: ParameterVector, bases: Bases) -> float:
    """Nominal value in box units (pu or multiplier)."""
    if name in X_OP_ATTRIBUTES:
        return getattr(nominal, name) / _scale_of(name, bases)
    return 1.0


@dataclass(frozen=True)
class FeasibleAttackSet:
    """Attack box around ``nominal`` plus the privilege mask.

    Attributes:
        nominal: Parameter vector the attacker starts from.
        box: ``x_op`` limits in pu, ``rho`` limits as multipliers of nominal.
        attackable: Per-coordinate privilege flag.
        bases: Per-unit bases of the ``x_op`` limits.
    """

    nominal: ParameterVector
    box: Mapping[str, Tuple[float, float]]
    attackable: Mapping[str, bool]
    bases: Bases

    def __post_init__(self):
        box = {}
        for name in COORDINATES:
            if name not in self.box:
                raise ValueError(f"attack box missing coordinate {name}")
            lo, hi = (float(v) for v in self.box[name])
            if hi < lo:
                raise ValueError(f"invalid attack interval for {name}: [{lo}, {hi}]")
            box[name] = (lo, hi)
        attackable = {name: bool(self.attackable.get(name, False)) for name in COORDINATES}
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "attackable", attackable)

        for name, (lo, hi) in self.si_bounds().items():
            value = getattr(self.nominal, name)
            tolerance = 1e-12 * max(abs(value), 1.0)
            if not lo - tolerance <= value <= hi + tolerance:
                raise ValueError(f"nominal {name}={value} outside attack box [{lo}, {hi}]")
            if not attackable[name] and hi - lo > tolerance:
                raise ValueError(f"non-attackable coordinate {name} must have a collapsed box")
        for name in ("J", "tau_q"):
            if self.si_bounds()[name][0] <= 0:
                raise ValueError(f"attack box allows non-positive {name}")
        for name in ("Dp", "Rv", "Lv"):
            if self.si_bounds()[name][0] < 0:
                raise ValueError(f"attack box allows negative {name}")

    @classmethod
    def from_privileges(
        cls,
        nominal: ParameterVector,
        bases: Bases,
        privileges: Mapping[str, float],
    ) -> "FeasibleAttackSet":
        """Symmetric box from per-coordinate half widths.

        Args:
            nominal: Nominal parameter vector.
            bases: Per-unit bases.
            privileges: Half width per attackable coordinate; pu for ``x_op``,
                relative for ``rho``. Missing coordinates are not attackable.
        """
        unknown = set(privileges) - set(COORDINATES)
        if unknown:
            raise ValueError(f"unknown coordinates in privileges: {sorted(unknown)}")
        box = {}
        for name in COORDINATES:
            width = float(privileges.get(name, 0.0))
            if width < 0:
                raise ValueError(f"privilege width for {name} must be non-negative")
            center = _box_center(name, nominal, bases)
            box[name] = (center - width, center + width)
        return cls(
            nominal=nominal,
            box=box,
            attackable={name: privileges.get(name, 0.0) > 0 for name in COORDINATES},
            bases=bases,
        )

    def si_bounds(self) -> Bounds:
        bounds = {}
        for name in COORDINATES:
            lo, hi = self.box[name]
            if name in X_OP_ATTRIBUTES:
                scale = _scale_of(name, self.bases)
                bounds[name] = (lo * scale, hi * scale)
            else:
                value = getattr(self.nominal, name)
                bounds[name] = tuple(sorted((lo * value, hi * value)))
        return bounds

    @property
    def attack_coordinates(self) -> List[str]:
        """Attackable coordinates with a non-degenerate SI interval."""
        bounds = self.si_bounds()
        return [
            name
            for name in COORDINATES
            if self.attackable[name] and bounds[name][1] > bounds[name][0]
        ]

    @property
    def is_singleton(self) -> bool:
        return not self.attack_coordinates

    def scaled(self, factor: float) -> "FeasibleAttackSet":
        """Homothetic box about the nominal point."""
        if factor < 0:
            raise ValueError(f"scale factor must be non-negative, got {factor}")
        box = {}
        for name in COORDINATES:
            lo, hi = self.box[name]
            center = _box_center(name, self.nominal, self.bases)
            box[name] = (center - factor * (center - lo), center + factor * (hi - center))
        return FeasibleAttackSet(self.nominal, box, self.attackable, self.bases)

    def restricted(self, names: Iterable[str]) -> "FeasibleAttackSet":
        """Same box with privileges limited to ``names``; other coordinates collapse."""
        keep = set(names)
        box = {}
        for name in COORDINATES:
            if name in keep:
                box[name] = self.box[name]
            else:
                center = _box_center(name, self.nominal, self.bases)
                box[name] = (center, center)
        attackable = {name: self.attackable[name] and name in keep for name in COORDINATES}
        return FeasibleAttackSet(self.nominal, box, attackable, self.bases)

    def to_unit(self, v: ParameterVector) -> np.ndarray:
        bounds = self.si_bounds()
        return np.array(
            [
                (getattr(v, name) - bounds[name][0]) / (bounds[name][1] - bounds[name][0])
                for name in self.attack_coordinates
            ]
        )

    def from_unit(self, u: np.ndarray) -> ParameterVector:
        bounds = self.si_bounds()
        changes = {
            name: bounds[name][0] + (bounds[name][1] - bounds[name][0]) * float(value)
            for name, value in zip(self.attack_coordinates, u)
        }
        return self.nominal.with_values(**changes)

    def widths(self) -> np.ndarray:
        bounds = self.si_bounds()
        return np.array([bounds[name][1] - bounds[name][0] for name in self.attack_coordinates])

    def to_dict(self) -> Dict[str, object]:
        return {
            "nominal": self.nominal.to_dict(),
            "box": {name: list(self.box[name]) for name in COORDINATES},
            "attackable": dict(self.attackable),
            "bases": {"s_base": self.bases.s_base, "v_base": self.bases.v_base},
        }

    def digest(self) -> str:
        return canonical_digest(self.to_dict())


@dataclass(frozen=True)
class StealthModel:
    """Detector thresholds on the attacked point.

    ``d_bdd`` is a weighted Euclidean norm of the pu operating-point
    deviation; ``d_ids`` is a weighted max-norm of the relative control
    parameter change. Missing weights default to 1.
    """

    eps1: float
    eps2: float
    bases: Bases
    bdd_weights: Mapping[str, float] = field(default_factory=dict)
    ids_weights: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.eps1 > 0 or not self.eps2 > 0:
            raise ValueError("stealth thresholds eps1 and eps2 must be positive")
        bdd = {name: float(self.bdd_weights.get(name, 1.0)) for name in X_OP_COORDINATES}
        ids = {name: float(self.ids_weights.get(name, 1.0)) for name in RHO_COORDINATES}
        if any(w < 0 for w in list(bdd.values()) + list(ids.values())):
            raise ValueError("stealth weights must be non-negative")
        object.__setattr__(self, "bdd_weights", bdd)
        object.__setattr__(self, "ids_weights", ids)

    @classmethod
    def unconstrained(cls, bases: Bases) -> "StealthModel":
        return cls(eps1=float("inf"), eps2=float("inf"), bases=bases)

    def _bdd_terms(self, v: ParameterVector, nominal: ParameterVector) -> Dict[str, float]:
        return {
            name: (getattr(v, name) - getattr(nominal, name)) / _scale_of(name, self.bases)
            for name in X_OP_COORDINATES
        }

    def _ids_terms(self, v: ParameterVector, nominal: ParameterVector) -> Dict[str, float]:
        terms = {}
        for name in RHO_COORDINATES:
            reference = abs(getattr(nominal, name))
            terms[name] = (getattr(v, name) - getattr(nominal, name)) / (
                reference if reference > 0 else 1.0
            )
        return terms

    def to_dict(self) -> Dict[str, object]:
        return {
            "eps1": self.eps1,
            "eps2": self.eps2,
            "bdd_weights": dict(self.bdd_weights),
            "ids_weights": dict(self.ids_weights),
        }


def stealth_distances(
    v: ParameterVector, nominal: ParameterVector, s: StealthModel
) -> Tuple[float, float]:
    """Return ``(d_bdd, d_ids)`` for the attacked point ``v``."""
    bdd = s._bdd_terms(v, nominal)
    ids = s._ids_terms(v, nominal)
    d_bdd = float(np.sqrt(sum((s.bdd_weights[k] * bdd[k]) ** 2 for k in bdd)))
    d_ids = float(max(s.ids_weights[k] * abs(ids[k]) for k in ids))
    return d_bdd, d_ids


def is_stealthy(v: ParameterVector, nominal: ParameterVector, s: StealthModel) -> bool:
    d_bdd, d_ids = stealth_distances(v, nominal, s)
    return d_bdd < s.eps1 and d_ids < s.eps2


def project(
    v: ParameterVector, omega: FeasibleAttackSet, s: StealthModel
) -> ParameterVector:
    """Alternating projection onto box, BDD ball and IDS ball.

    Each round clamps to the box, scales the operating-point deviation
    radially onto the BDD ball and clamps every control-parameter change
    onto the IDS ball, each by a factor ``1 - 1e-9`` inside the threshold.
    Feasible points are returned unchanged.
    """
    nominal = omega.nominal
    bounds = omega.si_bounds()
    current = v
    for _ in range(MAX_PROJECTION_ROUNDS):
        values = {
            name: float(np.clip(getattr(current, name), *bounds[name])) for name in COORDINATES
        }
        candidate = nominal.with_values(**values)

        d_bdd, _ = stealth_distances(candidate, nominal, s)
        if d_bdd >= s.eps1:
            ratio = SHRINK * s.eps1 / d_bdd
            for name in X_OP_COORDINATES:
                base = getattr(nominal, name)
                values[name] = base + ratio * (values[name] - base)

        ids = s._ids_terms(candidate, nominal)
        for name in RHO_COORDINATES:
            weight = s.ids_weights[name]
            if weight > 0 and weight * abs(ids[name]) >= s.eps2:
                reference = abs(getattr(nominal, name)) or 1.0
                limit = SHRINK * s.eps2 / weight * reference
                base = getattr(nominal, name)
                values[name] = base + float(np.clip(values[name] - base, -limit, limit))

        projected = nominal.with_values(**values)
        change = np.max(np.abs(projected.to_array() - current.to_array()))
        current = projected
        if change <= PROJECTION_TOLERANCE * max(1.0, float(np.max(np.abs(current.to_array())))):
            break
    return current


def omega_digest(omega: FeasibleAttackSet, s: Optional[StealthModel] = None) -> str:
    payload: Dict[str, object] = {"omega": omega.to_dict()}
    if s is not None:
        payload["stealth"] = s.to_dict()
    return canonical_digest(payload)
