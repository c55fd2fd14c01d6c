# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Domain types shared by the dq-frame models.

A ``DqMatrix`` is a plain ``numpy`` array of shape (2, 2) and dtype complex,
indexed ``[m, n]`` with ``m, n`` in (d, q). Spectra store a stack of them with
shape (N, 2, 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ibr_ard.shared.errors import DegenerateModelError

DqMatrix = np.ndarray

X_OP_COORDINATES: Tuple[str, ...] = ("P0", "Q0", "V0")
RHO_COORDINATES: Tuple[str, ...] = ("J", "Dp", "Kq", "tau_q", "Rv", "Lv")
COORDINATES: Tuple[str, ...] = X_OP_COORDINATES + RHO_COORDINATES

# Rotation operator of the synchronous frame: the dq image of multiplication by j.
ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])
IDENTITY = np.eye(2)

DEFAULT_BAND_HZ = (1.0, 200.0)
DEFAULT_GRID_POINTS = 400


def as_dq_matrix(value: Iterable, name: str = "matrix") -> DqMatrix:
    """Coerce ``value`` to a finite 2x2 complex array."""
    matrix = np.asarray(value, dtype=complex)
    if matrix.shape != (2, 2):
        raise ValueError(f"{name} must be 2x2, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{name} has non-finite entries")
    return matrix


def rl_block(resistance: float, inductance: float, omega0: float, s: complex) -> DqMatrix:
    """dq-frame impedance of a series RL element at complex frequency ``s``."""
    return (resistance + s * inductance) * IDENTITY + omega0 * inductance * ROTATION


@dataclass(frozen=True)
class Bases:
    """Per-unit bases. ``v_base`` is the PCC voltage base used for V0."""

    s_base: float
    v_base: float

    def __post_init__(self):
        if self.s_base <= 0 or self.v_base <= 0:
            raise ValueError("s_base and v_base must be positive")

    @property
    def z_base(self) -> float:
        return self.v_base**2 / self.s_base

    @property
    def i_base(self) -> float:
        return self.s_base / self.v_base


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing positive angular frequencies (rad/s)."""

    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 1 or points.size < 8:
            raise ValueError("FrequencyGrid needs at least 8 points")
        if not np.all(np.isfinite(points)) or np.any(points <= 0):
            raise ValueError("FrequencyGrid points must be finite and positive")
        if np.any(np.diff(points) <= 0):
            raise ValueError("FrequencyGrid points must be strictly increasing")
        object.__setattr__(self, "points", points)

    @classmethod
    def log_spaced(
        cls,
        f_low_hz: float = DEFAULT_BAND_HZ[0],
        f_high_hz: float = DEFAULT_BAND_HZ[1],
        n_points: int = DEFAULT_GRID_POINTS,
    ) -> "FrequencyGrid":
        if not 0 < f_low_hz < f_high_hz:
            raise ValueError("frequency band must satisfy 0 < low < high")
        return cls(2 * np.pi * np.logspace(np.log10(f_low_hz), np.log10(f_high_hz), n_points))

    def __len__(self) -> int:
        return int(self.points.size)

    @property
    def s(self) -> np.ndarray:
        return 1j * self.points

    @property
    def band_hz(self) -> Tuple[float, float]:
        return float(self.points[0] / (2 * np.pi)), float(self.points[-1] / (2 * np.pi))

    def subset(self, n_points: int) -> "FrequencyGrid":
        """Log-evenly thinned copy keeping both band edges."""
        if n_points >= len(self):
            return self
        index = np.unique(np.round(np.linspace(0, len(self) - 1, n_points)).astype(int))
        return FrequencyGrid(self.points[index])

    def same_as(self, other: "FrequencyGrid") -> bool:
        return len(self) == len(other) and bool(np.array_equal(self.points, other.points))


@dataclass(frozen=True)
class ImpedanceSpectrum:
    """Stack of dq matrices on a frequency grid (impedance or admittance role)."""

    grid: FrequencyGrid
    values: np.ndarray
    role: str = "impedance"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (len(self.grid), 2, 2):
            raise ValueError(
                f"spectrum values must have shape ({len(self.grid)}, 2, 2), got {values.shape}"
            )
        if self.role not in ("impedance", "admittance"):
            raise ValueError(f"unknown spectrum role {self.role!r}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.grid)

    def __add__(self, other: "ImpedanceSpectrum") -> "ImpedanceSpectrum":
        if not self.grid.same_as(other.grid):
            raise ValueError("spectra are defined on different grids")
        return ImpedanceSpectrum(self.grid, self.values + other.values, self.role)

    def relative_error(self, reference: "ImpedanceSpectrum") -> float:
        """Max over grid points of ||self - reference||_F / ||reference||_F."""
        diff = np.linalg.norm(self.values - reference.values, axis=(1, 2))
        scale = np.linalg.norm(reference.values, axis=(1, 2))
        return float(np.max(diff / np.where(scale > 0, scale, 1.0)))


@dataclass(frozen=True)
class ParameterVector:
    """Operating point ``x_op`` (P0, Q0, V0) and control parameters ``rho``.

    Units are SI: W, var, V, W*s^2/rad, W*s/rad, V/var, s, ohm, H.
    """

    P0: float
    Q0: float
    V0: float
    J: float
    Dp: float
    Kq: float
    tau_q: float
    Rv: float = 0.0
    Lv: float = 0.0

    def validate(self) -> "ParameterVector":
        values = self.to_array()
        if not np.all(np.isfinite(values)):
            raise ValueError("ParameterVector has non-finite entries")
        if self.J <= 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if self.Dp < 0:
            raise ValueError(f"Dp must be non-negative, got {self.Dp}")
        if self.tau_q <= 0:
            raise ValueError(f"tau_q must be positive, got {self.tau_q}")
        if self.Lv < 0 or self.Rv < 0:
            raise ValueError("Rv and Lv must be non-negative")
        if self.V0 <= 0:
            raise ValueError(f"V0 must be positive, got {self.V0}")
        return self

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in COORDINATES], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "ParameterVector":
        if len(values) != len(COORDINATES):
            raise ValueError(f"expected {len(COORDINATES)} coordinates, got {len(values)}")
        return cls(**{name: float(v) for name, v in zip(COORDINATES, values)})

    def to_dict(self) -> Dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    def with_values(self, **changes: float) -> "ParameterVector":
        return replace(self, **changes)

    def x_op_pu(self, bases: Bases) -> np.ndarray:
        return np.array([self.P0 / bases.s_base, self.Q0 / bases.s_base, self.V0 / bases.v_base])


@dataclass(frozen=True)
class FilterParameters:
    Rf: float
    Lf: float

    def __post_init__(self):
        if self.Lf <= 0:
            raise ValueError(f"filter inductance Lf must be positive, got {self.Lf}")
        if self.Rf < 0:
            raise ValueError(f"filter resistance Rf must be non-negative, got {self.Rf}")


@dataclass(frozen=True)
class StateSpaceModel:
    """Linear model ``y = C (sI - A)^-1 B u + D u + s E u``.

    ``E`` is the proportional (series inductance) term; it is zero for proper
    models. All matrices are real.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: Optional[np.ndarray] = None
    state_labels: Tuple[str, ...] = ()
    input_labels: Tuple[str, ...] = ()
    output_labels: Tuple[str, ...] = ()

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float)) if np.size(self.A) else np.zeros((0, 0))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        p, m = D.shape
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, m)
        C = np.asarray(self.C, dtype=float).reshape(p, n)
        E = np.zeros((p, m)) if self.E is None else np.asarray(self.E, dtype=float)
        if A.shape != (n, n) or E.shape != (p, m):
            raise DegenerateModelError(
                f"inconsistent state-space dimensions A{A.shape} B{B.shape} "
                f"C{C.shape} D{D.shape} E{E.shape}"
            )
        for name, matrix in (("A", A), ("B", B), ("C", C), ("D", D), ("E", E)):
            if not np.all(np.isfinite(matrix)):
                raise DegenerateModelError(f"state-space matrix {name} has non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "E", E)
        if not self.state_labels:
            object.__setattr__(self, "state_labels", tuple(f"x{i}" for i in range(n)))
        if not self.input_labels:
            object.__setattr__(self, "input_labels", tuple(f"u{i}" for i in range(m)))
        if not self.output_labels:
            object.__setattr__(self, "output_labels", tuple(f"y{i}" for i in range(p)))

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.D.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.D.shape[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        if self.n_states == 0:
            return np.zeros(0, dtype=complex)
        return np.linalg.eigvals(self.A)

    @property
    def has_proportional_term(self) -> bool:
        return bool(np.any(self.E != 0))


@dataclass(frozen=True)
class GridEquivalent:
    """Series RL grid behind an ideal source in the synchronous frame."""

    Rg: float
    Lg: float
    omega0: float

    def __post_init__(self):
        if self.Rg < 0:
            raise ValueError(f"Rg must be non-negative, got {self.Rg}")
        if self.Lg <= 0:
            raise ValueError(f"Lg must be positive, got {self.Lg}")
        if self.omega0 <= 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")

    def impedance(self, s: complex) -> DqMatrix:
        return rl_block(self.Rg, self.Lg, self.omega0, s)

    def to_state_space(self) -> StateSpaceModel:
        """Static realization ``D + sE`` of the RL branch."""
        return StateSpaceModel(
            A=np.zeros((0, 0)),
            B=np.zeros((0, 2)),
            C=np.zeros((2, 0)),
            D=self.Rg * IDENTITY + self.omega0 * self.Lg * ROTATION,
            E=self.Lg * IDENTITY,
            input_labels=("id", "iq"),
            output_labels=("vd", "vq"),
        )


@dataclass(frozen=True)
class TimeResponse:
    t: np.ndarray
    y: np.ndarray
    output_labels: Tuple[str, ...] = field(default_factory=tuple)

    def envelope(self) -> np.ndarray:
        return np.linalg.norm(self.y, axis=1)


def hz(omega: float) -> float:
    return omega / (2 * math.pi)


@dataclass
class PoleResidueModel:
    """Rational model ``sum_k Res_k / (s - p_k) + feedthrough + s * linear``.

    Complex poles are stored as full conjugate pairs; ``residues`` has shape
    (K, 2, 2) aligned with ``poles``.
    """

    poles: np.ndarray
    residues: np.ndarray
    feedthrough: np.ndarray
    linear: Optional[np.ndarray] = None
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.poles = np.asarray(self.poles, dtype=complex).reshape(-1)
        self.residues = np.asarray(self.residues, dtype=complex).reshape(self.poles.size, 2, 2)
        self.feedthrough = as_dq_matrix(self.feedthrough, "feedthrough")
        self.linear = (
            np.zeros((2, 2), dtype=complex)
            if self.linear is None
            else as_dq_matrix(self.linear, "linear term")
        )

    @property
    def n_poles(self) -> int:
        return int(self.poles.size)

    def evaluate(self, s: complex) -> DqMatrix:
        terms = self.residues / (s - self.poles)[:, None, None]
        return terms.sum(axis=0) + self.feedthrough + s * self.linear

    def spectrum(self, grid: FrequencyGrid, role: str = "admittance") -> ImpedanceSpectrum:
        s = grid.s
        denominators = (s[:, None] - self.poles[None, :])[:, :, None, None]
        values = (self.residues[None] / denominators).sum(axis=1)
        values = values + self.feedthrough[None] + s[:, None, None] * self.linear[None]
        return ImpedanceSpectrum(grid, values, role)

    def pole_index(self, lambda0: complex, rtol: float = 1e-6) -> Optional[int]:
        """Index of the pole matching ``lambda0`` within a relative distance, or None."""
        if self.n_poles == 0:
            return None
        distance = np.abs(self.poles - lambda0)
        best = int(np.argmin(distance))
        scale = max(abs(lambda0), 1.0)
        return best if distance[best] <= rtol * scale else None

    def to_dict(self) -> Dict[str, object]:
        return {
            "poles": [[float(p.real), float(p.imag)] for p in self.poles],
            "residues": [_complex_matrix_to_list(r) for r in self.residues],
            "feedthrough": _complex_matrix_to_list(self.feedthrough),
            "linear": _complex_matrix_to_list(self.linear),
            "metadata": self.metadata,
        }


def _complex_matrix_to_list(matrix: np.ndarray) -> List[List[List[float]]]:
    return [[[float(v.real), float(v.imag)] for v in row] for row in matrix]
