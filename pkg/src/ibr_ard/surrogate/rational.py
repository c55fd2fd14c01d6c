# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Physics-prior rational surrogate ``Z_mn = x^T A_mn x / x^T A_0 x``.

``x`` holds the monomials of degree <= ``basis_degree`` over the normalized
frequency ``s / omega_scale`` and the normalized operating-point coordinates.
Every entry of the A matrices is a polynomial of degree <= ``rho_degree`` in
the normalized control parameters. The quadratic forms are fitted in the
equivalent product-monomial space; the symmetric A matrices are rebuilt from
it on demand.

Coordinates with degenerate bounds are left out of the normalized basis.
"""

import itertools
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import solve_triangular

from ibr_ard.models.types import (
    COORDINATES,
    RHO_COORDINATES,
    X_OP_COORDINATES,
    DqMatrix,
    FrequencyGrid,
    ImpedanceSpectrum,
    ParameterVector,
)
from ibr_ard.shared.errors import (
    EvaluationSingularityError,
    InsufficientDataError,
    InvalidSurrogateError,
)
from ibr_ard.shared.export import export_as_json, write_artifact
from ibr_ard.surrogate.base import Surrogate
from ibr_ard.surrogate.dataset import TrainingDataset
from ibr_ard.surrogate.sampling import Bounds, active_coordinates, check_bounds

logger = logging.getLogger(__name__)

SURROGATE_VERSION = 1
ENTRIES = ("dd", "dq", "qd", "qq")
VALIDATION_FRACTION = 0.2
SK_ITERATIONS = 5
DEFAULT_FIT_POINTS = 24
DENOMINATOR_FLOOR = 1e-9
LATTICE_MARGIN = 1e-6
EXTRAPOLATION_MARGIN = 0.1
MAX_FULL_LATTICE = 729


def monomial_exponents(n_vars: int, max_degree: int) -> np.ndarray:
    """Exponent rows of total degree <= max_degree, graded, constant first."""
    rows = [
        e for e in itertools.product(range(max_degree + 1), repeat=n_vars) if sum(e) <= max_degree
    ]
    rows.sort(key=lambda e: (sum(e), tuple(-x for x in e)))
    return np.array(rows, dtype=int).reshape(len(rows), n_vars)


def _powers(variables: np.ndarray, max_exponent: int) -> np.ndarray:
    """``powers[r, t, k] = variables[r, t] ** k``."""
    n_rows, n_vars = variables.shape
    table = np.ones((n_rows, n_vars, max_exponent + 1), dtype=complex)
    for k in range(1, max_exponent + 1):
        table[:, :, k] = table[:, :, k - 1] * variables
    return table


class RationalSurrogate(Surrogate):
    kind = "rational_fit"

    def __init__(
        self,
        bounds: Bounds,
        omega_scale: float,
        basis_degree: int,
        rho_degree: int,
        numerator: np.ndarray,
        denominator: np.ndarray,
        fit_report: Optional[Dict[str, Any]] = None,
    ):
        self.bounds = check_bounds(bounds)
        self.omega_scale = float(omega_scale)
        self.basis_degree = int(basis_degree)
        self.rho_degree = int(rho_degree)
        active = active_coordinates(self.bounds)
        self.x_coordinates = [name for name in X_OP_COORDINATES if name in active]
        self.rho_coordinates = [name for name in RHO_COORDINATES if name in active]
        self.variables = ["s"] + self.x_coordinates + self.rho_coordinates
        self.basis = monomial_exponents(1 + len(self.x_coordinates), self.basis_degree)
        self.product_exponents = monomial_exponents(
            1 + len(self.x_coordinates), 2 * self.basis_degree
        )
        self.rho_exponents = monomial_exponents(len(self.rho_coordinates), self.rho_degree)
        self.exponents = np.array(
            [np.concatenate([a, b]) for a in self.product_exponents for b in self.rho_exponents],
            dtype=int,
        ).reshape(-1, len(self.variables))
        n_features = self.exponents.shape[0]
        self.numerator = np.asarray(numerator, dtype=float).reshape(4, n_features)
        self.denominator = np.asarray(denominator, dtype=float).reshape(n_features)
        if self.denominator[0] != 1.0:
            raise InvalidSurrogateError("denominator constant coefficient must be 1")
        self.fit_report = fit_report or {}
        self.metadata: Dict[str, Any] = {"warnings": []}

    @property
    def n_features(self) -> int:
        return self.exponents.shape[0]

    @property
    def coordinates(self) -> List[str]:
        return self.x_coordinates + self.rho_coordinates

    # ------------------------------------------------------------------ #
    # Normalization
    # ------------------------------------------------------------------ #
    def _normalize(self, v: ParameterVector) -> np.ndarray:
        values = []
        for name in self.coordinates:
            lo, hi = self.bounds[name]
            values.append(2 * (getattr(v, name) - lo) / (hi - lo) - 1)
        return np.array(values, dtype=float)

    def _check_domain(self, v: ParameterVector) -> None:
        for name in COORDINATES:
            lo, hi = self.bounds[name]
            value = getattr(v, name)
            if hi > lo:
                margin = EXTRAPOLATION_MARGIN * (hi - lo)
                outside = value < lo - margin or value > hi + margin
            else:
                outside = abs(value - lo) > 1e-12 * max(abs(lo), 1.0)
            if outside:
                message = f"extrapolation: {name}={value} outside training range [{lo}, {hi}]"
                if message not in self.metadata["warnings"]:
                    self.metadata["warnings"].append(message)
                    logger.warning("Surrogate %s", message)

    def variables_for(self, v: ParameterVector, s: np.ndarray) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        normalized = self._normalize(v)
        rows = np.empty((s.size, len(self.variables)), dtype=complex)
        rows[:, 0] = s / self.omega_scale
        rows[:, 1:] = normalized[None, :]
        return rows

    # ------------------------------------------------------------------ #
    # Evaluation
    # ------------------------------------------------------------------ #
    def features(self, variables: np.ndarray) -> np.ndarray:
        table = _powers(variables, int(self.exponents.max(initial=0)))
        result = np.ones((variables.shape[0], self.n_features), dtype=complex)
        for t in range(variables.shape[1]):
            result *= table[:, t, self.exponents[:, t]]
        return result

    def feature_derivatives(self, variables: np.ndarray, t: int) -> np.ndarray:
        table = _powers(variables, int(self.exponents.max(initial=0)))
        exponent = self.exponents[:, t]
        result = exponent * table[:, t, np.maximum(exponent - 1, 0)]
        for u in range(variables.shape[1]):
            if u != t:
                result = result * table[:, u, self.exponents[:, u]]
        return result

    def _ratio(self, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        numerator = features @ self.numerator.T
        denominator = features @ self.denominator
        small = np.abs(denominator) < DENOMINATOR_FLOOR
        if np.any(small):
            raise EvaluationSingularityError(
                f"surrogate denominator {np.min(np.abs(denominator)):.3e} below {DENOMINATOR_FLOOR}"
            )
        return numerator, denominator

    def evaluate(self, v: ParameterVector, s: complex) -> DqMatrix:
        self._check_domain(v)
        numerator, denominator = self._ratio(self.features(self.variables_for(v, s)))
        return (numerator[0] / denominator[0]).reshape(2, 2)

    def predict_spectrum(self, v: ParameterVector, grid: FrequencyGrid) -> ImpedanceSpectrum:
        self._check_domain(v)
        numerator, denominator = self._ratio(self.features(self.variables_for(v, grid.s)))
        return ImpedanceSpectrum(grid, (numerator / denominator[:, None]).reshape(-1, 2, 2))

    def gradient(
        self, v: ParameterVector, s: complex, coordinates: Optional[Sequence[str]] = None
    ) -> np.ndarray:
        """Quotient-rule derivative of every requested SI coordinate."""
        names = list(COORDINATES if coordinates is None else coordinates)
        self._check_domain(v)
        variables = self.variables_for(v, s)
        numerator, denominator = self._ratio(self.features(variables))
        n, d = numerator[0], denominator[0]
        result = np.zeros((len(names), 2, 2), dtype=complex)
        for row, name in enumerate(names):
            if name not in self.coordinates:
                continue
            t = 1 + self.coordinates.index(name)
            d_features = self.feature_derivatives(variables, t)[0]
            dn = self.numerator @ d_features
            dd = self.denominator @ d_features
            lo, hi = self.bounds[name]
            result[row] = ((dn * d - n * dd) / d**2).reshape(2, 2) * (2 / (hi - lo))
        return result

    # ------------------------------------------------------------------ #
    # Quadratic-form view
    # ------------------------------------------------------------------ #
    def quadratic_forms(self) -> Dict[str, np.ndarray]:
        """Symmetric A matrices, shape (basis_dim, basis_dim, n_rho_monomials).

        Keys are the entry names and ``"0"`` for the denominator.
        """
        splits = {}
        basis_index = {tuple(row): i for i, row in enumerate(self.basis)}
        for a, exponent in enumerate(self.product_exponents):
            splits[a] = _split_product(exponent, self.basis_degree, basis_index)
        n_rho = self.rho_exponents.shape[0]
        forms = {}
        for key, coefficients in list(zip(ENTRIES, self.numerator)) + [("0", self.denominator)]:
            matrix = np.zeros((len(self.basis), len(self.basis), n_rho))
            grid = coefficients.reshape(len(self.product_exponents), n_rho)
            for a, (i, j) in splits.items():
                if i == j:
                    matrix[i, i] += grid[a]
                else:
                    matrix[i, j] += grid[a] / 2
                    matrix[j, i] += grid[a] / 2
            forms[key] = matrix
        return forms

    # ------------------------------------------------------------------ #
    # Serialization
    # ------------------------------------------------------------------ #
    def to_dict(self) -> Dict[str, Any]:
        forms = self.quadratic_forms()
        return {
            "version": SURROGATE_VERSION,
            "kind": self.kind,
            "basis_degree": self.basis_degree,
            "rho_degree": self.rho_degree,
            "omega_scale": self.omega_scale,
            "normalization": {
                name: {"lo": lo, "hi": hi} for name, (lo, hi) in self.bounds.items()
            },
            "variables": self.variables,
            "basis_spec": self.basis.tolist(),
            "rho_monomials": self.rho_exponents.tolist(),
            "feature_exponents": self.exponents.tolist(),
            "numerator": {entry: self.numerator[k].tolist() for k, entry in enumerate(ENTRIES)},
            "denominator": self.denominator.tolist(),
            "A": {key: value.tolist() for key, value in forms.items()},
            "fit_report": self.fit_report,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RationalSurrogate":
        if data.get("version") != SURROGATE_VERSION:
            raise InvalidSurrogateError(f"unsupported surrogate version {data.get('version')}")
        bounds = {
            name: (limits["lo"], limits["hi"])
            for name, limits in data["normalization"].items()
        }
        return cls(
            bounds=bounds,
            omega_scale=data["omega_scale"],
            basis_degree=data["basis_degree"],
            rho_degree=data["rho_degree"],
            numerator=np.array([data["numerator"][entry] for entry in ENTRIES]),
            denominator=np.array(data["denominator"]),
            fit_report=data.get("fit_report", {}),
        )

    def save(self, path: Union[str, Path]) -> Path:
        return write_artifact(path, export_as_json(self.to_dict()))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RationalSurrogate":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Surrogate file not found: {path}")
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))


def _split_product(
    exponent: np.ndarray, basis_degree: int, basis_index: Dict[Tuple[int, ...], int]
) -> Tuple[int, int]:
    """Split a product monomial into two basis monomials (greedy, deterministic)."""
    first = np.zeros_like(exponent)
    remaining = basis_degree
    for t, power in enumerate(exponent):
        take = min(power, remaining)
        first[t] = take
        remaining -= take
    second = exponent - first
    return basis_index[tuple(first)], basis_index[tuple(second)]


def surrogate_eval(f: Surrogate, v: ParameterVector, s: complex) -> DqMatrix:
    return f.evaluate(v, s)


def surrogate_grad(f: Surrogate, v: ParameterVector, s: complex) -> Dict[str, DqMatrix]:
    """Per-coordinate derivative matrices keyed by coordinate name."""
    return dict(zip(COORDINATES, f.gradient(v, s, COORDINATES)))


def _solve_linearized(
    features: np.ndarray,
    targets: np.ndarray,
    weights: np.ndarray,
    ridge: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """One Sanathanan-Koerner step: ``w (N_e - Z_e D') = w Z_e`` for all entries.

    The numerator blocks are eliminated entry by entry with a QR factorization
    so only the shared denominator unknowns enter the combined solve.
    """
    n_rows, n_features = features.shape
    n_den = n_features - 1
    ridge_scale = np.sqrt(ridge * n_rows) if ridge > 0 else 0.0
    weighted = features * weights[:, None]
    reduced_rows = []
    reduced_rhs = []
    upper_blocks = []
    for e in range(4):
        z = targets[:, e] * weights
        block = np.empty((n_rows, n_features + n_den + 1), dtype=complex)
        block[:, :n_features] = weighted
        block[:, n_features:-1] = -z[:, None] * features[:, 1:]
        block[:, -1] = z
        stacked = np.vstack((block.real, block.imag))
        if ridge_scale:
            penalty = np.zeros((n_features, stacked.shape[1]))
            penalty[:, :n_features] = ridge_scale * np.eye(n_features)
            stacked = np.vstack((stacked, penalty))
        r = np.linalg.qr(stacked, mode="r")
        upper_blocks.append(r[:n_features])
        reduced_rows.append(r[n_features : n_features + n_den, n_features:-1])
        reduced_rhs.append(r[n_features : n_features + n_den, -1])

    lhs = np.vstack(reduced_rows)
    rhs = np.concatenate(reduced_rhs)
    if ridge_scale:
        lhs = np.vstack((lhs, ridge_scale * np.eye(n_den)))
        rhs = np.concatenate((rhs, np.zeros(n_den)))
    denominator_tail, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)

    numerator = np.empty((4, n_features))
    for e, upper in enumerate(upper_blocks):
        r11 = upper[:, :n_features]
        r12 = upper[:, n_features:-1]
        numerator[e] = solve_triangular(r11, upper[:, -1] - r12 @ denominator_tail)
    return numerator, np.concatenate(([1.0], denominator_tail))


def _relative_rms(predicted: np.ndarray, reference: np.ndarray) -> float:
    return float(np.linalg.norm(predicted - reference) / np.linalg.norm(reference))


def _lattice(n_dims: int, seed: int) -> np.ndarray:
    if n_dims == 0:
        return np.zeros((1, 0))
    if 3**n_dims <= MAX_FULL_LATTICE:
        return np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=n_dims)))
    corners = np.array(list(itertools.product((-1.0, 1.0), repeat=min(n_dims, 9))))
    corners = np.hstack([corners, np.zeros((corners.shape[0], n_dims - corners.shape[1]))])
    interior = np.random.default_rng(seed).uniform(-1, 1, (MAX_FULL_LATTICE, n_dims))
    return np.vstack([np.zeros((1, n_dims)), corners, interior])


def check_denominator(surrogate: RationalSurrogate, grid: FrequencyGrid, seed: int = 0) -> float:
    """Minimum denominator margin over a lattice of the normalized box.

    Raises:
        InvalidSurrogateError: The denominator changes sign at s = 0 or
            approaches zero on the grid anywhere on the lattice.
    """
    points = _lattice(len(surrogate.coordinates), seed)
    s_hat = np.concatenate(([0.0], grid.s / surrogate.omega_scale))
    variables = np.empty((points.shape[0] * s_hat.size, len(surrogate.variables)), dtype=complex)
    variables[:, 0] = np.tile(s_hat, points.shape[0])
    variables[:, 1:] = np.repeat(points, s_hat.size, axis=0)
    denominator = (surrogate.features(variables) @ surrogate.denominator).reshape(
        points.shape[0], s_hat.size
    )
    at_dc = denominator[:, 0].real
    margin = float(min(at_dc.min(), np.abs(denominator).min()))
    if at_dc.min() <= LATTICE_MARGIN or np.abs(denominator).min() <= LATTICE_MARGIN:
        raise InvalidSurrogateError(
            "denominator not bounded away from zero on the validation lattice "
            f"(margin={margin:.3e})"
        )
    return margin


def fit_surrogate(
    d: TrainingDataset,
    basis_degree: int = 2,
    rho_degree: int = 2,
    ridge: float = 1e-9,
    n_fit_points: int = DEFAULT_FIT_POINTS,
    sk_iterations: int = SK_ITERATIONS,
    validation_seed: Optional[int] = None,
) -> RationalSurrogate:
    """Fit the rational surrogate by iteratively reweighted linear least squares.

    Args:
        d: Labeled dataset.
        basis_degree: Degree of the operating-point/frequency basis ``x``.
        rho_degree: Degree of the control-parameter polynomials in A.
        ridge: Ridge penalty on the coefficients (scaled by the row count).
        n_fit_points: Grid points per sample used by the least squares.
        sk_iterations: Sanathanan-Koerner reweighting passes.
        validation_seed: Seed of the 20% hold-out split; defaults to the
            dataset sampling seed.

    Returns:
        The fitted surrogate with ``fit_report`` holding training and
        validation relative RMS errors.

    Raises:
        InsufficientDataError: Fewer real observations than coefficients.
        InvalidSurrogateError: Denominator sign change on the lattice.
    """
    if basis_degree < 0 or rho_degree < 0 or ridge < 0:
        raise ValueError("basis_degree, rho_degree and ridge must be non-negative")
    grid = d.grid
    omega_scale = float(grid.points[-1])
    n_features = _feature_count(d.bounds, basis_degree, rho_degree)
    n_unknowns = 4 * n_features + n_features - 1

    seed = d.sampling_seed if validation_seed is None else validation_seed
    order = np.random.default_rng(seed).permutation(len(d))
    n_val = int(round(VALIDATION_FRACTION * len(d))) if len(d) >= 5 else 0
    validation = sorted(order[:n_val].tolist())
    training = sorted(order[n_val:].tolist())

    fit_index = np.unique(np.round(np.linspace(0, len(grid) - 1, n_fit_points)).astype(int))
    # real and imaginary rows of every entry
    n_observations = len(training) * fit_index.size * 4 * 2
    if n_observations < n_unknowns:
        raise InsufficientDataError(
            f"{n_observations} real observations for {n_unknowns} coefficients"
        )

    empty = RationalSurrogate(
        d.bounds,
        omega_scale,
        basis_degree,
        rho_degree,
        numerator=np.zeros((4, n_features)),
        denominator=np.concatenate(([1.0], np.zeros(n_features - 1))),
    )
    s_fit = grid.s[fit_index]
    features = np.vstack(
        [empty.features(empty.variables_for(d.samples[i][0], s_fit)) for i in training]
    )
    targets = np.vstack(
        [d.samples[i][1].values[fit_index].reshape(-1, 4) for i in training]
    )
    magnitude = np.linalg.norm(targets, axis=1)
    magnitude = np.where(magnitude > 0, magnitude, 1.0)
    denominator_prev = np.ones(features.shape[0])

    numerator = empty.numerator
    denominator = empty.denominator
    for iteration in range(sk_iterations):
        weights = 1.0 / (np.abs(denominator_prev) * magnitude)
        numerator, denominator = _solve_linearized(features, targets, weights, ridge)
        denominator_prev = features @ denominator
        if np.any(np.abs(denominator_prev) < DENOMINATOR_FLOOR):
            raise InvalidSurrogateError(
                f"fitted denominator vanishes at a training point (iteration {iteration + 1})"
            )
        residual = _relative_rms((features @ numerator.T) / denominator_prev[:, None], targets)
        logger.debug(
            "Sanathanan-Koerner iteration | iteration=%d train_rms=%.3e", iteration + 1, residual
        )

    surrogate = RationalSurrogate(
        d.bounds, omega_scale, basis_degree, rho_degree, numerator, denominator
    )
    margin = check_denominator(surrogate, grid.subset(n_fit_points), seed)

    train_error = _relative_rms(
        np.vstack([surrogate.predict_spectrum(d.samples[i][0], grid).values for i in training]),
        np.vstack([d.samples[i][1].values for i in training]),
    )
    validation_error = (
        _relative_rms(
            np.vstack(
                [surrogate.predict_spectrum(d.samples[i][0], grid).values for i in validation]
            ),
            np.vstack([d.samples[i][1].values for i in validation]),
        )
        if validation
        else None
    )
    surrogate.fit_report = {
        "basis_degree": basis_degree,
        "rho_degree": rho_degree,
        "ridge": ridge,
        "n_coefficients": n_unknowns,
        "n_training_samples": len(training),
        "n_validation_samples": len(validation),
        "n_fit_points": int(fit_index.size),
        "sk_iterations": sk_iterations,
        "validation_seed": seed,
        "train_relative_rms": train_error,
        "validation_relative_rms": validation_error,
        "denominator_margin": margin,
        "coordinates": surrogate.coordinates,
    }
    surrogate.metadata["warnings"] = []
    logger.info(
        "Surrogate fitted | coefficients=%d train_rms=%.3e validation_rms=%s",
        n_unknowns,
        train_error,
        "n/a" if validation_error is None else f"{validation_error:.3e}",
    )
    return surrogate


def _feature_count(bounds: Bounds, basis_degree: int, rho_degree: int) -> int:
    active = active_coordinates(check_bounds(bounds))
    n_x = sum(1 for name in X_OP_COORDINATES if name in active)
    n_rho = sum(1 for name in RHO_COORDINATES if name in active)
    return (
        monomial_exponents(1 + n_x, 2 * basis_degree).shape[0]
        * monomial_exponents(n_rho, rho_degree).shape[0]
    )
