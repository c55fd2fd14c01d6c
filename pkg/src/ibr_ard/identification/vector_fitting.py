# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""System admittance assembly and relaxed vector fitting with a common pole set.

The four dq entries share one pole set. Pole relocation follows the fast
relaxed formulation: per-response QR reduction to the sigma unknowns, one
extra equation fixing the relaxed constant, and new poles as eigenvalues of a
real matrix so conjugate pairs stay paired.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from ibr_ard.models.types import FrequencyGrid, ImpedanceSpectrum, PoleResidueModel
from ibr_ard.shared.errors import NearResonanceError, NumericalConditioningError

logger = logging.getLogger(__name__)

RESONANCE_CONDITION = 1e12
POOR_FIT_THRESHOLD = 1e-3
MIN_IMPROVEMENT = 1e-10
EXACT_FIT = 1e-13


def assemble_admittance(z_inv: ImpedanceSpectrum, z_g: ImpedanceSpectrum) -> ImpedanceSpectrum:
    """Pointwise ``(Z_inv + Z_g)^-1`` on a shared grid.

    Raises:
        NearResonanceError: The sum is singular (condition number above 1e12)
            at a grid point; the error carries that angular frequency.
    """
    if not z_inv.grid.same_as(z_g.grid):
        raise ValueError("inverter and grid spectra must share one FrequencyGrid")
    total = z_inv.values + z_g.values
    condition = np.linalg.cond(total)
    bad = np.nonzero(~np.isfinite(condition) | (condition > RESONANCE_CONDITION))[0]
    if bad.size:
        omega = float(z_inv.grid.points[bad[0]])
        raise NearResonanceError(
            f"Z_inv + Z_g is singular at omega={omega:.6g} rad/s "
            f"({omega / (2 * np.pi):.4f} Hz), cond={condition[bad[0]]:.3e}",
            omega,
        )
    return ImpedanceSpectrum(z_inv.grid, np.linalg.inv(total), role="admittance")


def initial_poles(grid: FrequencyGrid, n_poles: int) -> np.ndarray:
    """Log-spaced complex starting poles (upper half plane) with Re = -Im/100."""
    imag = np.logspace(np.log10(grid.points[0]), np.log10(grid.points[-1]), n_poles // 2)
    return -imag / 100 + 1j * imag


def _basis(s: np.ndarray, poles: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Real-coefficient rational basis; complex pairs use the (re, im) split."""
    real = np.nonzero(poles.imag == 0)[0]
    cplx = np.nonzero(poles.imag != 0)[0]
    columns = np.empty((s.size, real.size + 2 * cplx.size), dtype=complex)
    columns[:, : real.size] = 1 / (s[:, None] - poles[None, real])
    plus = 1 / (s[:, None] - poles[None, cplx])
    minus = 1 / (s[:, None] - np.conj(poles[None, cplx]))
    re_idx = real.size + 2 * np.arange(cplx.size)
    columns[:, re_idx] = plus + minus
    columns[:, re_idx + 1] = 1j * (plus - minus)
    return columns, real, cplx


def _relocate_poles(
    poles: np.ndarray,
    s: np.ndarray,
    responses: np.ndarray,
    weights: np.ndarray,
    fit_constant: bool,
    fit_proportional: bool,
) -> Tuple[np.ndarray, float]:
    n_responses, n_freqs = responses.shape
    rbf, real, cplx = _basis(s, poles)
    n_poles = rbf.shape[1]
    extra = [np.ones(n_freqs)] if fit_constant else []
    if fit_proportional:
        extra.append(s)
    n_c = n_poles + len(extra)
    n_c_tilde = n_poles + 1

    system = np.empty((n_responses, n_freqs, n_c + n_c_tilde), dtype=complex)
    system[:, :, :n_poles] = weights[None, :, None] * rbf[None]
    for k, column in enumerate(extra):
        system[:, :, n_poles + k] = weights[None, :] * column[None]
    system[:, :, n_c : n_c + n_poles] = -weights[None, :, None] * rbf[None] * responses[:, :, None]
    system[:, :, -1] = -weights[None, :] * responses

    r = np.linalg.qr(np.concatenate((system.real, system.imag), axis=1), mode="r")
    rows = min(2 * n_freqs, n_c + n_c_tilde) - n_c
    r22 = r[:, n_c : n_c + rows, n_c:]

    dense = np.empty((n_responses * rows + 1, n_c_tilde))
    dense[:-1] = r22.reshape(n_responses * rows, n_c_tilde)
    weight_extra = np.linalg.norm(responses * weights[None, :]) / responses.size
    dense[-1, :n_poles] = weight_extra * np.sum(rbf.real, axis=0)
    dense[-1, -1] = weight_extra * n_freqs
    d_norm = np.linalg.norm(dense[:, :-1]) / (dense.shape[0] * (dense.shape[1] - 1))
    dense[:, -1] *= d_norm
    rhs = np.zeros(dense.shape[0])
    rhs[-1] = weight_extra * responses.size

    condition = float(np.linalg.cond(dense))
    solution, *_ = np.linalg.lstsq(dense, rhs, rcond=None)
    if not np.all(np.isfinite(solution)):
        raise NumericalConditioningError(
            f"pole relocation least squares is singular (cond={condition:.3e})"
        )
    d_tilde = solution[-1] * d_norm
    c_tilde = solution[:-1]
    if not 1e-18 < abs(d_tilde) < 1e18:
        raise NumericalConditioningError(f"pole relocation failed, d_tilde={d_tilde:.3e}")

    h = np.zeros((n_poles, n_poles))
    h[np.arange(real.size), np.arange(real.size)] = poles[real].real
    h[: real.size] -= c_tilde / d_tilde
    re_idx = real.size + 2 * np.arange(cplx.size)
    im_idx = re_idx + 1
    h[re_idx, re_idx] = poles[cplx].real
    h[re_idx, im_idx] = poles[cplx].imag
    h[im_idx, re_idx] = -poles[cplx].imag
    h[im_idx, im_idx] = poles[cplx].real
    h[re_idx] -= 2 * c_tilde / d_tilde

    relocated = np.linalg.eigvals(h)
    return relocated[relocated.imag >= 0], condition


def _fit_residues(
    poles: np.ndarray,
    s: np.ndarray,
    responses: np.ndarray,
    weights: np.ndarray,
    fit_constant: bool,
    fit_proportional: bool,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rbf, real, cplx = _basis(s, poles)
    columns = [rbf]
    scale = np.linalg.norm(rbf) / max(rbf.size, 1) if rbf.size else 1.0
    if fit_constant:
        columns.append(scale * np.ones((s.size, 1)))
    if fit_proportional:
        columns.append(scale * (s / (np.linalg.norm(s) / s.size))[:, None])
    basis = np.hstack(columns) * weights[:, None]
    lhs = np.vstack((basis.real, basis.imag))
    weighted = (responses * weights[None, :]).T
    rhs = np.vstack((weighted.real, weighted.imag))
    x, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)

    n_real = real.size
    residues = np.empty((poles.size, responses.shape[0]), dtype=complex)
    residues[real] = x[:n_real]
    residues[cplx] = x[n_real : rbf.shape[1] : 2] + 1j * x[n_real + 1 : rbf.shape[1] : 2]
    position = rbf.shape[1]
    constant = np.zeros(responses.shape[0])
    proportional = np.zeros(responses.shape[0])
    if fit_constant:
        constant = x[position] * scale
        position += 1
    if fit_proportional:
        proportional = x[position] * scale / (np.linalg.norm(s) / s.size)
    return residues, constant, proportional


def _expand(
    poles: np.ndarray,
    residues: np.ndarray,
    constant: np.ndarray,
    proportional: np.ndarray,
    omega_scale: float,
) -> PoleResidueModel:
    """Conjugate-expand upper-half-plane poles and undo frequency normalization."""
    full_poles: List[complex] = []
    full_residues: List[np.ndarray] = []
    for pole, residue in zip(poles, residues):
        matrix = residue.reshape(2, 2) * omega_scale
        full_poles.append(pole * omega_scale)
        full_residues.append(matrix)
        if pole.imag != 0:
            full_poles.append(np.conj(pole) * omega_scale)
            full_residues.append(np.conj(matrix))
    return PoleResidueModel(
        poles=np.array(full_poles, dtype=complex),
        residues=np.array(full_residues, dtype=complex).reshape(-1, 2, 2),
        feedthrough=constant.reshape(2, 2),
        linear=proportional.reshape(2, 2) / omega_scale,
    )


def fit_rms_error(model: PoleResidueModel, spectrum: ImpedanceSpectrum) -> float:
    """Relative RMS error of the model against spectrum samples."""
    fitted = model.spectrum(spectrum.grid, spectrum.role).values
    return float(np.linalg.norm(fitted - spectrum.values) / np.linalg.norm(spectrum.values))


def vector_fit(
    y: ImpedanceSpectrum,
    n_poles: int = 8,
    n_iter: int = 10,
    fit_constant: bool = True,
    fit_proportional: bool = False,
    flip_unstable: bool = False,
    weighting: str = "uniform",
) -> PoleResidueModel:
    """Fit a common-pole rational model to the four entries of a dq spectrum.

    Args:
        y: Spectrum to fit (normally the system admittance).
        n_poles: Total number of poles, even; pairs count twice.
        n_iter: Maximum relocation iterations.
        fit_constant: Fit a feedthrough term.
        fit_proportional: Fit a term proportional to s.
        flip_unstable: Mirror right-half-plane poles after each relocation.
            Off by default since unstable system poles are the quantity of
            interest.
        weighting: ``"uniform"`` or ``"inverse_magnitude"`` (per-frequency
            1/||Y||_F).

    Returns:
        PoleResidueModel with ``metadata`` holding the iteration count, the
        relative RMS error and any warnings.
    """
    n_freqs = len(y.grid)
    if n_poles <= 0 or n_poles % 2:
        raise ValueError(f"n_poles must be a positive even integer, got {n_poles}")
    if n_poles > 2 * n_freqs // 4:
        raise ValueError(f"n_poles={n_poles} exceeds the grid limit {2 * n_freqs // 4}")
    if n_iter < 1:
        raise ValueError(f"n_iter must be at least 1, got {n_iter}")

    omega_scale = float(y.grid.points[-1])
    s = y.grid.s / omega_scale
    responses = y.values.reshape(n_freqs, 4).T
    if weighting == "uniform":
        weights = np.ones(n_freqs)
    elif weighting == "inverse_magnitude":
        weights = 1 / np.maximum(np.linalg.norm(y.values, axis=(1, 2)), 1e-300)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    norm_data = np.linalg.norm(responses)
    if norm_data == 0:
        raise NumericalConditioningError("cannot fit an all-zero spectrum")

    def rms(poles_n, residues_n, constant_n, proportional_n) -> float:
        model = _expand(poles_n, residues_n, constant_n, proportional_n, 1.0)
        fitted = np.stack([model.evaluate(point) for point in s]).reshape(n_freqs, 4).T
        return float(np.linalg.norm(fitted - responses) / norm_data)

    poles = initial_poles(y.grid, n_poles) / omega_scale
    fit = _fit_residues(poles, s, responses, weights, fit_constant, fit_proportional)
    error = rms(poles, *fit)
    best: Tuple[np.ndarray, Tuple[np.ndarray, np.ndarray, np.ndarray], float] = (poles, fit, error)
    history: List[Dict[str, float]] = []
    iterations = 0

    while iterations < n_iter and error > EXACT_FIT:
        iterations += 1
        poles, condition = _relocate_poles(
            poles, s, responses, weights, fit_constant, fit_proportional
        )
        if flip_unstable:
            poles = -np.abs(poles.real) + 1j * poles.imag
        fit = _fit_residues(poles, s, responses, weights, fit_constant, fit_proportional)
        previous, error = error, rms(poles, *fit)
        history.append({"iteration": iterations, "rms_error": error, "condition": condition})
        logger.debug(
            "Pole relocation | iteration=%d rms_error=%.3e cond=%.1e",
            iterations,
            error,
            condition,
        )
        if error < best[2]:
            best = (poles, fit, error)
        if previous - error < MIN_IMPROVEMENT:
            break

    poles, fit, error = best
    model = _expand(poles, *fit, omega_scale)
    warnings: List[str] = []
    if error > POOR_FIT_THRESHOLD:
        warnings.append(f"poor fit: relative RMS error {error:.3e} exceeds {POOR_FIT_THRESHOLD}")
        logger.warning(
            "Vector fitting did not converge | n_poles=%d rms_error=%.3e", n_poles, error
        )
    unstable = int(np.count_nonzero(model.poles.real > 0))
    model.metadata = {
        "n_poles": n_poles,
        "iterations": iterations,
        "rms_error": error,
        "flip_unstable": flip_unstable,
        "unstable_poles": unstable,
        "history": history,
        "warnings": warnings,
    }
    logger.info(
        "Vector fitting complete | n_poles=%d iterations=%d rms_error=%.3e unstable=%d",
        n_poles,
        iterations,
        error,
        unstable,
    )
    return model


def sorted_upper_poles(model: PoleResidueModel) -> np.ndarray:
    """Upper-half-plane poles sorted by imaginary part (test and report helper)."""
    upper = model.poles[model.poles.imag > 0]
    return upper[np.argsort(upper.imag)]


def rightmost_pair(model: PoleResidueModel, min_imag: float = 0.0) -> Optional[complex]:
    upper = model.poles[model.poles.imag > min_imag]
    return complex(upper[np.argmax(upper.real)]) if upper.size else None
