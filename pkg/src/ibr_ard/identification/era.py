# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""MIMO Eigensystem Realization Algorithm on two-experiment transient records."""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import expm, logm

from ibr_ard.identification.records import TransientRecord
from ibr_ard.models.types import StateSpaceModel
from ibr_ard.shared.errors import RecordError, UnidentifiableError

logger = logging.getLogger(__name__)

SINGULAR_VALUE_THRESHOLD = 1e-8
DEFAULT_HANKEL_BLOCKS = 150


def markov_parameters(records: Sequence[TransientRecord]) -> np.ndarray:
    """Recover the discrete Markov parameters ``H_k`` (2x2) by deconvolution.

    ``y_k = sum_j H_j u_{k-j}``, solved recursively with the stacked first
    input samples of both experiments as the pivot.

    Raises:
        RecordError: Mismatched dt or length, or input directions that are
            not linearly independent at the first sample.
    """
    if len(records) != 2:
        raise RecordError(f"ERA needs exactly two records, got {len(records)}")
    first, second = records
    if not np.isclose(first.dt, second.dt, rtol=1e-12, atol=0.0):
        raise RecordError(f"records have mismatched dt: {first.dt} vs {second.dt}")
    if len(first) != len(second):
        raise RecordError(f"records have mismatched length: {len(first)} vs {len(second)}")

    inputs = np.stack([first.inputs, second.inputs], axis=2)  # (N, 2, 2) columns = experiments
    outputs = np.stack([first.outputs, second.outputs], axis=2)
    pivot = inputs[0]
    if abs(np.linalg.det(pivot)) <= 1e-12 * max(np.abs(pivot).max(), 1e-300) ** 2:
        raise RecordError("record input directions are not linearly independent")
    pivot_inv = np.linalg.inv(pivot)

    n = len(first)
    markov = np.zeros((n, 2, 2))
    for k in range(n):
        acc = outputs[k].copy()
        if k:
            # sum_{j<k} H_j U_{k-j}
            acc -= np.einsum("jab,jbc->ac", markov[:k], inputs[k:0:-1])
        markov[k] = acc @ pivot_inv
    return markov


def _hankel_pair(markov: np.ndarray, start: int, blocks: int) -> Tuple[np.ndarray, np.ndarray]:
    hankel = np.empty((2 * blocks, 2 * blocks))
    shifted = np.empty_like(hankel)
    for i in range(blocks):
        for j in range(blocks):
            hankel[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = markov[start + i + j]
            shifted[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = markov[start + i + j + 1]
    return hankel, shifted


def _integral_of_exponential(A: np.ndarray, dt: float) -> np.ndarray:
    """``Gamma = int_0^dt expm(A tau) dtau`` via the augmented exponential."""
    n = A.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = A
    block[:n, n:] = np.eye(n)
    return expm(block * dt)[:n, n:]


def era_identify(
    records: Sequence[TransientRecord],
    model_order: Union[int, str] = "auto",
    hankel_blocks: Optional[int] = None,
) -> StateSpaceModel:
    """Identify ``Z(s) = C(sI-A)^-1 B + D + sE`` from two transient records.

    The Hankel matrix starts at the third Markov parameter so the two first
    ones determine the feedthrough and proportional terms exactly.

    Args:
        records: d-axis and q-axis experiments with equal dt.
        model_order: State dimension, or ``"auto"`` to count normalized
            Hankel singular values above 1e-8.
        hankel_blocks: Block rows/columns of the Hankel matrix.

    Returns:
        Continuous-time model mapping injected current to terminal voltage.
    """
    markov = markov_parameters(records)
    dt = records[0].dt
    available = (markov.shape[0] - 3) // 2
    blocks = min(hankel_blocks or DEFAULT_HANKEL_BLOCKS, available)
    if blocks < 1:
        raise RecordError("records too short to build a Hankel matrix")

    hankel, shifted = _hankel_pair(markov, 2, blocks)
    left, sigma, right_t = np.linalg.svd(hankel)
    if sigma[0] <= 0 or not np.isfinite(sigma[0]):
        raise UnidentifiableError("Hankel matrix is zero; records carry no dynamics")
    normalized = sigma / sigma[0]

    if model_order == "auto":
        order = int(np.count_nonzero(normalized > SINGULAR_VALUE_THRESHOLD))
    else:
        order = int(model_order)
        if order <= 0:
            raise ValueError(f"model_order must be positive, got {model_order}")
        if order > sigma.size:
            raise UnidentifiableError(
                f"model_order {order} exceeds Hankel rank bound {sigma.size}"
            )
    if order == 0 or normalized[order - 1] <= np.finfo(float).eps:
        raise UnidentifiableError(
            f"Hankel matrix is rank deficient for order {order}; "
            "all singular values below threshold"
        )

    sigma_sqrt = np.sqrt(sigma[:order])
    observability = left[:, :order] * sigma_sqrt
    controllability = (right_t[:order, :].T * sigma_sqrt).T
    ad = (left[:, :order] / sigma_sqrt).T @ shifted @ (right_t[:order, :].T / sigma_sqrt)
    bd = controllability[:, :2]
    c_shifted = observability[:2, :]  # C * Ad

    try:
        c = np.linalg.solve(ad.T, c_shifted.T).T
    except np.linalg.LinAlgError as exc:
        raise UnidentifiableError("identified transition matrix is singular") from exc

    E = dt * (c @ bd - markov[1])
    D = markov[0] - E / dt

    a_log = logm(ad)
    if np.iscomplexobj(a_log):
        imaginary = float(np.max(np.abs(a_log.imag)))
        if imaginary > 1e-8 * max(float(np.max(np.abs(a_log.real))), 1.0):
            logger.warning(
                "Matrix logarithm has a non-negligible imaginary part | max_imag=%.3e", imaginary
            )
        a_log = a_log.real
    A = a_log / dt
    B = np.linalg.solve(_integral_of_exponential(A, dt), bd)

    logger.info(
        "ERA identification complete | order=%d hankel_blocks=%d sigma_ratio=%.3e",
        order,
        blocks,
        normalized[order - 1],
    )
    return StateSpaceModel(
        A=A,
        B=B,
        C=c,
        D=D,
        E=E,
        input_labels=("id", "iq"),
        output_labels=("vd", "vq"),
    )
