# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Transient records of the two current-injection experiments."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import expm

from ibr_ard.models.types import StateSpaceModel
from ibr_ard.shared.errors import RecordError
from ibr_ard.shared.export import (
    TRANSIENT_HEADER,
    export_as_json,
    export_rows_as_csv,
    parse_csv_rows,
    write_artifact,
)

logger = logging.getLogger(__name__)

MIN_SAMPLES = 32


@dataclass(frozen=True)
class TransientRecord:
    """Sampled injected currents (A) and terminal voltages (V) of one experiment."""

    dt: float
    inputs: np.ndarray
    outputs: np.ndarray
    experiment_id: int

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        outputs = np.asarray(self.outputs, dtype=float)
        if self.dt <= 0:
            raise RecordError(f"record dt must be positive, got {self.dt}")
        if inputs.ndim != 2 or inputs.shape[1] != 2 or outputs.shape != inputs.shape:
            raise RecordError(
                f"record inputs/outputs must be (N, 2) of equal length, "
                f"got {inputs.shape} and {outputs.shape}"
            )
        if inputs.shape[0] < MIN_SAMPLES:
            raise RecordError(f"record needs at least {MIN_SAMPLES} samples, got {inputs.shape[0]}")
        if self.experiment_id not in (1, 2):
            raise RecordError(f"experiment_id must be 1 or 2, got {self.experiment_id}")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(len(self))

    def with_noise(self, relative_rms: float, rng: np.random.Generator) -> "TransientRecord":
        """Copy with additive white Gaussian output noise scaled to the signal RMS."""
        rms = np.sqrt(np.mean(self.outputs**2, axis=0))
        noise = rng.standard_normal(self.outputs.shape) * (relative_rms * rms)
        return TransientRecord(self.dt, self.inputs, self.outputs + noise, self.experiment_id)

    def save(self, csv_path: Union[str, Path]) -> Tuple[Path, Path]:
        """Write ``<name>.csv`` plus a ``<name>.json`` metadata sidecar."""
        csv_path = Path(csv_path)
        rows = np.column_stack([self.t, self.inputs, self.outputs])
        write_artifact(csv_path, export_rows_as_csv(TRANSIENT_HEADER, rows))
        sidecar = csv_path.with_suffix(".json")
        metadata = {
            "dt": self.dt,
            "experiment_id": self.experiment_id,
            "n_samples": len(self),
            "units": {"t": "s", "id": "A", "iq": "A", "vd": "V", "vq": "V"},
        }
        write_artifact(sidecar, export_as_json(metadata))
        return csv_path, sidecar

    @classmethod
    def load(cls, csv_path: Union[str, Path]) -> "TransientRecord":
        csv_path = Path(csv_path)
        sidecar = csv_path.with_suffix(".json")
        if not sidecar.exists():
            raise RecordError(f"missing metadata sidecar for {csv_path}")
        metadata = json.loads(sidecar.read_text(encoding="utf-8"))
        try:
            data = np.array(
                parse_csv_rows(csv_path.read_text(encoding="utf-8"), TRANSIENT_HEADER), dtype=float
            )
        except ValueError as exc:
            raise RecordError(f"invalid transient record {csv_path}: {exc}") from exc
        return cls(
            dt=float(metadata["dt"]),
            inputs=data[:, 1:3],
            outputs=data[:, 3:5],
            experiment_id=int(metadata["experiment_id"]),
        )


def discretize(model: StateSpaceModel, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Zero-order-hold discretization ``(Ad, Bd)``."""
    n, m = model.n_states, model.n_inputs
    block = np.zeros((n + m, n + m))
    block[:n, :n] = model.A
    block[:n, n:] = model.B
    transition = expm(block * dt)
    return transition[:n, :n], transition[:n, n:]


def synthesize_transients(
    model: StateSpaceModel,
    dt: float = 1e-3,
    n_samples: int = 1024,
    amplitude: float = 1.0,
    noise_rms: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[TransientRecord, TransientRecord]:
    """Simulate the d-axis and q-axis pulse-injection experiments.

    The injected current is a single-sample pulse held by a zero-order hold.
    The proportional term of the model acts on the backward difference of
    the sampled current.
    """
    if n_samples < MIN_SAMPLES:
        raise RecordError(f"n_samples must be at least {MIN_SAMPLES}")
    ad, bd = discretize(model, dt)
    records = []
    for experiment_id, direction in ((1, np.array([1.0, 0.0])), (2, np.array([0.0, 1.0]))):
        inputs = np.zeros((n_samples, 2))
        inputs[0] = amplitude * direction
        previous = np.vstack([np.zeros((1, 2)), inputs[:-1]])
        x = np.zeros(model.n_states)
        outputs = np.empty((n_samples, 2))
        for k in range(n_samples):
            outputs[k] = (
                model.C @ x + model.D @ inputs[k] + model.E @ (inputs[k] - previous[k]) / dt
            )
            x = ad @ x + bd @ inputs[k]
        record = TransientRecord(dt, inputs, outputs, experiment_id)
        if noise_rms > 0:
            record = record.with_noise(noise_rms, rng or np.random.default_rng(0))
        records.append(record)
    logger.debug(
        "Synthesized transients | n_states=%d dt=%s n_samples=%d noise_rms=%s",
        model.n_states,
        dt,
        n_samples,
        noise_rms,
    )
    return records[0], records[1]
