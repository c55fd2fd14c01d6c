# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Labeled (parameter vector, impedance spectrum) datasets."""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ibr_ard.identification.era import era_identify
from ibr_ard.identification.records import synthesize_transients
from ibr_ard.models.interconnect import impedance_spectrum
from ibr_ard.models.types import (
    COORDINATES,
    FrequencyGrid,
    ImpedanceSpectrum,
    ParameterVector,
    StateSpaceModel,
)
from ibr_ard.shared.errors import ArdError, DatasetError
from ibr_ard.shared.export import (
    export_as_json,
    export_spectrum_as_csv,
    parse_spectrum_csv,
    write_artifact,
)
from ibr_ard.surrogate.sampling import Bounds, check_bounds

logger = logging.getLogger(__name__)

MAX_SKIPPED_FRACTION = 0.2
MANIFEST_NAME = "manifest.json"
DATASET_VERSION = 1

ModelBuilder = Callable[[ParameterVector], StateSpaceModel]


@dataclass
class TrainingDataset:
    samples: List[Tuple[ParameterVector, ImpedanceSpectrum]]
    sampling_seed: int
    bounds: Bounds
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.samples:
            raise DatasetError("dataset has no samples")
        self.bounds = check_bounds(self.bounds)
        grid = self.grid
        for params, spectrum in self.samples:
            if not spectrum.grid.same_as(grid):
                raise DatasetError("all dataset spectra must share one FrequencyGrid")
            for name, value in params.to_dict().items():
                lo, hi = self.bounds[name]
                if not lo - 1e-9 * max(abs(lo), 1.0) <= value <= hi + 1e-9 * max(abs(hi), 1.0):
                    raise DatasetError(f"sample coordinate {name}={value} outside [{lo}, {hi}]")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def grid(self) -> FrequencyGrid:
        return self.samples[0][1].grid

    def save(self, directory: Union[str, Path]) -> Path:
        """Write one CSV spectrum per sample plus ``manifest.json``."""
        directory = Path(directory)
        entries = []
        for index, (params, spectrum) in enumerate(self.samples):
            name = f"spectra/sample_{index:04d}.csv"
            write_artifact(directory / name, export_spectrum_as_csv(spectrum))
            entries.append({"file": name, "params": params.to_dict()})
        manifest = {
            "version": DATASET_VERSION,
            "sampling_seed": self.sampling_seed,
            "bounds": {name: list(self.bounds[name]) for name in COORDINATES},
            "n_samples": len(self.samples),
            "samples": entries,
            "metadata": self.metadata,
        }
        return write_artifact(directory / MANIFEST_NAME, export_as_json(manifest))

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "TrainingDataset":
        directory = Path(directory)
        manifest_path = directory / MANIFEST_NAME
        if not manifest_path.exists():
            raise FileNotFoundError(f"Dataset manifest not found: {manifest_path}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("version") != DATASET_VERSION:
            raise DatasetError(f"unsupported dataset version {manifest.get('version')}")
        samples = []
        for entry in manifest["samples"]:
            text = (directory / entry["file"]).read_text(encoding="utf-8")
            samples.append((ParameterVector(**entry["params"]), parse_spectrum_csv(text)))
        return cls(
            samples=samples,
            sampling_seed=int(manifest["sampling_seed"]),
            bounds={k: tuple(v) for k, v in manifest["bounds"].items()},
            metadata=manifest.get("metadata", {}),
        )


def bounds_of(params: Sequence[ParameterVector]) -> Bounds:
    values = np.array([p.to_array() for p in params])
    return {
        name: (float(values[:, i].min()), float(values[:, i].max()))
        for i, name in enumerate(COORDINATES)
    }


def generate_dataset(
    model_builder: ModelBuilder,
    params: Sequence[ParameterVector],
    grid: FrequencyGrid,
    mode: str = "direct",
    bounds: Optional[Mapping[str, Tuple[float, float]]] = None,
    sampling_seed: int = 0,
    era_dt: float = 1e-3,
    era_samples: int = 1024,
    max_workers: int = 4,
) -> TrainingDataset:
    """Label parameter vectors with inverter impedance spectra.

    Args:
        model_builder: Maps a ParameterVector to the white-box state-space model.
        params: Parameter vectors to label.
        grid: Frequency grid of the spectra.
        mode: ``"direct"`` evaluates the model; ``"via_era"`` synthesizes the
            two injection transients and identifies the model with ERA first.
        bounds: Box recorded on the dataset; defaults to the sample hull.
        sampling_seed: Seed used to draw ``params``, recorded for provenance.
        era_dt: Sampling step of the synthetic transients.
        era_samples: Samples per synthetic transient.
        max_workers: Thread pool size.

    Raises:
        DatasetError: No parameters, or more than 20% infeasible samples.
    """
    if not params:
        raise DatasetError("cannot generate a dataset from an empty parameter list")
    if mode not in ("direct", "via_era"):
        raise ValueError(f"unknown dataset mode {mode!r}")

    def label(index_params: Tuple[int, ParameterVector]) -> Optional[ImpedanceSpectrum]:
        index, v = index_params
        try:
            model = model_builder(v)
            if mode == "via_era":
                records = synthesize_transients(model, dt=era_dt, n_samples=era_samples)
                model = era_identify(records, model_order="auto")
            return impedance_spectrum(model, grid)
        except ArdError as exc:
            logger.warning(
                "Dataset sample skipped | index=%d category=%s message=%s",
                index,
                exc.category,
                exc,
            )
            return None

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        spectra = list(executor.map(label, enumerate(params)))

    samples = [(v, z) for v, z in zip(params, spectra) if z is not None]
    skipped = len(params) - len(samples)
    if skipped > MAX_SKIPPED_FRACTION * len(params) or not samples:
        raise DatasetError(
            f"{skipped} of {len(params)} samples infeasible (limit {MAX_SKIPPED_FRACTION:.0%})"
        )
    logger.info(
        "Dataset generated | mode=%s samples=%d skipped=%d grid_points=%d",
        mode,
        len(samples),
        skipped,
        len(grid),
    )
    return TrainingDataset(
        samples=samples,
        sampling_seed=sampling_seed,
        bounds=dict(bounds) if bounds is not None else bounds_of(params),
        metadata={"mode": mode, "skipped": skipped, "requested": len(params)},
    )
