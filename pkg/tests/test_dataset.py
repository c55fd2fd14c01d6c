# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Tests for labeled training datasets."""

import json
import logging

import numpy as np
import pytest

from ibr_ard.models.interconnect import impedance_spectrum
from ibr_ard.models.types import COORDINATES
from ibr_ard.models.vsg import build_vsg_state_space
from ibr_ard.shared.errors import DatasetError, InfeasibleOperatingPointError
from ibr_ard.surrogate.dataset import MANIFEST_NAME, TrainingDataset, generate_dataset
from ibr_ard.surrogate.sampling import lhs_sample


@pytest.fixture
def box(nominal):
    bounds = {name: (getattr(nominal, name),) * 2 for name in COORDINATES}
    bounds["J"] = (0.8 * nominal.J, 1.2 * nominal.J)
    bounds["Dp"] = (0.5 * nominal.Dp, 1.5 * nominal.Dp)
    return bounds


@pytest.fixture
def builder(filter_params, omega0):
    return lambda v: build_vsg_state_space(v, filter_params, omega0)


class TestGenerateDataset:
    def test_direct_labels_match_model(self, box, builder, small_grid):
        params = lhs_sample(box, 6, seed=1)
        dataset = generate_dataset(
            builder, params, small_grid, bounds=box, sampling_seed=1, max_workers=2
        )
        assert len(dataset) == 6
        assert dataset.metadata == {"mode": "direct", "skipped": 0, "requested": 6}
        v, spectrum = dataset.samples[3]
        assert v == params[3]
        np.testing.assert_allclose(
            spectrum.values, impedance_spectrum(builder(v), small_grid).values
        )

    def test_via_era_close_to_direct(self, box, builder, small_grid):
        params = lhs_sample(box, 3, seed=2)
        direct = generate_dataset(builder, params, small_grid, bounds=box)
        via_era = generate_dataset(
            builder, params, small_grid, mode="via_era", bounds=box, era_dt=1e-4, era_samples=2048
        )
        for (_, expected), (_, identified) in zip(direct.samples, via_era.samples):
            scale = np.abs(expected.values).max()
            np.testing.assert_allclose(
                identified.values, expected.values, rtol=1e-3, atol=1e-4 * scale
            )

    def test_skipped_samples_are_logged(self, box, builder, small_grid, caplog):
        params = lhs_sample(box, 10, seed=3)
        rejected = params[4]

        def flaky(v):
            if v == rejected:
                raise InfeasibleOperatingPointError("no steady state")
            return builder(v)

        with caplog.at_level(logging.WARNING):
            dataset = generate_dataset(flaky, params, small_grid, bounds=box)
        assert len(dataset) == 9
        assert dataset.metadata["skipped"] == 1
        assert "Dataset sample skipped" in caplog.text

    def test_too_many_infeasible_samples(self, box, small_grid):
        def infeasible(v):
            raise InfeasibleOperatingPointError("no steady state")

        with pytest.raises(DatasetError, match="infeasible"):
            generate_dataset(infeasible, lhs_sample(box, 5, seed=0), small_grid, bounds=box)

    def test_empty_parameter_list(self, builder, small_grid):
        with pytest.raises(DatasetError, match="empty"):
            generate_dataset(builder, [], small_grid)

    def test_unknown_mode(self, box, builder, small_grid):
        with pytest.raises(ValueError, match="mode"):
            generate_dataset(builder, lhs_sample(box, 2, seed=0), small_grid, mode="rough")


class TestTrainingDataset:
    def test_save_and_load(self, tmp_path, box, builder, small_grid):
        dataset = generate_dataset(
            builder, lhs_sample(box, 4, seed=5), small_grid, bounds=box, sampling_seed=5
        )
        manifest = dataset.save(tmp_path / "dataset")
        assert manifest.name == MANIFEST_NAME
        assert json.loads(manifest.read_text())["n_samples"] == 4

        loaded = TrainingDataset.load(tmp_path / "dataset")
        assert len(loaded) == 4
        assert loaded.sampling_seed == 5
        assert loaded.bounds == dataset.bounds
        for (v, spectrum), (w, restored) in zip(dataset.samples, loaded.samples):
            assert v == w
            np.testing.assert_allclose(restored.values, spectrum.values, rtol=1e-14)

    def test_load_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="manifest"):
            TrainingDataset.load(tmp_path)

    def test_sample_outside_bounds(self, box, builder, small_grid, nominal):
        spectrum = impedance_spectrum(builder(nominal), small_grid)
        outside = nominal.with_values(J=2 * nominal.J)
        with pytest.raises(DatasetError, match="outside"):
            TrainingDataset([(outside, spectrum)], sampling_seed=0, bounds=box)

    def test_needs_samples(self, box):
        with pytest.raises(DatasetError, match="no samples"):
            TrainingDataset([], sampling_seed=0, bounds=box)
