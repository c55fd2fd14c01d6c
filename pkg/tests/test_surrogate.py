# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Tests for the rational, white-box and affine surrogates."""

import json
import logging

import numpy as np
import pytest

from ibr_ard.models.interconnect import evaluate_impedance
from ibr_ard.models.types import COORDINATES
from ibr_ard.models.vsg import build_vsg_state_space
from ibr_ard.shared.errors import (
    EvaluationSingularityError,
    InsufficientDataError,
    InvalidSurrogateError,
)
from ibr_ard.surrogate.base import AffineSurrogate
from ibr_ard.surrogate.dataset import TrainingDataset
from ibr_ard.surrogate.oracle import WhiteBoxSurrogate
from ibr_ard.surrogate.rational import (
    ENTRIES,
    RationalSurrogate,
    check_denominator,
    fit_surrogate,
    monomial_exponents,
    surrogate_eval,
    surrogate_grad,
)
from ibr_ard.surrogate.sampling import lhs_sample

# Feature order for one frequency variable and one control coordinate (J):
# (1, J, s, sJ, s^2, s^2 J).
DENOMINATOR = np.array([1.0, 0.1, 0.3, 0.0, 0.2, 0.0])


@pytest.fixture
def box(nominal):
    bounds = {name: (getattr(nominal, name),) * 2 for name in COORDINATES}
    bounds["J"] = (0.8 * nominal.J, 1.2 * nominal.J)
    return bounds


@pytest.fixture
def reference(box, small_grid):
    numerator = np.random.default_rng(4).standard_normal((4, DENOMINATOR.size))
    return RationalSurrogate(
        box,
        omega_scale=small_grid.points[-1],
        basis_degree=1,
        rho_degree=1,
        numerator=numerator,
        denominator=DENOMINATOR,
    )


def labeled(surrogate, box, grid, n, seed=0):
    samples = [(v, surrogate.predict_spectrum(v, grid)) for v in lhs_sample(box, n, seed)]
    return TrainingDataset(samples, sampling_seed=seed, bounds=box)


class TestMonomials:
    def test_graded_order(self):
        exponents = monomial_exponents(2, 2)
        assert exponents.tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]

    def test_no_variables(self):
        assert monomial_exponents(0, 3).shape == (1, 0)


class TestRationalSurrogate:
    def test_feature_layout(self, reference):
        assert reference.variables == ["s", "J"]
        assert reference.coordinates == ["J"]
        assert reference.exponents.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1], [2, 0], [2, 1]]

    def test_denominator_constant_must_be_one(self, box):
        with pytest.raises(InvalidSurrogateError, match="constant coefficient"):
            RationalSurrogate(box, 1.0, 1, 1, np.zeros((4, 6)), np.zeros(6))

    def test_gradient_matches_finite_differences(self, reference, nominal):
        s = 1j * 2 * np.pi * 17.0
        v = nominal.with_values(J=850.0)
        h = 1e-2
        expected = (
            surrogate_eval(reference, v.with_values(J=v.J + h), s)
            - surrogate_eval(reference, v.with_values(J=v.J - h), s)
        ) / (2 * h)
        gradient = surrogate_grad(reference, v, s)
        assert set(gradient) == set(COORDINATES)
        np.testing.assert_allclose(gradient["J"], expected, rtol=1e-6, atol=1e-12)
        np.testing.assert_array_equal(gradient["Dp"], np.zeros((2, 2)))

    def test_quadratic_forms_reproduce_evaluation(self, reference, nominal, box):
        v = nominal.with_values(J=780.0)
        s = 1j * 2 * np.pi * 40.0
        s_hat = s / reference.omega_scale
        lo, hi = box["J"]
        j_hat = 2 * (v.J - lo) / (hi - lo) - 1
        x = np.array([1.0, s_hat])
        rho = np.array([1.0, j_hat])
        forms = reference.quadratic_forms()

        def quadratic(matrix):
            return np.einsum("i,ijk,j,k->", x, matrix, x, rho)

        expected = np.array([quadratic(forms[e]) for e in ENTRIES]) / quadratic(forms["0"])
        np.testing.assert_allclose(reference.evaluate(v, s).reshape(-1), expected, rtol=1e-12)
        for matrix in forms.values():
            np.testing.assert_allclose(matrix, matrix.transpose(1, 0, 2))

    def test_singular_denominator(self, box, nominal):
        denominator = np.array([1.0, 0.0, -1.0, 0.0, 0.0, 0.0])
        surrogate = RationalSurrogate(box, 100.0, 1, 1, np.ones((4, 6)), denominator)
        with pytest.raises(EvaluationSingularityError):
            surrogate.evaluate(nominal, 100.0 + 0j)

    def test_extrapolation_warns_once(self, reference, nominal, caplog):
        far = nominal.with_values(J=2 * nominal.J)
        with caplog.at_level(logging.WARNING):
            reference.evaluate(far, 1j * 50.0)
            reference.evaluate(far, 1j * 60.0)
        assert len(reference.metadata["warnings"]) == 1
        assert "extrapolation" in reference.metadata["warnings"][0]
        assert caplog.text.count("extrapolation") == 1

    def test_save_and_load(self, tmp_path, reference, nominal):
        path = reference.save(tmp_path / "surrogate.json")
        data = json.loads(path.read_text())
        assert data["kind"] == "rational_fit"
        assert set(data["A"]) == {"dd", "dq", "qd", "qq", "0"}

        loaded = RationalSurrogate.load(path)
        s = 1j * 2 * np.pi * 25.0
        np.testing.assert_allclose(loaded.evaluate(nominal, s), reference.evaluate(nominal, s))

    def test_load_rejects_other_version(self, tmp_path, reference):
        data = reference.to_dict()
        data["version"] = 99
        path = tmp_path / "surrogate.json"
        path.write_text(json.dumps(data))
        with pytest.raises(InvalidSurrogateError, match="version"):
            RationalSurrogate.load(path)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            RationalSurrogate.load(tmp_path / "absent.json")


class TestFitSurrogate:
    def test_recovers_exact_rational_data(self, reference, box, small_grid, nominal):
        dataset = labeled(reference, box, small_grid, 20, seed=3)
        fitted = fit_surrogate(dataset, basis_degree=1, rho_degree=1, ridge=0.0)

        report = fitted.fit_report
        assert report["n_training_samples"] == 16
        assert report["n_validation_samples"] == 4
        assert report["train_relative_rms"] < 1e-8
        assert report["validation_relative_rms"] < 1e-8
        assert report["denominator_margin"] > 0

        v = nominal.with_values(J=830.0)
        s = 1j * 2 * np.pi * 70.0
        np.testing.assert_allclose(
            fitted.evaluate(v, s), reference.evaluate(v, s), rtol=1e-7, atol=1e-9
        )

    def test_validation_split_is_seeded(self, reference, box, small_grid):
        dataset = labeled(reference, box, small_grid, 20, seed=3)
        first = fit_surrogate(dataset, basis_degree=1, rho_degree=1, validation_seed=8)
        again = fit_surrogate(dataset, basis_degree=1, rho_degree=1, validation_seed=8)
        assert first.fit_report["validation_seed"] == 8
        np.testing.assert_array_equal(first.numerator, again.numerator)

    def test_insufficient_data(self, reference, box, small_grid):
        dataset = labeled(reference, box, small_grid, 2)
        with pytest.raises(InsufficientDataError, match="observations"):
            fit_surrogate(dataset, basis_degree=1, rho_degree=1, n_fit_points=1)

    def test_negative_ridge(self, reference, box, small_grid):
        dataset = labeled(reference, box, small_grid, 10)
        with pytest.raises(ValueError, match="non-negative"):
            fit_surrogate(dataset, ridge=-1.0)

    def test_denominator_check_margin(self, reference, small_grid):
        assert check_denominator(reference, small_grid) > 0

    def test_denominator_sign_change_rejected(self, box, small_grid):
        denominator = np.array([1.0, -2.0, 0.0, 0.0, 0.0, 0.0])
        surrogate = RationalSurrogate(
            box, small_grid.points[-1], 1, 1, np.ones((4, 6)), denominator
        )
        with pytest.raises(InvalidSurrogateError, match="lattice"):
            check_denominator(surrogate, small_grid)


class TestWhiteBoxSurrogate:
    def test_matches_model(self, nominal, filter_params, omega0):
        oracle = WhiteBoxSurrogate(filter_params, omega0)
        s = 1j * 2 * np.pi * 9.0
        expected = evaluate_impedance(build_vsg_state_space(nominal, filter_params, omega0), s)
        np.testing.assert_allclose(oracle.evaluate(nominal, s), expected)

    def test_evaluation_returns_copies(self, nominal, filter_params, omega0):
        oracle = WhiteBoxSurrogate(filter_params, omega0)
        s = 1j * 30.0
        first = oracle.evaluate(nominal, s)
        first[:] = 0
        assert np.abs(oracle.evaluate(nominal, s)).max() > 0

    def test_gradient_for_requested_coordinates(self, nominal, filter_params, omega0):
        oracle = WhiteBoxSurrogate(filter_params, omega0)
        s = 1j * 2 * np.pi * 9.0
        gradient = oracle.gradient(nominal, s, ["J", "Rv"])
        assert gradient.shape == (2, 2, 2)
        h = 1e-3 * nominal.J
        coarse = (
            oracle.evaluate(nominal.with_values(J=nominal.J + h), s)
            - oracle.evaluate(nominal.with_values(J=nominal.J - h), s)
        ) / (2 * h)
        np.testing.assert_allclose(gradient[0], coarse, rtol=1e-3, atol=1e-3 * np.abs(coarse).max())

    def test_delta_is_zero_at_nominal(self, nominal, filter_params, omega0):
        oracle = WhiteBoxSurrogate(filter_params, omega0)
        np.testing.assert_array_equal(oracle.delta(nominal, nominal, 1j), np.zeros((2, 2)))


class TestAffineSurrogate:
    def test_linear_in_coordinates(self, nominal):
        slope = np.array([[1.0, 2.0], [3.0, 4.0]])
        affine = AffineSurrogate(nominal, np.eye(2), {"J": slope})
        v = nominal.with_values(J=nominal.J + 2.0)
        np.testing.assert_allclose(affine.evaluate(v, 1j), np.eye(2) + 2.0 * slope)
        np.testing.assert_allclose(affine.gradient(v, 1j, ["J", "Dp"])[0], slope)
        np.testing.assert_allclose(affine.gradient(v, 1j, ["J", "Dp"])[1], np.zeros((2, 2)))

    def test_unknown_slope_coordinate(self, nominal):
        with pytest.raises(ValueError, match="unknown coordinates"):
            AffineSurrogate(nominal, np.eye(2), {"H": np.eye(2)})
