# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Tests for the dq-frame VSG model, interconnection and eigenvalue oracle."""

import numpy as np
import pytest

from ibr_ard.models.interconnect import (
    assemble_interconnection,
    dominant_frequency,
    evaluate_impedance,
    impedance_spectrum,
    linear_response,
    modal_pole_residue,
)
from ibr_ard.models.types import (
    Bases,
    FrequencyGrid,
    ImpedanceSpectrum,
    ParameterVector,
    StateSpaceModel,
    hz,
    rl_block,
)
from ibr_ard.models.vsg import build_vsg_state_space, solve_steady_state
from ibr_ard.shared.errors import (
    AssemblyError,
    InfeasibleOperatingPointError,
    NearSingularEvaluationError,
)


class TestTypes:
    def test_bases(self):
        bases = Bases(s_base=1.0e6, v_base=1000.0)
        assert bases.z_base == pytest.approx(1.0)
        assert bases.i_base == pytest.approx(1000.0)

    def test_bases_reject_non_positive(self):
        with pytest.raises(ValueError, match="positive"):
            Bases(s_base=0.0, v_base=1.0)

    def test_frequency_grid_needs_eight_points(self):
        with pytest.raises(ValueError, match="at least 8"):
            FrequencyGrid(np.arange(1.0, 5.0))

    def test_frequency_grid_must_increase(self):
        points = np.linspace(1.0, 10.0, 10)
        points[5] = points[4]
        with pytest.raises(ValueError, match="strictly increasing"):
            FrequencyGrid(points)

    def test_log_spaced_band(self):
        grid = FrequencyGrid.log_spaced(2.0, 50.0, 30)
        low, high = grid.band_hz
        assert len(grid) == 30
        assert low == pytest.approx(2.0)
        assert high == pytest.approx(50.0)
        np.testing.assert_allclose(grid.s, 1j * grid.points)

    def test_grid_subset_keeps_edges(self):
        grid = FrequencyGrid.log_spaced(1.0, 100.0, 50)
        subset = grid.subset(10)
        assert len(subset) == 10
        assert subset.points[0] == grid.points[0]
        assert subset.points[-1] == grid.points[-1]

    def test_spectrum_shape_checked(self, small_grid):
        with pytest.raises(ValueError, match="shape"):
            ImpedanceSpectrum(small_grid, np.zeros((3, 2, 2)))

    def test_parameter_vector_validation(self, nominal):
        with pytest.raises(ValueError, match="J must be positive"):
            nominal.with_values(J=0.0).validate()
        with pytest.raises(ValueError, match="tau_q"):
            nominal.with_values(tau_q=-1.0).validate()

    def test_parameter_vector_array_order(self, nominal):
        values = nominal.to_array()
        assert values[0] == nominal.P0
        assert ParameterVector.from_array(values) == nominal

    def test_rl_block_at_synchronous_frequency(self, omega0):
        block = rl_block(0.1, 1e-3, omega0, 0j)
        expected = np.array([[0.1, -omega0 * 1e-3], [omega0 * 1e-3, 0.1]])
        np.testing.assert_allclose(block, expected)


class TestVsgModel:
    def test_steady_state_matches_branch_equation(self, nominal, filter_params, omega0):
        ss = solve_steady_state(nominal, filter_params, omega0)
        z = complex(filter_params.Rf, omega0 * filter_params.Lf)
        current = complex(nominal.P0, -nominal.Q0) / nominal.V0
        emf = ss.E0 * np.exp(1j * ss.delta0)
        assert emf == pytest.approx(nominal.V0 + z * current, rel=1e-8)
        assert ss.I0d == pytest.approx(nominal.P0 / nominal.V0)
        assert ss.I0q == pytest.approx(-nominal.Q0 / nominal.V0)

    def test_infeasible_operating_point(self, nominal, filter_params, omega0):
        # Q0 so negative that the EMF would sit beyond the static limit
        beyond = nominal.with_values(Q0=-3.0e7)
        with pytest.raises(InfeasibleOperatingPointError):
            build_vsg_state_space(beyond, filter_params, omega0)

    def test_model_dimensions(self, nominal, filter_params, omega0):
        model = build_vsg_state_space(nominal, filter_params, omega0)
        assert model.n_states == 3
        assert model.n_inputs == 2
        assert model.n_outputs == 2
        assert model.state_labels == ("delta", "omega", "E")
        np.testing.assert_allclose(model.E, filter_params.Lf * np.eye(2))

    def test_high_frequency_asymptote_is_series_inductance(
        self, nominal, filter_params, omega0
    ):
        v = nominal.with_values(Lv=1.0e-4, Rv=0.01)
        model = build_vsg_state_space(v, filter_params, omega0)
        s = 1j * 1.0e7
        z = evaluate_impedance(model, s)
        inductance = (v.Lv + filter_params.Lf) * np.eye(2)
        np.testing.assert_allclose(z / s, inductance, rtol=1e-3, atol=1e-7)

    def test_spectrum_on_grid(self, nominal, filter_params, omega0, small_grid):
        model = build_vsg_state_space(nominal, filter_params, omega0)
        spectrum = impedance_spectrum(model, small_grid)
        assert spectrum.values.shape == (len(small_grid), 2, 2)
        np.testing.assert_allclose(spectrum.values[7], evaluate_impedance(model, small_grid.s[7]))


class TestInterconnection:
    def test_closed_loop_is_stable_with_swing_mode(
        self, nominal, filter_params, omega0, grid_equivalent
    ):
        inverter = build_vsg_state_space(nominal, filter_params, omega0)
        loop = assemble_interconnection(inverter, grid_equivalent)
        assert loop.n_states == inverter.n_states + 2
        eigenvalues = loop.eigenvalues
        assert np.all(eigenvalues.real < 0)
        swing = [lam for lam in eigenvalues if 3.0 < hz(lam.imag) < 20.0]
        assert swing

    def test_transfer_is_inverse_of_loop_impedance(
        self, nominal, filter_params, omega0, grid_equivalent
    ):
        inverter = build_vsg_state_space(nominal, filter_params, omega0)
        loop = assemble_interconnection(inverter, grid_equivalent)
        s = 1j * 2 * np.pi * 10.0
        expected = np.linalg.inv(evaluate_impedance(inverter, s) + grid_equivalent.impedance(s))
        np.testing.assert_allclose(evaluate_impedance(loop, s), expected, rtol=1e-8)

    def test_modal_pole_residue_reproduces_transfer(
        self, nominal, filter_params, omega0, grid_equivalent
    ):
        inverter = build_vsg_state_space(nominal, filter_params, omega0)
        loop = assemble_interconnection(inverter, grid_equivalent)
        modal = modal_pole_residue(loop)
        s = 1j * 2 * np.pi * 33.0
        np.testing.assert_allclose(modal.evaluate(s), evaluate_impedance(loop, s), rtol=1e-7)

    def test_algebraic_loop_rejected(self):
        static = StateSpaceModel(
            A=np.zeros((0, 0)), B=np.zeros((0, 2)), C=np.zeros((2, 0)), D=np.eye(2)
        )
        with pytest.raises(AssemblyError, match="algebraic"):
            assemble_interconnection(static, static)

    def test_evaluation_at_eigenvalue_rejected(self):
        model = StateSpaceModel(
            A=[[-1.0]], B=[[1.0, 0.0]], C=[[1.0], [0.0]], D=np.zeros((2, 2))
        )
        with pytest.raises(NearSingularEvaluationError):
            evaluate_impedance(model, -1.0 + 0j)


class TestTimeResponse:
    def test_dominant_frequency_of_damped_oscillator(self):
        w = 2 * np.pi * 10.0
        model = StateSpaceModel(
            A=[[-0.5, w], [-w, -0.5]], B=np.zeros((2, 2)), C=np.eye(2), D=np.zeros((2, 2))
        )
        response = linear_response(model, np.array([1.0, 0.0]), t_end=4.0, dt=1e-3)
        assert response.y.shape == (4001, 2)
        assert dominant_frequency(response) == pytest.approx(10.0, abs=0.5)

    def test_response_rejects_bad_step(self):
        model = StateSpaceModel(A=[[-1.0]], B=[[0.0, 0.0]], C=[[1.0], [0.0]], D=np.zeros((2, 2)))
        with pytest.raises(ValueError, match="dt"):
            linear_response(model, np.array([1.0]), t_end=1.0, dt=0.0)
