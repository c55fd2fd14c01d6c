# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Tests for participation factors and critical-mode selection."""

from dataclasses import replace

import numpy as np
import pytest

from ibr_ard.identification.modes import (
    Mode,
    ParticipationFactor,
    participation_factor,
    select_critical_modes,
    track_mode,
)
from ibr_ard.models.interconnect import (
    assemble_interconnection,
    modal_pole_residue,
)
from ibr_ard.models.types import hz
from ibr_ard.models.vsg import build_vsg_state_space
from ibr_ard.shared.errors import UnknownModeError


@pytest.fixture
def closed_loop(nominal, filter_params, omega0, grid_equivalent):
    inverter = build_vsg_state_space(nominal, filter_params, omega0)
    return assemble_interconnection(inverter, grid_equivalent)


@pytest.fixture
def swing(closed_loop):
    return next(lam for lam in closed_loop.eigenvalues if 3.0 < hz(lam.imag) < 20.0)


class TestParticipationFactor:
    def test_is_negated_conjugate_transpose_of_residue(self, closed_loop, swing):
        modal = modal_pole_residue(closed_loop)
        factor = participation_factor(modal, swing)
        residue = modal.residues[modal.pole_index(swing)]
        np.testing.assert_allclose(factor.P, -residue.conj().T)
        assert factor.norm == pytest.approx(np.linalg.norm(residue))

    def test_pair_is_conjugate_inner_product(self):
        factor = ParticipationFactor(np.array([[1j, 0], [0, 2.0]]))
        delta_z = np.array([[1.0, 5.0], [7.0, 1j]])
        assert factor.pair(delta_z) == pytest.approx(-1j + 2j)

    def test_first_order_eigenvalue_drift(
        self, closed_loop, swing, nominal, filter_params, omega0, grid_equivalent, bases
    ):
        """A dd-entry impedance step moves the swing mode as the residue predicts.

        The remainder is quadratic: halving the step twice cuts the error by
        about four each time.
        """
        inverter = build_vsg_state_space(nominal, filter_params, omega0)
        factor = participation_factor(modal_pole_residue(closed_loop), swing)
        z_base = bases.v_base**2 / bases.s_base
        e11 = np.array([[1.0, 0.0], [0.0, 0.0]])

        def drift_error(epsilon):
            delta_z = epsilon * z_base * e11
            stepped = replace(inverter, D=inverter.D + delta_z)
            eigenvalues = assemble_interconnection(stepped, grid_equivalent).eigenvalues
            actual = eigenvalues[np.argmin(np.abs(eigenvalues - swing))] - swing
            return abs(factor.pair(delta_z) - actual), abs(actual)

        epsilon = 1e-4
        error, shift = drift_error(epsilon)
        assert error <= 0.02 * shift
        errors = [error] + [drift_error(epsilon / k)[0] for k in (2, 4)]
        assert 3.0 <= errors[0] / errors[1] <= 5.0
        assert 3.0 <= errors[1] / errors[2] <= 5.0

    def test_unknown_eigenvalue(self, closed_loop):
        modal = modal_pole_residue(closed_loop)
        with pytest.raises(UnknownModeError):
            participation_factor(modal, -1.0 + 1234.5j)


class TestModeSelection:
    def test_sorted_by_descending_real_part(self, closed_loop, swing):
        modes = select_critical_modes(modal_pole_residue(closed_loop), (1.0, 200.0), top_k=2)
        assert len(modes) == 2
        assert modes[0].lambda0.real >= modes[1].lambda0.real
        assert modes[0].lambda0 == pytest.approx(swing)
        assert [mode.mode_id for mode in modes] == ["mode0", "mode1"]
        assert all(mode.lambda0.imag > 0 for mode in modes)

    def test_top_k_limits_selection(self, closed_loop):
        modes = select_critical_modes(modal_pole_residue(closed_loop), (1.0, 200.0), top_k=1)
        assert len(modes) == 1

    def test_empty_band_is_recorded(self, closed_loop):
        modal = modal_pole_residue(closed_loop)
        assert select_critical_modes(modal, (150.0, 200.0)) == []
        assert modal.metadata["mode_selection"]["empty"] is True

    def test_invalid_band(self, closed_loop):
        with pytest.raises(ValueError, match="band"):
            select_critical_modes(modal_pole_residue(closed_loop), (50.0, 10.0))


class TestMode:
    def test_mode_properties(self):
        lam = complex(-3.0, 2 * np.pi * 4.0)
        mode = Mode(lam, ParticipationFactor(np.eye(2)), index=3)
        assert mode.frequency_hz == pytest.approx(4.0)
        assert mode.damping_ratio == pytest.approx(3.0 / abs(lam))
        assert mode.mode_id == "mode3"
        assert mode.to_dict()["lambda0"] == {"re": -3.0, "im": lam.imag}

    def test_mode_needs_positive_frequency(self):
        with pytest.raises(ValueError, match="Im > 0"):
            Mode(complex(-1.0, 0.0), ParticipationFactor(np.eye(2)))

    def test_track_mode(self):
        modes = [
            Mode(complex(-1.0, 50.0), ParticipationFactor(np.eye(2)), index=0),
            Mode(complex(-2.0, 120.0), ParticipationFactor(np.eye(2)), index=1),
        ]
        assert track_mode(modes, complex(-1.5, 121.0)).index == 1
        with pytest.raises(UnknownModeError):
            track_mode(modes, complex(-1.0, 80.0))
        with pytest.raises(UnknownModeError):
            track_mode([], complex(-1.0, 80.0))
