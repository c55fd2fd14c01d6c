# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Tests for the system description, nodal admittance and Thevenin reduction."""

import numpy as np
import pytest
import yaml

from ibr_ard.models.types import FrequencyGrid, rl_block
from ibr_ard.network.reduction import (
    bus_index,
    capacitor_admittance,
    kron_reduce,
    nodal_admittance,
    rl_equivalent,
    scr_proxy,
    thevenin_at,
    thevenin_impedance,
)
from ibr_ard.network.system import SystemDescription
from ibr_ard.shared.errors import NearResonanceError
from ibr_ard.shared.export import parse_spectrum_csv

OMEGA0 = 2 * np.pi * 60
VSG = {
    "params": {
        "P0": 5.0e5,
        "Q0": 1.0e5,
        "V0": 1000.0,
        "J": 800.0,
        "Dp": 8000.0,
        "Kq": 5.0e-4,
        "tau_q": 0.05,
    },
    "filter": {"Rf": 0.005, "Lf": 2.5e-4},
    "P_rated": 1.0e6,
}


def system_data(branches, buses=None, shunts=None, units=("2",)):
    return {
        "name": "test",
        "omega0": OMEGA0,
        "bases": {"s_base": 1.0e6, "v_base": 1000.0},
        "buses": buses or [{"id": "1", "type": "slack"}, {"id": "2", "type": "ibr"}],
        "branches": [{"from": a, "to": b, "R": R, "L": L} for a, b, R, L in branches],
        "shunts": shunts or [],
        "ibr_units": [{"bus": bus, **VSG} for bus in units],
    }


@pytest.fixture
def radial():
    return SystemDescription.from_dict(system_data([("1", "2", 0.03, 8.0e-4)]))


@pytest.fixture
def through_passive_bus():
    buses = [
        {"id": "1", "type": "slack"},
        {"id": "2", "type": "ibr"},
        {"id": "3", "type": "ibr"},
        {"id": "4", "type": "passive"},
    ]
    branches = [("1", "4", 0.01, 5.0e-4), ("4", "2", 0.02, 2.0e-4), ("4", "3", 0.04, 4.0e-4)]
    return SystemDescription.from_dict(system_data(branches, buses, units=("2", "3")))


class TestSystemDescription:
    def test_round_trip(self, radial):
        again = SystemDescription.from_dict(radial.to_dict())
        assert again.to_dict() == radial.to_dict()
        assert again.ibr_buses == ["2"]
        assert again.slack.id == "1"

    def test_load_yaml(self, tmp_path, radial):
        path = tmp_path / "system.yaml"
        path.write_text(yaml.safe_dump(radial.to_dict()))
        assert SystemDescription.load(path).to_dict() == radial.to_dict()

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="System file not found"):
            SystemDescription.load(tmp_path / "absent.yaml")

    def test_unsupported_version(self, radial):
        data = radial.to_dict()
        data["version"] = 7
        with pytest.raises(ValueError, match="schema version"):
            SystemDescription.from_dict(data)

    def test_needs_one_slack(self):
        buses = [{"id": "1", "type": "ibr"}, {"id": "2", "type": "ibr"}]
        with pytest.raises(ValueError, match="exactly one slack"):
            SystemDescription.from_dict(
                system_data([("1", "2", 0.03, 8.0e-4)], buses, units=("1", "2"))
            )

    def test_disconnected_bus(self):
        buses = [
            {"id": "1", "type": "slack"},
            {"id": "2", "type": "ibr"},
            {"id": "3", "type": "passive"},
        ]
        with pytest.raises(ValueError, match="not connected"):
            SystemDescription.from_dict(system_data([("1", "2", 0.03, 8.0e-4)], buses))

    def test_ibr_bus_needs_unit(self):
        with pytest.raises(ValueError, match="exactly one unit"):
            SystemDescription.from_dict(system_data([("1", "2", 0.03, 8.0e-4)], units=()))

    def test_unit_on_passive_bus(self):
        buses = [{"id": "1", "type": "slack"}, {"id": "2", "type": "passive"}]
        with pytest.raises(ValueError, match="non-ibr bus"):
            SystemDescription.from_dict(system_data([("1", "2", 0.03, 8.0e-4)], buses))

    def test_branch_validation(self):
        with pytest.raises(ValueError, match="self loop"):
            SystemDescription.from_dict(system_data([("2", "2", 0.03, 8.0e-4)]))
        with pytest.raises(ValueError, match="not both zero"):
            SystemDescription.from_dict(system_data([("1", "2", 0.0, 0.0)]))

    def test_unknown_bus_type(self):
        buses = [{"id": "1", "type": "slack"}, {"id": "2", "type": "load"}]
        with pytest.raises(ValueError, match="unknown type"):
            SystemDescription.from_dict(system_data([("1", "2", 0.03, 8.0e-4)], buses, units=()))

    def test_lookup_errors(self, radial):
        with pytest.raises(KeyError):
            radial.bus("9")
        with pytest.raises(KeyError):
            radial.unit_at("1")


class TestNodalAdmittance:
    def test_slack_is_eliminated(self, through_passive_bus):
        Y, order = nodal_admittance(through_passive_bus, 1j * 50.0)
        assert order == bus_index(through_passive_bus) == ["2", "3", "4"]
        assert Y.shape == (6, 6)

    def test_passive_blocks(self, through_passive_bus):
        s = 1j * 2 * np.pi * 30.0
        Y, _ = nodal_admittance(through_passive_bus, s, include_units=False)
        y_42 = np.linalg.inv(rl_block(0.02, 2.0e-4, OMEGA0, s))
        np.testing.assert_allclose(Y[0:2, 0:2], y_42)
        np.testing.assert_allclose(Y[0:2, 4:6], -y_42)
        np.testing.assert_allclose(Y[2:4, 0:2], np.zeros((2, 2)))

    def test_capacitor_shunt(self):
        buses = [{"id": "1", "type": "slack"}, {"id": "2", "type": "ibr"}]
        sys = SystemDescription.from_dict(
            system_data([("1", "2", 0.03, 8.0e-4)], buses, shunts=[{"bus": "2", "C": 2.0e-5}])
        )
        s = 1j * 100.0
        Y, _ = nodal_admittance(sys, s, include_units=False)
        expected = np.linalg.inv(rl_block(0.03, 8.0e-4, OMEGA0, s)) + capacitor_admittance(
            2.0e-5, OMEGA0, s
        )
        np.testing.assert_allclose(Y, expected)


class TestKronReduce:
    def test_single_block_is_returned(self):
        block = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
        np.testing.assert_array_equal(kron_reduce(block, 0), block)

    def test_singular_elimination(self):
        Y = np.zeros((4, 4), dtype=complex)
        Y[:2, :2] = np.eye(2)
        Y[2:, 2:] = 1.0
        with pytest.raises(NearResonanceError) as excinfo:
            kron_reduce(Y, 0, omega=12.0)
        assert excinfo.value.omega == 12.0


class TestThevenin:
    def test_radial_feeder(self, radial):
        s = 1j * 2 * np.pi * 17.0
        np.testing.assert_allclose(
            thevenin_impedance(radial, "2", s), rl_block(0.03, 8.0e-4, OMEGA0, s)
        )

    def test_series_branches_add(self, through_passive_bus):
        s = 1j * 2 * np.pi * 9.0
        expected = rl_block(0.01, 5.0e-4, OMEGA0, s) + rl_block(0.02, 2.0e-4, OMEGA0, s)
        z_th = thevenin_impedance(through_passive_bus, "2", s, include_units=False)
        np.testing.assert_allclose(z_th, expected, rtol=1e-10)

    def test_neighbouring_unit_changes_impedance(self, through_passive_bus):
        s = 1j * 2 * np.pi * 9.0
        passive = thevenin_impedance(through_passive_bus, "2", s, include_units=False)
        loaded = thevenin_impedance(through_passive_bus, "2", s)
        assert not np.allclose(passive, loaded)

    def test_only_ibr_buses(self, through_passive_bus):
        with pytest.raises(ValueError, match="not an ibr bus"):
            thevenin_impedance(through_passive_bus, "4", 1j)

    def test_spectrum_and_csv(self, radial):
        grid = FrequencyGrid.log_spaced(1.0, 200.0, 16)
        equivalent = thevenin_at(radial, "2", grid, max_workers=2)
        assert equivalent.bus_id == "2"
        expected = np.stack([rl_block(0.03, 8.0e-4, OMEGA0, s) for s in grid.s])
        np.testing.assert_allclose(equivalent.spectrum.values, expected)
        parsed = parse_spectrum_csv(equivalent.to_csv())
        np.testing.assert_array_equal(parsed.values, equivalent.spectrum.values)


class TestScrProxy:
    def test_radial_value(self, radial):
        magnitude = np.hypot(0.03, OMEGA0 * 8.0e-4)
        assert scr_proxy(radial, "2") == pytest.approx(1.0e6 / magnitude / 1.0e6)

    def test_weaker_connection_has_lower_scr(self, through_passive_bus):
        assert scr_proxy(through_passive_bus, "3") < scr_proxy(through_passive_bus, "2")


class TestRlEquivalent:
    def test_radial_feeder(self, radial):
        equivalent = rl_equivalent(radial, "2")
        assert equivalent.Rg == pytest.approx(0.03)
        assert equivalent.Lg == pytest.approx(8.0e-4)
        assert equivalent.omega0 == OMEGA0

    def test_series_path_through_passive_bus(self, through_passive_bus):
        equivalent = rl_equivalent(through_passive_bus, "3")
        assert equivalent.Rg == pytest.approx(0.05)
        assert equivalent.Lg == pytest.approx(9.0e-4)
