# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Tests for the per-bus assessment pipeline and the bus ranking."""

import json

import numpy as np
import pytest

from ibr_ard.ard.attack_set import FeasibleAttackSet, StealthModel
from ibr_ard.ard.engine import AscentConfig
from ibr_ard.ard.studies import EngineConfig
from ibr_ard.models.interconnect import assemble_interconnection
from ibr_ard.models.types import FrequencyGrid, hz
from ibr_ard.models.vsg import build_vsg_state_space
from ibr_ard.network.pipeline import (
    AssessmentConfig,
    FitSettings,
    SurrogateSettings,
    assess_bus,
    identify_bus_modes,
    loop_impedance_for,
    pipeline_stage,
    rank_buses,
)
from ibr_ard.network.system import SystemDescription
from ibr_ard.shared.errors import StageError
from ibr_ard.shared.export import RANKING_HEADER, parse_csv_rows
from ibr_ard.surrogate.oracle import WhiteBoxSurrogate

PRIVILEGES = {"P0": 0.2, "J": 0.4, "Dp": 0.6}


def feeder_system(nominal, filter_params, omega0):
    """Two VSG units on separate RL feeders straight off the slack bus."""
    unit = {
        "params": nominal.to_dict(),
        "filter": {"Rf": filter_params.Rf, "Lf": filter_params.Lf},
        "P_rated": 1.0e6,
    }
    return SystemDescription.from_dict(
        {
            "omega0": omega0,
            "bases": {"s_base": 1.0e6, "v_base": 1000.0},
            "buses": [
                {"id": "1", "type": "slack"},
                {"id": "2", "type": "ibr"},
                {"id": "3", "type": "ibr"},
            ],
            "branches": [
                {"from": "1", "to": "2", "R": 0.03, "L": 8.0e-4},
                {"from": "1", "to": "3", "R": 0.03, "L": 8.0e-4},
            ],
            "ibr_units": [{"bus": "2", **unit}, {"bus": "3", **unit}],
        }
    )


@pytest.fixture
def system(nominal, filter_params, omega0):
    return feeder_system(nominal, filter_params, omega0)


@pytest.fixture
def cfg():
    return AssessmentConfig(
        grid=FrequencyGrid.log_spaced(1.0, 200.0, 400),
        fitting=FitSettings(n_poles=6, n_iter=20, top_k=1),
        engine=EngineConfig(
            n_samples=100,
            seed=0,
            n_directions=8,
            ascent=AscentConfig(max_iter=10, restarts=1),
            max_workers=1,
        ),
        max_workers=2,
    )


@pytest.fixture
def stealth(bases):
    return StealthModel(eps1=0.25, eps2=0.7, bases=bases)


def swing_mode(nominal, filter_params, omega0, grid_equivalent):
    loop = assemble_interconnection(
        build_vsg_state_space(nominal, filter_params, omega0), grid_equivalent
    )
    return next(lam for lam in loop.eigenvalues if 3.0 < hz(lam.imag) < 20.0)


class TestIdentifyBusModes:
    def test_swing_mode_found(self, system, cfg, nominal, filter_params, omega0, grid_equivalent):
        identified = identify_bus_modes(system, "2", cfg)
        assert len(identified.modes) == 1
        expected = swing_mode(nominal, filter_params, omega0, grid_equivalent)
        found = identified.modes[0].lambda0
        assert found.imag == pytest.approx(expected.imag, rel=0.005)
        assert found.real == pytest.approx(expected.real, rel=0.02)
        assert identified.admittance.role == "admittance"

    def test_stage_label_on_failure(self, system, cfg, isolated_log_dir):
        with pytest.raises(StageError) as excinfo:
            identify_bus_modes(system, "1", cfg)
        assert excinfo.value.stage == "thevenin"
        assert excinfo.value.category == "invalid_input"
        stages = (isolated_log_dir / "stages.log").read_text()
        assert "stage=thevenin status=failed" in stages

    def test_empty_band(self, system, cfg):
        narrow = AssessmentConfig(
            grid=cfg.grid,
            fitting=FitSettings(n_poles=6, n_iter=20, band_hz=(150.0, 200.0)),
            engine=cfg.engine,
        )
        with pytest.raises(StageError) as excinfo:
            identify_bus_modes(system, "2", narrow)
        assert excinfo.value.stage == "modes"
        assert excinfo.value.category == "unknown_mode"


class TestPipelineStage:
    def test_success_is_recorded(self, isolated_log_dir):
        with pipeline_stage("fit", "7"):
            pass
        lines = (isolated_log_dir / "stages.log").read_text().splitlines()
        assert lines == ["stage=fit status=start bus=7", "stage=fit status=ok bus=7"]

    def test_stage_errors_pass_through(self):
        inner = StageError("ard", ValueError("boom"))
        with pytest.raises(StageError) as excinfo:
            with pipeline_stage("report", "7"):
                raise inner
        assert excinfo.value is inner


class TestLoopImpedance:
    def test_vanishes_at_the_swing_mode(
        self, system, nominal, filter_params, omega0, grid_equivalent
    ):
        loop = loop_impedance_for(system, "2")
        swing = swing_mode(nominal, filter_params, omega0, grid_equivalent)
        singular_values = np.linalg.svd(loop(nominal, swing), compute_uv=False)
        assert singular_values[-1] < 1e-8 * singular_values[0]


class TestAssessBus:
    def test_report_and_artifacts(self, tmp_path, system, cfg, nominal, bases, stealth):
        omega = FeasibleAttackSet.from_privileges(nominal, bases, PRIVILEGES)
        assessment = assess_bus(system, "2", omega, stealth, cfg, out_dir=tmp_path)

        assert isinstance(assessment.surrogate, WhiteBoxSurrogate)
        report = assessment.report
        assert report.bus_id == "2"
        assert report.critical_mode == "mode0"
        assert report.bus_api > 0
        cloud = assessment.clouds["mode0"]
        assert len(cloud.boundary) == 8

        directory = tmp_path / "bus_2"
        for name in (
            "thevenin.csv",
            "admittance.csv",
            "pole_residue.json",
            "ard_mode0.csv",
            "ard_mode0.json",
            "report.json",
        ):
            assert (directory / name).exists(), name
        data = json.loads((directory / "report.json").read_text())
        assert data["critical_mode"] == "mode0"
        assert data["bus_api"] == pytest.approx(report.bus_api)

    def test_singleton_attack_gives_zero(self, system, cfg, nominal, bases, stealth):
        omega = FeasibleAttackSet.from_privileges(nominal, bases, {})
        assessment = assess_bus(system, "2", omega, stealth, cfg)
        assert assessment.report.bus_api == 0.0


class TestRankBuses:
    def test_ranking(self, tmp_path, system, cfg, nominal, bases, stealth):
        targets = {
            "2": (FeasibleAttackSet.from_privileges(nominal, bases, PRIVILEGES), stealth),
            "3": (
                FeasibleAttackSet.from_privileges(nominal, bases, PRIVILEGES).scaled(0.25),
                stealth,
            ),
        }
        report = rank_buses(system, targets, cfg, out_dir=tmp_path)

        assert sorted(report.order) == ["2", "3"]
        api = [report.assessments[bus].report.bus_api for bus in report.order]
        assert api == sorted(api, reverse=True)
        assert report.scr["2"] == pytest.approx(report.scr["3"])
        assert report.discordant_pairs == []

        rows = parse_csv_rows(report.to_csv(), RANKING_HEADER)
        assert [row[0] for row in rows] == report.order
        assert report.to_dict()["order"] == report.order

    def test_needs_targets(self, system, cfg):
        with pytest.raises(ValueError, match="at least one target"):
            rank_buses(system, {}, cfg)


class TestSettings:
    def test_unknown_surrogate_mode(self):
        with pytest.raises(ValueError, match="surrogate mode"):
            SurrogateSettings(mode="neural")
