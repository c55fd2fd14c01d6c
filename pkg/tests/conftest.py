# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Shared fixtures: a single VSG behind an RL grid and small frequency grids."""

import numpy as np
import pytest

from ibr_ard.models.types import (
    Bases,
    FilterParameters,
    FrequencyGrid,
    GridEquivalent,
    ParameterVector,
)
from ibr_ard.shared.debug import LOG_DIR_ENV

OMEGA0 = 2 * np.pi * 60


@pytest.fixture(autouse=True)
def isolated_log_dir(tmp_path, monkeypatch):
    """Keep debug and stage logs inside the test's temporary directory."""
    log_dir = tmp_path / "logs"
    monkeypatch.setenv(LOG_DIR_ENV, str(log_dir))
    return log_dir


@pytest.fixture
def omega0():
    return OMEGA0


@pytest.fixture
def bases():
    return Bases(s_base=1.0e6, v_base=1000.0)


@pytest.fixture
def nominal():
    return ParameterVector(
        P0=5.0e5, Q0=1.0e5, V0=1000.0, J=800.0, Dp=8000.0, Kq=5.0e-4, tau_q=0.05
    )


@pytest.fixture
def filter_params():
    return FilterParameters(Rf=0.005, Lf=2.5e-4)


@pytest.fixture
def grid_equivalent():
    return GridEquivalent(Rg=0.03, Lg=8.0e-4, omega0=OMEGA0)


@pytest.fixture
def small_grid():
    return FrequencyGrid.log_spaced(1.0, 200.0, 120)


RUN_CONFIG = """
system:
  name: feeders
  omega0: 376.99111843077515
  bases:
    s_base: 1000000.0
    v_base: 1000.0
  buses:
    - {id: "1", type: slack}
    - {id: "2", type: ibr}
    - {id: "3", type: ibr}
  branches:
    - {from: "1", to: "2", R: 0.03, L: 0.0008}
    - {from: "1", to: "3", R: 0.03, L: 0.0008}
  ibr_units:
    - bus: "2"
      params: {P0: 500000.0, Q0: 100000.0, V0: 1000.0, J: 800.0, Dp: 8000.0,
               Kq: 0.0005, tau_q: 0.05}
      filter: {Rf: 0.005, Lf: 0.00025}
      P_rated: 1000000.0
    - bus: "3"
      params: {P0: 500000.0, Q0: 100000.0, V0: 1000.0, J: 800.0, Dp: 8000.0,
               Kq: 0.0005, tau_q: 0.05}
      filter: {Rf: 0.005, Lf: 0.00025}
      P_rated: 1000000.0

frequency_grid:
  f_low_hz: 1.0
  f_high_hz: 200.0
  n_points: 400

targets:
  - bus: "2"
    privileges: {P0: 0.2, J: 0.4, Dp: 0.6}
  - bus: "3"
    privileges: {P0: 0.05, J: 0.1, Dp: 0.15}

stealth:
  eps1: 0.25
  eps2: 0.7

surrogate:
  mode: whitebox_oracle
  dataset_size: 2
  seed: 0
  basis_degree: 1
  rho_degree: 1

identification:
  mode: direct
  era_dt: 0.0001
  era_samples: 2048

vector_fitting:
  n_poles: 6
  n_iter: 20
  top_k: 1

optimizer:
  n_samples: 100
  seed: 0
  n_directions: 8
  max_iter: 10
  restarts: 1

output_dir: output
max_workers: 2
"""


@pytest.fixture
def config_text():
    """Run configuration for two VSG feeders off one slack bus."""
    return RUN_CONFIG


@pytest.fixture
def config_path(tmp_path, config_text):
    path = tmp_path / "config.yaml"
    path.write_text(config_text)
    return path
