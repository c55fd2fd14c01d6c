# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Shipped demo configurations.

Every unit sits on its own RL feeder off the slack bus, so the Thevenin
impedance of a target bus is its feeder. Each bus keeps two critical modes:
the swing mode near 10 Hz and the feeder mode near the synchronous frequency.

``four_bus_config``: two VSG buses and a passive load bus. Bus 2 carries wide
reactive-loop privileges and its feeder mode can be pushed across the
imaginary axis; bus 3 only erodes margin.

``multi_bus_config``: four VSG buses of decreasing grid strength plus a load
bus. Privileges shrink as the connection gets weaker, so the API ranking
runs against the short-circuit-ratio ranking.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

OMEGA0 = 376.99111843077515
BASES = {"s_base": 1.0e6, "v_base": 1000.0}

VSG_CONTROL = {"J": 800.0, "Dp": 8000.0, "Kq": 5.0e-4, "tau_q": 0.05, "Rv": 0.0, "Lv": 0.0}
VSG_FILTER = {"Rf": 0.005, "Lf": 2.5e-4}

DEMO_CONFIG_NAMES = ("demo_4bus", "demo_multibus")

# (bus, R, L) of the feeders, strongest connection first
MULTI_BUS_FEEDERS = (
    ("3", 0.017, 3.0e-4),
    ("4", 0.025, 4.5e-4),
    ("5", 0.035, 7.0e-4),
    ("6", 0.045, 1.0e-3),
)
MULTI_BUS_SCALES = {"3": 1.0, "4": 0.6, "5": 0.3, "6": 0.1}


def _unit(bus: str, P0: float, Q0: float, V0: float = 1000.0) -> Dict[str, Any]:
    return {
        "bus": bus,
        "params": {"P0": P0, "Q0": Q0, "V0": V0, **VSG_CONTROL},
        "filter": dict(VSG_FILTER),
        "P_rated": 1.0e6,
    }


def _branch(from_bus: str, to_bus: str, R: float, L: float) -> Dict[str, Any]:
    return {"from": from_bus, "to": to_bus, "R": R, "L": L}


def _privileges(reactive: float, scale: float = 1.0) -> Dict[str, float]:
    """Operating-point and swing privileges plus ``reactive`` on Kq and tau_q."""
    base = {"P0": 0.2, "Q0": 0.1, "V0": 0.03, "J": 0.2, "Dp": 0.3}
    privileges = {name: width * scale for name, width in base.items()}
    privileges["Kq"] = reactive * scale
    privileges["tau_q"] = reactive * scale
    return privileges


def _common(seed: int, output_dir: str) -> Dict[str, Any]:
    return {
        "frequency_grid": {"f_low_hz": 1.0, "f_high_hz": 200.0, "n_points": 400},
        "stealth": {"eps1": 0.25, "eps2": 0.6},
        "surrogate": {"mode": "whitebox_oracle", "dataset_size": 200, "seed": seed},
        "identification": {"mode": "direct"},
        "vector_fitting": {"n_poles": 6, "n_iter": 12, "band_hz": [1.0, 200.0], "top_k": 2},
        "optimizer": {
            "n_samples": 1000,
            "seed": seed,
            "n_directions": 16,
            "alpha": 0.05,
            "max_iter": 40,
            "restarts": 3,
        },
        "api": {"grid_resolution": 200, "gamma": 0.1},
        "output_dir": output_dir,
        "max_workers": 4,
    }


def four_bus_system() -> Dict[str, Any]:
    return {
        "name": "demo-4bus",
        "omega0": OMEGA0,
        "bases": dict(BASES),
        "buses": [
            {"id": "1", "type": "slack"},
            {"id": "2", "type": "ibr"},
            {"id": "3", "type": "ibr"},
            {"id": "4", "type": "passive"},
        ],
        "branches": [
            _branch("1", "2", 0.02, 3.5e-4),
            _branch("1", "3", 0.04, 5.5e-4),
            _branch("1", "4", 0.01, 5.0e-4),
        ],
        "shunts": [{"bus": "4", "R": 2.0, "C": 2.0e-5}],
        "ibr_units": [_unit("2", 5.0e5, 1.0e5), _unit("3", 4.0e5, 5.0e4)],
    }


def four_bus_config(seed: int = 0, output_dir: str = "output/demo_4bus") -> Dict[str, Any]:
    return {
        "system": four_bus_system(),
        "targets": [
            {"bus": "2", "privileges": _privileges(0.5)},
            {"bus": "3", "privileges": _privileges(0.2)},
        ],
        **_common(seed, output_dir),
    }


def multi_bus_system() -> Dict[str, Any]:
    return {
        "name": "demo-multibus",
        "omega0": OMEGA0,
        "bases": dict(BASES),
        "buses": [{"id": "1", "type": "slack"}, {"id": "2", "type": "passive"}]
        + [{"id": bus, "type": "ibr"} for bus, _, _ in MULTI_BUS_FEEDERS],
        "branches": [_branch("1", "2", 0.01, 4.0e-4)]
        + [_branch("1", bus, R, L) for bus, R, L in MULTI_BUS_FEEDERS],
        "shunts": [{"bus": "2", "R": 1.0, "C": 3.0e-5}],
        "ibr_units": [_unit(bus, 4.0e5, 5.0e4) for bus, _, _ in MULTI_BUS_FEEDERS],
    }


def multi_bus_config(seed: int = 0, output_dir: str = "output/demo_multibus") -> Dict[str, Any]:
    targets: List[Dict[str, Any]] = [
        {"bus": bus, "privileges": _privileges(0.15, scale)}
        for bus, scale in MULTI_BUS_SCALES.items()
    ]
    return {"system": multi_bus_system(), "targets": targets, **_common(seed, output_dir)}


def demo_configs(seed: int = 0, output_root: str = "output") -> Dict[str, Dict[str, Any]]:
    return {
        "demo_4bus": four_bus_config(seed, f"{output_root}/demo_4bus"),
        "demo_multibus": multi_bus_config(seed, f"{output_root}/demo_multibus"),
    }


def write_demo_configs(
    directory: Path, seed: int = 0, output_root: Optional[str] = None
) -> Dict[str, Path]:
    """Write the demo configurations as YAML files and return their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    root = output_root if output_root is not None else str(directory.parent)
    paths = {}
    for name, config in demo_configs(seed, root).items():
        path = directory / f"{name}.yaml"
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(config, f, sort_keys=False)
        paths[name] = path
    return paths
