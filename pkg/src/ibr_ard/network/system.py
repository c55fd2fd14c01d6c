# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Multi-bus system description (topology, passive elements, IBR units)."""

import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml

from ibr_ard.models.types import Bases, FilterParameters, ParameterVector

logger = logging.getLogger(__name__)

SYSTEM_SCHEMA_VERSION = 1
BUS_TYPES = ("slack", "ibr", "passive")


@dataclass(frozen=True)
class Bus:
    id: str
    type: str

    def __post_init__(self):
        if self.type not in BUS_TYPES:
            raise ValueError(f"bus {self.id}: unknown type {self.type!r}")


@dataclass(frozen=True)
class Branch:
    from_bus: str
    to_bus: str
    R: float
    L: float

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise ValueError(f"branch {self.from_bus}-{self.to_bus} is a self loop")
        if self.R < 0 or self.L < 0 or (self.R == 0 and self.L == 0):
            raise ValueError(f"{self.name}: R, L must be non-negative and not both zero")

    @property
    def name(self) -> str:
        return f"branch {self.from_bus}-{self.to_bus}"


@dataclass(frozen=True)
class Shunt:
    """Series RL path in parallel with a capacitor, both to ground."""

    bus: str
    R: float = 0.0
    L: float = 0.0
    C: float = 0.0

    def __post_init__(self):
        if min(self.R, self.L, self.C) < 0:
            raise ValueError(f"shunt at bus {self.bus}: R, L, C must be non-negative")
        if self.R == 0 and self.L == 0 and self.C == 0:
            raise ValueError(f"shunt at bus {self.bus} has no element")

    @property
    def has_rl(self) -> bool:
        return self.R > 0 or self.L > 0

    @property
    def name(self) -> str:
        return f"shunt at bus {self.bus}"


@dataclass(frozen=True)
class IbrUnit:
    bus: str
    params: ParameterVector
    filter_params: FilterParameters
    P_rated: float

    def __post_init__(self):
        self.params.validate()
        if self.P_rated <= 0:
            raise ValueError(f"unit at bus {self.bus}: P_rated must be positive")


@dataclass
class SystemDescription:
    buses: List[Bus]
    branches: List[Branch]
    ibr_units: List[IbrUnit]
    omega0: float
    bases: Bases
    shunts: List[Shunt] = field(default_factory=list)
    name: str = "system"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Check ids, the single slack, unit placement and connectivity.

        Raises:
            ValueError: Any structural violation.
        """
        if self.omega0 <= 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        ids = [bus.id for bus in self.buses]
        if len(set(ids)) != len(ids):
            raise ValueError("bus ids must be unique")
        known = set(ids)
        slacks = [bus.id for bus in self.buses if bus.type == "slack"]
        if len(slacks) != 1:
            raise ValueError(f"system needs exactly one slack bus, found {len(slacks)}")
        for branch in self.branches:
            for end in (branch.from_bus, branch.to_bus):
                if end not in known:
                    raise ValueError(f"{branch.name} references unknown bus {end}")
        for shunt in self.shunts:
            if shunt.bus not in known:
                raise ValueError(f"{shunt.name} references an unknown bus")

        hosted: Dict[str, int] = {}
        for unit in self.ibr_units:
            if unit.bus not in known:
                raise ValueError(f"IBR unit references unknown bus {unit.bus}")
            if self.bus(unit.bus).type != "ibr":
                raise ValueError(f"IBR unit placed on non-ibr bus {unit.bus}")
            hosted[unit.bus] = hosted.get(unit.bus, 0) + 1
        for bus in self.buses:
            if bus.type == "ibr" and hosted.get(bus.id, 0) != 1:
                raise ValueError(f"ibr bus {bus.id} must host exactly one unit")

        adjacency: Dict[str, List[str]] = {bus_id: [] for bus_id in ids}
        for branch in self.branches:
            adjacency[branch.from_bus].append(branch.to_bus)
            adjacency[branch.to_bus].append(branch.from_bus)
        seen = {slacks[0]}
        queue = deque([slacks[0]])
        while queue:
            for neighbor in adjacency[queue.popleft()]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    queue.append(neighbor)
        if seen != known:
            raise ValueError(f"network is not connected; isolated buses: {sorted(known - seen)}")

    @property
    def slack(self) -> Bus:
        return next(bus for bus in self.buses if bus.type == "slack")

    @property
    def ibr_buses(self) -> List[str]:
        return [bus.id for bus in self.buses if bus.type == "ibr"]

    def bus(self, bus_id: str) -> Bus:
        for bus in self.buses:
            if bus.id == bus_id:
                return bus
        raise KeyError(f"unknown bus {bus_id}")

    def unit_at(self, bus_id: str) -> IbrUnit:
        for unit in self.ibr_units:
            if unit.bus == bus_id:
                return unit
        raise KeyError(f"no IBR unit at bus {bus_id}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": SYSTEM_SCHEMA_VERSION,
            "name": self.name,
            "omega0": self.omega0,
            "bases": {"s_base": self.bases.s_base, "v_base": self.bases.v_base},
            "buses": [{"id": bus.id, "type": bus.type} for bus in self.buses],
            "branches": [
                {"from": b.from_bus, "to": b.to_bus, "R": b.R, "L": b.L} for b in self.branches
            ],
            "shunts": [{"bus": s.bus, "R": s.R, "L": s.L, "C": s.C} for s in self.shunts],
            "ibr_units": [
                {
                    "bus": unit.bus,
                    "params": unit.params.to_dict(),
                    "filter": {"Rf": unit.filter_params.Rf, "Lf": unit.filter_params.Lf},
                    "P_rated": unit.P_rated,
                }
                for unit in self.ibr_units
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SystemDescription":
        version = data.get("version", SYSTEM_SCHEMA_VERSION)
        if version != SYSTEM_SCHEMA_VERSION:
            raise ValueError(f"unsupported system schema version {version}")
        return cls(
            name=str(data.get("name", "system")),
            omega0=float(data["omega0"]),
            bases=Bases(**data["bases"]),
            buses=[Bus(id=str(b["id"]), type=b["type"]) for b in data["buses"]],
            branches=[
                Branch(str(b["from"]), str(b["to"]), float(b["R"]), float(b["L"]))
                for b in data.get("branches", [])
            ],
            shunts=[
                Shunt(
                    str(s["bus"]),
                    float(s.get("R", 0.0)),
                    float(s.get("L", 0.0)),
                    float(s.get("C", 0.0)),
                )
                for s in data.get("shunts", [])
            ],
            ibr_units=[
                IbrUnit(
                    bus=str(u["bus"]),
                    params=ParameterVector(**u["params"]),
                    filter_params=FilterParameters(**u["filter"]),
                    P_rated=float(u["P_rated"]),
                )
                for u in data.get("ibr_units", [])
            ],
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SystemDescription":
        """Read a JSON or YAML system file."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"System file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            data: Optional[Dict[str, Any]] = yaml.safe_load(f)
        if not isinstance(data, dict):
            raise ValueError(f"system file {path} does not contain a mapping")
        return cls.from_dict(data)
