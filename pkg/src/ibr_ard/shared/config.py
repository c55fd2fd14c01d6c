# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Configuration loading and validation."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from pydantic import ValidationError

from ibr_ard.ard.attack_set import FeasibleAttackSet, StealthModel
from ibr_ard.ard.engine import AscentConfig
from ibr_ard.ard.studies import EngineConfig
from ibr_ard.models.types import Bases, FrequencyGrid
from ibr_ard.network.pipeline import AssessmentConfig, FitSettings, SurrogateSettings
from ibr_ard.network.system import SystemDescription
from ibr_ard.shared.errors import ConfigError
from ibr_ard.shared.validation import RunConfigSchema, StealthConfig, TargetConfig

logger = logging.getLogger(__name__)


def _read_mapping(path: Path, what: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse {what} {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{what.capitalize()} {path} must contain a mapping")
    return data


class Config:
    """Run configuration.

    The whole file is validated on construction, including the system
    description and every target's attack set, so commands fail before any
    computation starts.
    """

    def __init__(self, config_path: Union[str, Path], seed: Optional[int] = None):
        """Load configuration from a YAML or JSON file.

        Args:
            config_path: Path of the configuration file.
            seed: Overrides both the surrogate and the optimizer seed.

        Raises:
            FileNotFoundError: The file does not exist.
            ConfigError: The file is unreadable or invalid.
        """
        self.config_path = Path(config_path)
        if not self.config_path.exists():
            raise FileNotFoundError(
                f"Configuration file not found: {self.config_path}. "
                "Create it from config.example.yaml or run 'ibr-ard demo'."
            )
        raw_data = _read_mapping(self.config_path, "configuration file")
        if seed is not None:
            for section in ("surrogate", "optimizer"):
                if isinstance(raw_data.get(section), dict):
                    raw_data[section] = {**raw_data[section], "seed": seed}

        try:
            self.schema = RunConfigSchema(**raw_data)
        except ValidationError as e:
            logger.error("Configuration validation failed:")
            for error in e.errors():
                location = " -> ".join(str(loc) for loc in error["loc"])
                logger.error("  %s: %s", location, error["msg"])
            raise ConfigError(f"Invalid configuration in {self.config_path}") from e

        self.data: Dict[str, Any] = raw_data
        self._system = self._load_system()
        self._targets = self._build_targets()

    # ------------------------------------------------------------------ #
    # System
    # ------------------------------------------------------------------ #
    def _system_data(self) -> Dict[str, Any]:
        system = self.schema.system
        if isinstance(system, str):
            path = Path(system)
            if not path.is_absolute():
                path = self.config_path.parent / path
            if not path.exists():
                raise FileNotFoundError(f"System file not found: {path}")
            return _read_mapping(path, "system file")
        return dict(system)

    def _load_system(self) -> SystemDescription:
        data = self._system_data()
        if self.schema.bases is not None:
            bases = self.schema.bases.model_dump()
            if "bases" in data and dict(data["bases"]) != bases:
                raise ConfigError(
                    f"Invalid configuration in {self.config_path}: "
                    f"bases {bases} disagree with the system bases {data['bases']}"
                )
            data["bases"] = bases
        try:
            return SystemDescription.from_dict(data)
        except (KeyError, TypeError, ValueError) as e:
            logger.error("  system: %s", e)
            raise ConfigError(f"Invalid system description in {self.config_path}: {e}") from e

    def get_system(self) -> SystemDescription:
        return self._system

    def get_bases(self) -> Bases:
        return self._system.bases

    # ------------------------------------------------------------------ #
    # Targets and attack model
    # ------------------------------------------------------------------ #
    def _stealth_for(self, target: TargetConfig) -> StealthModel:
        stealth: StealthConfig = target.stealth or self.schema.stealth
        return StealthModel(
            eps1=stealth.eps1,
            eps2=stealth.eps2,
            bases=self.get_bases(),
            bdd_weights=stealth.bdd_weights,
            ids_weights=stealth.ids_weights,
        )

    def _build_targets(self) -> Dict[str, Tuple[FeasibleAttackSet, StealthModel]]:
        targets = {}
        for target in self.schema.targets:
            try:
                if self._system.bus(target.bus).type != "ibr":
                    raise ValueError(f"target bus {target.bus} is not an ibr bus")
                unit = self._system.unit_at(target.bus)
                omega = FeasibleAttackSet.from_privileges(
                    unit.params, self.get_bases(), target.privileges
                )
            except (KeyError, ValueError) as e:
                message = e.args[0] if isinstance(e, KeyError) else str(e)
                logger.error("  targets -> %s: %s", target.bus, message)
                raise ConfigError(f"Invalid configuration in {self.config_path}: {message}") from e
            targets[target.bus] = (omega, self._stealth_for(target))
        return targets

    def get_target_buses(self) -> List[str]:
        """Target bus ids in configuration order."""
        return list(self._targets)

    def get_targets(self) -> Dict[str, Tuple[FeasibleAttackSet, StealthModel]]:
        return dict(self._targets)

    def get_attack_set(self, bus: str) -> FeasibleAttackSet:
        return self._target(bus)[0]

    def get_stealth_model(self, bus: str) -> StealthModel:
        return self._target(bus)[1]

    def _target(self, bus: str) -> Tuple[FeasibleAttackSet, StealthModel]:
        if str(bus) not in self._targets:
            known = self.get_target_buses()
            raise ConfigError(f"bus {bus} is not a configured target; known {known}")
        return self._targets[str(bus)]

    # ------------------------------------------------------------------ #
    # Pipeline settings
    # ------------------------------------------------------------------ #
    def get_frequency_grid(self) -> FrequencyGrid:
        grid = self.schema.frequency_grid
        return FrequencyGrid.log_spaced(grid.f_low_hz, grid.f_high_hz, grid.n_points)

    def get_surrogate_settings(self) -> SurrogateSettings:
        surrogate = self.schema.surrogate
        identification = self.schema.identification
        return SurrogateSettings(
            mode=surrogate.mode,
            dataset_size=surrogate.dataset_size,
            seed=surrogate.seed,
            basis_degree=surrogate.basis_degree,
            rho_degree=surrogate.rho_degree,
            ridge=surrogate.ridge,
            n_fit_points=surrogate.n_fit_points,
            dataset_mode=identification.mode,
            era_dt=identification.era_dt,
            era_samples=identification.era_samples,
        )

    def get_fit_settings(self) -> FitSettings:
        fitting = self.schema.vector_fitting
        return FitSettings(
            n_poles=fitting.n_poles,
            n_iter=fitting.n_iter,
            weighting=fitting.weighting,
            band_hz=tuple(fitting.band_hz),
            top_k=fitting.top_k,
        )

    def get_engine_config(self, n_directions: Optional[int] = None) -> EngineConfig:
        """Engine settings; ``n_directions`` overrides the configured count."""
        optimizer = self.schema.optimizer
        return EngineConfig(
            n_samples=optimizer.n_samples,
            seed=optimizer.seed,
            n_directions=optimizer.n_directions if n_directions is None else n_directions,
            ascent=AscentConfig(
                alpha=optimizer.alpha,
                max_iter=optimizer.max_iter,
                restarts=optimizer.restarts,
                tol=optimizer.tol,
                seed=optimizer.seed,
            ),
            grid_resolution=self.schema.api.grid_resolution,
            max_workers=self.get_max_workers(),
        )

    def get_assessment_config(self, n_directions: Optional[int] = None) -> AssessmentConfig:
        return AssessmentConfig(
            grid=self.get_frequency_grid(),
            surrogate=self.get_surrogate_settings(),
            fitting=self.get_fit_settings(),
            engine=self.get_engine_config(n_directions),
            gamma=self.schema.api.gamma,
            max_workers=self.get_max_workers(),
        )

    def get_max_workers(self) -> int:
        return self.schema.max_workers

    def get_output_dir(self) -> Path:
        """Output directory, relative paths resolved against the working directory."""
        return Path(self.schema.output_dir)

    def effective_config(self) -> Dict[str, Any]:
        """Validated configuration with every default filled in and the system inlined."""
        data = self.schema.model_dump(mode="json")
        data["system"] = self._system.to_dict()
        data["bases"] = {"s_base": self.get_bases().s_base, "v_base": self.get_bases().v_base}
        return data
