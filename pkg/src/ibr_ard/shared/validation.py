# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Run configuration validation using Pydantic models."""

from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ibr_ard.ard.engine import MIN_CLOUD_SAMPLES, MIN_DIRECTIONS
from ibr_ard.models.types import COORDINATES, RHO_COORDINATES, X_OP_COORDINATES

SURROGATE_MODES = ("whitebox_oracle", "rational_fit")
IDENTIFICATION_MODES = ("direct", "via_era")
WEIGHTINGS = ("uniform", "inverse_magnitude")


class StrictModel(BaseModel):
    """Base model rejecting unknown keys so typos fail validation."""

    model_config = ConfigDict(extra="forbid")


class BasesConfig(StrictModel):
    s_base: float = Field(gt=0)
    v_base: float = Field(gt=0)


class FrequencyGridConfig(StrictModel):
    """Log-spaced grid between two frequencies in Hz."""

    f_low_hz: float = 1.0
    f_high_hz: float = 200.0
    n_points: int = 400

    @field_validator("n_points")
    @classmethod
    def validate_n_points(cls, v: int) -> int:
        if v < 8:
            raise ValueError(f"n_points must be at least 8, got {v}")
        return v

    @model_validator(mode="after")
    def validate_band(self) -> "FrequencyGridConfig":
        if not 0 < self.f_low_hz < self.f_high_hz:
            raise ValueError(
                f"frequency band must satisfy 0 < f_low_hz < f_high_hz, "
                f"got [{self.f_low_hz}, {self.f_high_hz}]"
            )
        return self


class StealthConfig(StrictModel):
    """BDD bound on operating-point deviation, IDS bound on parameter change."""

    eps1: float = Field(gt=0)
    eps2: float = Field(gt=0)
    bdd_weights: Dict[str, float] = Field(default_factory=dict)
    ids_weights: Dict[str, float] = Field(default_factory=dict)

    @field_validator("bdd_weights")
    @classmethod
    def validate_bdd_weights(cls, v: Dict[str, float]) -> Dict[str, float]:
        return _check_weights(v, X_OP_COORDINATES, "bdd_weights")

    @field_validator("ids_weights")
    @classmethod
    def validate_ids_weights(cls, v: Dict[str, float]) -> Dict[str, float]:
        return _check_weights(v, RHO_COORDINATES, "ids_weights")


def _check_weights(
    weights: Dict[str, float], allowed: Tuple[str, ...], field_name: str
) -> Dict[str, float]:
    unknown = sorted(set(weights) - set(allowed))
    if unknown:
        raise ValueError(f"{field_name} has unknown coordinates {unknown}; allowed {list(allowed)}")
    if any(w < 0 for w in weights.values()):
        raise ValueError(f"{field_name} must be non-negative")
    return weights


class TargetConfig(StrictModel):
    """One assessed bus with its attack privileges.

    ``privileges`` maps a coordinate to its half width: per unit for
    ``P0``/``Q0``/``V0``, relative to nominal for control parameters.
    """

    bus: str
    privileges: Dict[str, float] = Field(default_factory=dict)
    stealth: Optional[StealthConfig] = None

    @field_validator("bus", mode="before")
    @classmethod
    def validate_bus(cls, v: Any) -> str:
        if v is None or not str(v).strip():
            raise ValueError("target bus must not be empty")
        return str(v)

    @field_validator("privileges")
    @classmethod
    def validate_privileges(cls, v: Dict[str, float]) -> Dict[str, float]:
        unknown = sorted(set(v) - set(COORDINATES))
        if unknown:
            raise ValueError(f"unknown privilege coordinates {unknown}")
        negative = sorted(name for name, width in v.items() if width < 0)
        if negative:
            raise ValueError(f"privilege half widths must be non-negative: {negative}")
        return v


class SurrogateConfig(StrictModel):
    mode: str = "whitebox_oracle"
    dataset_size: int = 200
    seed: int
    basis_degree: int = 2
    rho_degree: int = 2
    ridge: float = Field(default=1e-9, ge=0)
    n_fit_points: int = 24

    @field_validator("mode")
    @classmethod
    def validate_mode(cls, v: str) -> str:
        if v not in SURROGATE_MODES:
            raise ValueError(f"surrogate mode must be one of {list(SURROGATE_MODES)}, got {v!r}")
        return v

    @field_validator("dataset_size")
    @classmethod
    def validate_dataset_size(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"dataset_size must be positive, got {v}")
        return v

    @field_validator("basis_degree", "rho_degree")
    @classmethod
    def validate_degree(cls, v: int) -> int:
        if not 0 <= v <= 4:
            raise ValueError(f"polynomial degree must be between 0 and 4, got {v}")
        return v

    @field_validator("n_fit_points")
    @classmethod
    def validate_fit_points(cls, v: int) -> int:
        if v < 2:
            raise ValueError(f"n_fit_points must be at least 2, got {v}")
        return v


class IdentificationConfig(StrictModel):
    """How labelled spectra and the nominal admittance are produced."""

    mode: str = "direct"
    era_dt: float = Field(default=1e-3, gt=0)
    era_samples: int = 1024

    @field_validator("mode")
    @classmethod
    def validate_mode(cls, v: str) -> str:
        if v not in IDENTIFICATION_MODES:
            raise ValueError(
                f"identification mode must be one of {list(IDENTIFICATION_MODES)}, got {v!r}"
            )
        return v

    @field_validator("era_samples")
    @classmethod
    def validate_era_samples(cls, v: int) -> int:
        if v < 16:
            raise ValueError(f"era_samples must be at least 16, got {v}")
        return v


class VectorFittingConfig(StrictModel):
    n_poles: int = 12
    n_iter: int = 10
    weighting: str = "uniform"
    band_hz: Tuple[float, float] = (1.0, 200.0)
    top_k: int = 2

    @field_validator("n_poles")
    @classmethod
    def validate_n_poles(cls, v: int) -> int:
        if v < 2 or v % 2:
            raise ValueError(f"n_poles must be an even number of at least 2, got {v}")
        return v

    @field_validator("n_iter", "top_k")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"value must be positive, got {v}")
        return v

    @field_validator("weighting")
    @classmethod
    def validate_weighting(cls, v: str) -> str:
        if v not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {list(WEIGHTINGS)}, got {v!r}")
        return v

    @field_validator("band_hz")
    @classmethod
    def validate_band(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if not 0 <= v[0] < v[1]:
            raise ValueError(f"band_hz must satisfy 0 <= low < high, got {list(v)}")
        return v


class OptimizerConfig(StrictModel):
    """Cloud sampling and boundary ascent settings."""

    n_samples: int = 2000
    seed: int
    n_directions: int = 32
    alpha: float = Field(default=0.05, gt=0)
    max_iter: int = 200
    restarts: int = 8
    tol: float = Field(default=1e-9, gt=0)

    @field_validator("n_samples")
    @classmethod
    def validate_n_samples(cls, v: int) -> int:
        if v < MIN_CLOUD_SAMPLES:
            raise ValueError(f"n_samples must be at least {MIN_CLOUD_SAMPLES}, got {v}")
        return v

    @field_validator("n_directions")
    @classmethod
    def validate_n_directions(cls, v: int) -> int:
        if v < MIN_DIRECTIONS:
            raise ValueError(f"n_directions must be at least {MIN_DIRECTIONS}, got {v}")
        return v

    @field_validator("max_iter", "restarts")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"value must be positive, got {v}")
        return v


class ApiConfig(StrictModel):
    grid_resolution: int = 200
    gamma: float = Field(default=0.1, ge=0, le=1)

    @field_validator("grid_resolution")
    @classmethod
    def validate_grid_resolution(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"grid_resolution must be positive, got {v}")
        return v


class RunConfigSchema(StrictModel):
    """Root configuration schema.

    ``system`` is either an inline system description or a path to a JSON or
    YAML file, resolved relative to the configuration file.
    """

    system: Union[str, Dict[str, Any]]
    bases: Optional[BasesConfig] = None
    frequency_grid: FrequencyGridConfig = Field(default_factory=FrequencyGridConfig)
    targets: List[TargetConfig]
    stealth: StealthConfig
    surrogate: SurrogateConfig
    identification: IdentificationConfig = Field(default_factory=IdentificationConfig)
    vector_fitting: VectorFittingConfig = Field(default_factory=VectorFittingConfig)
    optimizer: OptimizerConfig
    api: ApiConfig = Field(default_factory=ApiConfig)
    output_dir: str = "output"
    max_workers: int = 4

    @field_validator("system")
    @classmethod
    def validate_system(cls, v: Union[str, Dict[str, Any]]) -> Union[str, Dict[str, Any]]:
        if isinstance(v, str) and not v.strip():
            raise ValueError("system path must not be empty")
        return v

    @field_validator("max_workers")
    @classmethod
    def validate_max_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"max_workers must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def validate_targets(self) -> "RunConfigSchema":
        if not self.targets:
            raise ValueError("at least one target bus is required")
        buses = [target.bus for target in self.targets]
        duplicates = sorted({bus for bus in buses if buses.count(bus) > 1})
        if duplicates:
            raise ValueError(f"duplicate target buses: {duplicates}")
        return self
