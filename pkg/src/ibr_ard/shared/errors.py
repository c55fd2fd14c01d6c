# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Exception hierarchy and error classification."""

from typing import Tuple

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_OVER_CONSTRAINED = 4


class ArdError(Exception):
    """Base class for every error raised by the assessment pipeline."""

    category = "numerical_error"
    exit_code = EXIT_NUMERICAL


class ConfigError(ArdError):
    """Configuration file missing, unreadable or invalid."""

    category = "config_error"
    exit_code = EXIT_CONFIG


class InfeasibleOperatingPointError(ArdError):
    category = "infeasible_operating_point"


class DegenerateModelError(ArdError):
    category = "degenerate_model"


class NearSingularEvaluationError(ArdError):
    category = "near_singular_evaluation"


class AssemblyError(ArdError):
    category = "assembly_error"


class UnidentifiableError(ArdError):
    category = "unidentifiable"


class RecordError(ArdError):
    """Transient records that cannot be combined (length, dt, directions)."""

    category = "record_error"


class NearResonanceError(ArdError):
    """A 2x2 block is singular at a frequency point."""

    category = "near_resonance"

    def __init__(self, message: str, omega: float):
        super().__init__(message)
        self.omega = omega


class NumericalConditioningError(ArdError):
    category = "numerical_conditioning"


class UnknownModeError(ArdError):
    category = "unknown_mode"


class DatasetError(ArdError):
    category = "dataset_error"


class InsufficientDataError(ArdError):
    category = "insufficient_data"


class InvalidSurrogateError(ArdError):
    category = "invalid_surrogate"


class EvaluationSingularityError(ArdError):
    category = "evaluation_singularity"


class InfeasibleStartError(ArdError):
    category = "infeasible_start"


class SurrogateDomainError(ArdError):
    category = "surrogate_domain"


class BaselineUnstableError(ArdError):
    """API is undefined when the baseline mode is already unstable."""

    category = "baseline_unstable"


class ComponentSingularityError(ArdError):
    category = "component_singularity"


class OverConstrainedError(ArdError):
    """Stealth thresholds reject most of the attack box."""

    category = "over_constrained"
    exit_code = EXIT_OVER_CONSTRAINED


class StageError(ArdError):
    """Wraps a pipeline failure with the label of the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        category, exit_code = classify_error(cause)
        self.category = category
        self.exit_code = exit_code


def classify_error(error: BaseException) -> Tuple[str, int]:
    """Return the error category and process exit code for an exception."""
    if isinstance(error, ArdError):
        return error.category, error.exit_code
    if isinstance(error, FileNotFoundError):
        return "config_missing", EXIT_CONFIG
    if isinstance(error, (ValueError, TypeError)):
        return "invalid_input", EXIT_NUMERICAL
    if isinstance(error, ArithmeticError):
        return "arithmetic_error", EXIT_NUMERICAL
    return "unexpected_error", EXIT_NUMERICAL
