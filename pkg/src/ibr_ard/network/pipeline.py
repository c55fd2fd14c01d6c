# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""End-to-end bus assessment and the multi-bus ranking."""

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np
from scipy.stats import spearmanr

from ibr_ard.ard.api import ApiResult, BusApiReport, bus_report
from ibr_ard.ard.attack_set import FeasibleAttackSet, StealthModel
from ibr_ard.ard.engine import ArdCloud
from ibr_ard.ard.studies import EngineConfig, assess_mode
from ibr_ard.identification.era import era_identify
from ibr_ard.identification.modes import Mode, select_critical_modes
from ibr_ard.identification.records import synthesize_transients
from ibr_ard.identification.vector_fitting import assemble_admittance, vector_fit
from ibr_ard.models.interconnect import evaluate_impedance, impedance_spectrum
from ibr_ard.models.types import (
    DEFAULT_BAND_HZ,
    DqMatrix,
    FrequencyGrid,
    ImpedanceSpectrum,
    ParameterVector,
    PoleResidueModel,
    StateSpaceModel,
)
from ibr_ard.models.vsg import build_vsg_state_space
from ibr_ard.network.reduction import (
    TheveninEquivalent,
    scr_proxy,
    thevenin_at,
    thevenin_impedance,
)
from ibr_ard.network.system import IbrUnit, SystemDescription
from ibr_ard.shared.debug import log_stage_event
from ibr_ard.shared.errors import StageError, UnknownModeError, classify_error
from ibr_ard.shared.export import (
    RANKING_HEADER,
    export_as_json,
    export_rows_as_csv,
    export_spectrum_as_csv,
    write_artifact,
)
from ibr_ard.surrogate.base import Surrogate
from ibr_ard.surrogate.dataset import generate_dataset
from ibr_ard.surrogate.oracle import WhiteBoxSurrogate
from ibr_ard.surrogate.rational import RationalSurrogate, fit_surrogate
from ibr_ard.surrogate.sampling import lhs_sample

logger = logging.getLogger(__name__)

SURROGATE_MODES = ("whitebox_oracle", "rational_fit")


@dataclass(frozen=True)
class SurrogateSettings:
    mode: str = "whitebox_oracle"
    dataset_size: int = 200
    seed: int = 0
    basis_degree: int = 2
    rho_degree: int = 2
    ridge: float = 1e-9
    n_fit_points: int = 24
    dataset_mode: str = "direct"
    era_dt: float = 1e-3
    era_samples: int = 1024

    def __post_init__(self):
        if self.mode not in SURROGATE_MODES:
            raise ValueError(f"unknown surrogate mode {self.mode!r}")


@dataclass(frozen=True)
class FitSettings:
    """Vector fitting of the closed-loop admittance and mode selection."""

    n_poles: int = 12
    n_iter: int = 10
    weighting: str = "uniform"
    band_hz: Tuple[float, float] = DEFAULT_BAND_HZ
    top_k: int = 2


@dataclass(frozen=True)
class AssessmentConfig:
    grid: FrequencyGrid
    surrogate: SurrogateSettings = field(default_factory=SurrogateSettings)
    fitting: FitSettings = field(default_factory=FitSettings)
    engine: EngineConfig = field(default_factory=EngineConfig)
    gamma: float = 0.1
    max_workers: int = 4


@dataclass(eq=False)
class BusAssessment:
    report: BusApiReport
    thevenin: TheveninEquivalent
    admittance: ImpedanceSpectrum
    pole_residue: PoleResidueModel
    modes: List[Mode]
    clouds: Dict[str, ArdCloud]
    surrogate: Surrogate


@contextmanager
def pipeline_stage(name: str, bus: str, log_root: Optional[Path] = None) -> Iterator[None]:
    """Label failures with the stage name and record the stage audit trail."""
    log_stage_event(name, "start", log_root, bus=bus)
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        category, _ = classify_error(exc)
        logger.error(
            "Stage failed | stage=%s bus=%s category=%s message=%s",
            name,
            bus,
            category,
            exc,
            exc_info=logger.isEnabledFor(logging.DEBUG),
        )
        log_stage_event(name, "failed", log_root, bus=bus, category=category)
        raise StageError(name, exc) from exc
    log_stage_event(name, "ok", log_root, bus=bus)


def inverter_builder(unit: IbrUnit, omega0: float):
    return partial(build_vsg_state_space, filter_params=unit.filter_params, omega0=omega0)


def nominal_inverter_model(
    unit: IbrUnit,
    omega0: float,
    identification_mode: str = "direct",
    era_dt: float = 1e-3,
    era_samples: int = 1024,
) -> StateSpaceModel:
    """White-box nominal model, or its ERA identification from synthetic transients."""
    model = build_vsg_state_space(unit.params, unit.filter_params, omega0)
    if identification_mode == "via_era":
        records = synthesize_transients(model, dt=era_dt, n_samples=era_samples)
        return era_identify(records, model_order="auto")
    return model


def build_surrogate(
    omega: FeasibleAttackSet,
    unit: IbrUnit,
    omega0: float,
    settings: SurrogateSettings,
    grid: FrequencyGrid,
    max_workers: int = 4,
) -> Surrogate:
    """White-box oracle or rational surrogate trained on the attack box."""
    if settings.mode == "whitebox_oracle" or omega.is_singleton:
        return WhiteBoxSurrogate(unit.filter_params, omega0)
    bounds = omega.si_bounds()
    params = lhs_sample(bounds, settings.dataset_size, settings.seed)
    dataset = generate_dataset(
        inverter_builder(unit, omega0),
        params,
        grid,
        mode=settings.dataset_mode,
        bounds=bounds,
        sampling_seed=settings.seed,
        era_dt=settings.era_dt,
        era_samples=settings.era_samples,
        max_workers=max_workers,
    )
    return fit_surrogate(
        dataset,
        basis_degree=settings.basis_degree,
        rho_degree=settings.rho_degree,
        ridge=settings.ridge,
        n_fit_points=settings.n_fit_points,
        validation_seed=settings.seed,
    )


def loop_impedance_for(sys: SystemDescription, bus: str):
    """``(v, s) -> Z_inv(v)(s) + Z_th(s)``, the exact loop at complex ``s``."""
    unit = sys.unit_at(bus)
    builder = inverter_builder(unit, sys.omega0)

    def loop(v: ParameterVector, s: complex) -> DqMatrix:
        return evaluate_impedance(builder(v), s) + thevenin_impedance(sys, bus, s)

    return loop


def _persist(
    directory: Path,
    thevenin: TheveninEquivalent,
    admittance: ImpedanceSpectrum,
    pole_residue: PoleResidueModel,
    surrogate: Surrogate,
    clouds: Dict[str, ArdCloud],
    results: Dict[str, ApiResult],
    report: BusApiReport,
) -> None:
    write_artifact(directory / "thevenin.csv", thevenin.to_csv())
    write_artifact(directory / "admittance.csv", export_spectrum_as_csv(admittance))
    write_artifact(directory / "pole_residue.json", export_as_json(pole_residue.to_dict()))
    if isinstance(surrogate, RationalSurrogate):
        surrogate.save(directory / "surrogate.json")
    for mode_id, cloud in clouds.items():
        write_artifact(directory / f"ard_{mode_id}.csv", cloud.to_csv(results[mode_id].worst_case))
        write_artifact(directory / f"ard_{mode_id}.json", export_as_json(cloud.metadata_dict()))
    write_artifact(directory / "report.json", export_as_json(report.to_dict()))


@dataclass(eq=False)
class BusModes:
    """Small-signal picture of one bus before any attack is considered."""

    unit: IbrUnit
    thevenin: TheveninEquivalent
    admittance: ImpedanceSpectrum
    pole_residue: PoleResidueModel
    modes: List[Mode]


def identify_bus_modes(
    sys: SystemDescription,
    bus: str,
    cfg: AssessmentConfig,
    log_root: Optional[Path] = None,
) -> BusModes:
    """Thevenin sweep, closed-loop admittance, vector fit and critical modes.

    Raises:
        StageError: Any stage failure, labelled with the stage name.
    """
    bus = str(bus)
    with pipeline_stage("thevenin", bus, log_root):
        if sys.bus(bus).type != "ibr":
            raise ValueError(f"bus {bus} is not an ibr bus")
        unit = sys.unit_at(bus)
        thevenin = thevenin_at(sys, bus, cfg.grid, cfg.max_workers)

    with pipeline_stage("admittance", bus, log_root):
        model = nominal_inverter_model(
            unit,
            sys.omega0,
            cfg.surrogate.dataset_mode,
            cfg.surrogate.era_dt,
            cfg.surrogate.era_samples,
        )
        admittance = assemble_admittance(impedance_spectrum(model, cfg.grid), thevenin.spectrum)

    with pipeline_stage("vector_fit", bus, log_root):
        pole_residue = vector_fit(
            admittance,
            n_poles=cfg.fitting.n_poles,
            n_iter=cfg.fitting.n_iter,
            weighting=cfg.fitting.weighting,
        )

    with pipeline_stage("modes", bus, log_root):
        modes = select_critical_modes(pole_residue, cfg.fitting.band_hz, cfg.fitting.top_k)
        if not modes:
            raise UnknownModeError(f"no critical mode in band {cfg.fitting.band_hz} Hz")
    return BusModes(unit, thevenin, admittance, pole_residue, modes)


def assess_bus(
    sys: SystemDescription,
    bus: str,
    omega: FeasibleAttackSet,
    s: StealthModel,
    cfg: AssessmentConfig,
    out_dir: Optional[Path] = None,
    log_root: Optional[Path] = None,
) -> BusAssessment:
    """Thevenin, surrogate, admittance fit, modes, reachable domains and API at one bus.

    Raises:
        StageError: Any stage failure, labelled with the stage name.
    """
    bus = str(bus)
    identified = identify_bus_modes(sys, bus, cfg, log_root)
    modes = identified.modes

    with pipeline_stage("surrogate", bus, log_root):
        surrogate = build_surrogate(
            omega, identified.unit, sys.omega0, cfg.surrogate, cfg.grid, cfg.max_workers
        )

    clouds: Dict[str, ArdCloud] = {}
    results: Dict[str, ApiResult] = {}
    with pipeline_stage("ard", bus, log_root):
        for mode in modes:
            clouds[mode.mode_id], results[mode.mode_id] = assess_mode(
                omega, s, surrogate, mode, cfg.engine
            )

    with pipeline_stage("report", bus, log_root):
        report = bus_report(bus, [(m, results[m.mode_id]) for m in modes], cfg.gamma)
        if out_dir is not None:
            _persist(
                Path(out_dir) / f"bus_{bus}",
                identified.thevenin,
                identified.admittance,
                identified.pole_residue,
                surrogate,
                clouds,
                results,
                report,
            )

    logger.info(
        "Bus assessed | bus=%s api=%.6g critical_mode=%s modes=%d",
        bus,
        report.bus_api,
        report.critical_mode,
        len(modes),
    )
    return BusAssessment(
        report=report,
        thevenin=identified.thevenin,
        admittance=identified.admittance,
        pole_residue=identified.pole_residue,
        modes=modes,
        clouds=clouds,
        surrogate=surrogate,
    )


@dataclass(eq=False)
class RankingReport:
    assessments: Dict[str, BusAssessment]
    scr: Dict[str, float]
    order: List[str]
    spearman_rho: Optional[float]
    discordant_pairs: List[Tuple[str, str]]

    def rows(self) -> List[List[Any]]:
        rows = []
        for bus in self.order:
            report = self.assessments[bus].report
            mode, result = report.critical
            rows.append([bus, report.bus_api, result.branch, self.scr[bus], mode.frequency_hz])
        return rows

    def to_csv(self) -> str:
        return export_rows_as_csv(RANKING_HEADER, self.rows())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "scr_proxy": self.scr,
            "spearman_rho": self.spearman_rho,
            "discordant_pairs": [list(pair) for pair in self.discordant_pairs],
            "buses": {bus: a.report.to_dict() for bus, a in self.assessments.items()},
        }


def _discordant(api: Dict[str, float], weakness: Dict[str, float]) -> List[Tuple[str, str]]:
    buses = sorted(api)
    pairs = []
    for i, a in enumerate(buses):
        for b in buses[i + 1 :]:
            if (api[a] - api[b]) * (weakness[a] - weakness[b]) < 0:
                pairs.append((a, b))
    return pairs


def rank_buses(
    sys: SystemDescription,
    targets: Mapping[str, Tuple[FeasibleAttackSet, StealthModel]],
    cfg: AssessmentConfig,
    out_dir: Optional[Path] = None,
    log_root: Optional[Path] = None,
) -> RankingReport:
    """Assess every target bus and compare the API ranking with grid weakness.

    Buses are sorted by descending API, ties by bus id. Weakness is ``1/SCR``;
    the Spearman correlation between API and weakness and the discordant bus
    pairs are reported.
    """
    if not targets:
        raise ValueError("rank_buses needs at least one target bus")
    assessments = {
        str(bus): assess_bus(sys, bus, omega, s, cfg, out_dir, log_root)
        for bus, (omega, s) in targets.items()
    }
    scr = {bus: scr_proxy(sys, bus) for bus in assessments}
    api = {bus: a.report.bus_api for bus, a in assessments.items()}
    weakness = {bus: (1.0 / value if value > 0 else float("inf")) for bus, value in scr.items()}
    order = sorted(assessments, key=lambda bus: (-api[bus], bus))

    rho: Optional[float] = None
    if len(assessments) >= 2:
        buses = sorted(assessments)
        statistic, _ = spearmanr([api[b] for b in buses], [weakness[b] for b in buses])
        rho = None if np.isnan(statistic) else float(statistic)
    discordant = _discordant(api, weakness)
    logger.info(
        "Buses ranked | buses=%d spearman=%s discordant=%d",
        len(order),
        "n/a" if rho is None else f"{rho:.4f}",
        len(discordant),
    )
    return RankingReport(
        assessments=assessments,
        scr=scr,
        order=order,
        spearman_rho=rho,
        discordant_pairs=discordant,
    )
