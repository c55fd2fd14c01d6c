# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Command-line front end.

Commands:
    identify  label a training dataset from ERA-identified spectra
    fit       fit the rational surrogate to a dataset
    ard       reachable domain and API of one mode at one bus, with optional studies
    rank      per-bus API report and ranking of every target bus
    demo      write the demo configurations and rank both systems
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from ibr_ard.ard.attack_set import omega_digest
from ibr_ard.ard.studies import (
    assess_mode,
    chain_crossing,
    cross_layer_study,
    privilege_chain,
    validate_worst_case,
)
from ibr_ard.cli.demo import write_demo_configs
from ibr_ard.identification.records import synthesize_transients
from ibr_ard.models.vsg import build_vsg_state_space
from ibr_ard.network.pipeline import (
    AssessmentConfig,
    build_surrogate,
    identify_bus_modes,
    inverter_builder,
    loop_impedance_for,
    pipeline_stage,
    rank_buses,
)
from ibr_ard.network.reduction import rl_equivalent
from ibr_ard.network.system import SystemDescription
from ibr_ard.shared.config import Config
from ibr_ard.shared.debug import setup_debug_file_logging
from ibr_ard.shared.errors import EXIT_CONFIG, EXIT_OK, UnknownModeError, classify_error
from ibr_ard.shared.export import RANKING_HEADER, export_as_json, write_artifact
from ibr_ard.surrogate.dataset import TrainingDataset, generate_dataset
from ibr_ard.surrogate.rational import RationalSurrogate, fit_surrogate
from ibr_ard.surrogate.sampling import lhs_sample

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
EFFECTIVE_CONFIG_NAME = "effective_config.json"
STUDIES = ("chain", "cross-layer", "validate")
DEFAULT_CHAIN_FACTORS = [0.25, 0.5, 0.75, 1.0]


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
    logging.getLogger().setLevel(logging.DEBUG if verbose else logging.INFO)


def _output_dir(args: argparse.Namespace, config: Config) -> Path:
    out = Path(args.out) if args.out else config.get_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    setup_debug_file_logging(out)
    return out


def _write_effective_config(out: Path, config: Config, command: str, extra: Dict[str, Any]) -> None:
    data = config.effective_config()
    data["command"] = {"name": command, **extra}
    write_artifact(out / EFFECTIVE_CONFIG_NAME, export_as_json(data))


def _target_bus(args: argparse.Namespace, config: Config) -> str:
    return str(args.bus) if args.bus is not None else config.get_target_buses()[0]


def cmd_identify(args: argparse.Namespace) -> int:
    """Label ERA-identified spectra over the attack box of one target bus."""
    config = Config(args.config, seed=args.seed)
    out = _output_dir(args, config)
    bus = _target_bus(args, config)
    system = config.get_system()
    omega = config.get_attack_set(bus)
    settings = config.get_surrogate_settings()
    _write_effective_config(out, config, "identify", {"bus": bus})

    unit = system.unit_at(bus)
    with pipeline_stage("transients", bus, out):
        nominal = build_vsg_state_space(unit.params, unit.filter_params, system.omega0)
        records = synthesize_transients(
            nominal, dt=settings.era_dt, n_samples=settings.era_samples
        )
        for record in records:
            record.save(out / "transients" / f"bus_{bus}_experiment_{record.experiment_id}.csv")

    with pipeline_stage("dataset", bus, out):
        bounds = omega.si_bounds()
        dataset = generate_dataset(
            inverter_builder(unit, system.omega0),
            lhs_sample(bounds, settings.dataset_size, settings.seed),
            config.get_frequency_grid(),
            mode="via_era",
            bounds=bounds,
            sampling_seed=settings.seed,
            era_dt=settings.era_dt,
            era_samples=settings.era_samples,
            max_workers=config.get_max_workers(),
        )
        manifest = dataset.save(out / "dataset")

    logger.info("Dataset written | bus=%s samples=%d manifest=%s", bus, len(dataset), manifest)
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    """Fit the rational surrogate and write it with its fit report."""
    config = Config(args.config, seed=args.seed)
    out = _output_dir(args, config)
    dataset_dir = Path(args.dataset) if args.dataset else out / "dataset"
    settings = config.get_surrogate_settings()
    _write_effective_config(out, config, "fit", {"dataset": str(dataset_dir)})

    with pipeline_stage("fit", "-", out):
        dataset = TrainingDataset.load(dataset_dir)
        surrogate = fit_surrogate(
            dataset,
            basis_degree=settings.basis_degree,
            rho_degree=settings.rho_degree,
            ridge=settings.ridge,
            n_fit_points=settings.n_fit_points,
            validation_seed=settings.seed,
        )
        path = surrogate.save(out / "surrogate.json")
        write_artifact(out / "fit_report.json", export_as_json(surrogate.fit_report))

    logger.info(
        "Surrogate written | path=%s validation_relative_rms=%s",
        path,
        surrogate.fit_report.get("validation_relative_rms"),
    )
    return EXIT_OK


def _factor_list(text: str) -> List[float]:
    try:
        factors = [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid factor list {text!r}") from exc
    if not factors or any(f <= 0 for f in factors) or factors != sorted(factors):
        raise argparse.ArgumentTypeError(f"factors must be positive and non-decreasing: {text!r}")
    return factors


def _run_study(
    study: str,
    args: argparse.Namespace,
    system: SystemDescription,
    bus: str,
    omega,
    stealth,
    surrogate,
    mode,
    cfg: AssessmentConfig,
    result,
) -> Dict[str, Any]:
    report: Dict[str, Any] = {"study": study, "bus": bus, "mode": mode.mode_id}
    if study == "chain":
        steps = privilege_chain(
            omega,
            stealth,
            surrogate,
            mode,
            args.chain_factors,
            cfg.engine,
            loop_impedance_for(system, bus),
        )
        report.update(steps=steps, **chain_crossing(steps))
    elif study == "cross-layer":
        variants = cross_layer_study(omega, stealth, surrogate, mode, cfg.engine)
        report["variants"] = {name: variant.to_dict() for name, variant in variants.items()}
    else:
        builder = inverter_builder(system.unit_at(bus), system.omega0)
        report.update(
            validate_worst_case(result.worst_case, builder, rl_equivalent(system, bus))
        )
    return report


def cmd_ard(args: argparse.Namespace) -> int:
    """Reachable-domain cloud, traced boundary and API of one mode."""
    config = Config(args.config, seed=args.seed)
    out = _output_dir(args, config)
    bus = _target_bus(args, config)
    system = config.get_system()
    omega = config.get_attack_set(bus)
    stealth = config.get_stealth_model(bus)
    cfg = config.get_assessment_config(n_directions=args.directions)
    _write_effective_config(
        out,
        config,
        "ard",
        {
            "bus": bus,
            "mode_index": args.mode_index,
            "surrogate": args.surrogate,
            "studies": list(args.study or []),
            "chain_factors": args.chain_factors,
        },
    )

    identified = identify_bus_modes(system, bus, cfg, out)
    with pipeline_stage("modes", bus, out):
        if not 0 <= args.mode_index < len(identified.modes):
            raise UnknownModeError(
                f"mode index {args.mode_index} out of range; {len(identified.modes)} modes selected"
            )
        mode = identified.modes[args.mode_index]

    with pipeline_stage("surrogate", bus, out):
        if args.surrogate:
            surrogate = RationalSurrogate.load(args.surrogate)
        else:
            surrogate = build_surrogate(
                omega, identified.unit, system.omega0, cfg.surrogate, cfg.grid, cfg.max_workers
            )

    with pipeline_stage("ard", bus, out):
        cloud, result = assess_mode(omega, stealth, surrogate, mode, cfg.engine)

    directory = out / f"bus_{bus}"
    if args.format == "json":
        cloud_data = {**cloud.metadata_dict(), "points": [p.to_dict() for p in cloud.points()]}
        write_artifact(directory / f"ard_{mode.mode_id}.json", export_as_json(cloud_data))
    else:
        write_artifact(directory / f"ard_{mode.mode_id}.csv", cloud.to_csv(result.worst_case))
    worst = {
        "bus": bus,
        "omega_digest": omega_digest(omega, stealth),
        "api": result.to_dict(),
    }
    write_artifact(directory / f"worst_case_{mode.mode_id}.json", export_as_json(worst))
    for study in args.study or []:
        with pipeline_stage(f"study_{study}", bus, out):
            report = _run_study(
                study, args, system, bus, omega, stealth, surrogate, mode, cfg, result
            )
        name = study.replace("-", "_")
        write_artifact(directory / f"study_{name}_{mode.mode_id}.json", export_as_json(report))
        logger.info("Study written | bus=%s mode=%s study=%s", bus, mode.mode_id, study)
    logger.info(
        "ARD written | bus=%s mode=%s api=%.6g branch=%s points=%d",
        bus,
        mode.mode_id,
        result.value,
        result.branch,
        len(cloud.points()),
    )
    return EXIT_OK


def _rank(config: Config, out: Path, output_format: str) -> None:
    report = rank_buses(
        config.get_system(), config.get_targets(), config.get_assessment_config(), out, out
    )
    write_artifact(out / "ranking_report.json", export_as_json(report.to_dict()))
    if output_format == "json":
        rows: List[Dict[str, Any]] = [dict(zip(RANKING_HEADER, row)) for row in report.rows()]
        write_artifact(out / "ranking.json", export_as_json(rows))
    else:
        write_artifact(out / "ranking.csv", report.to_csv())


def cmd_rank(args: argparse.Namespace) -> int:
    """Assess every target bus and write the ranking."""
    config = Config(args.config, seed=args.seed)
    out = _output_dir(args, config)
    _write_effective_config(out, config, "rank", {})
    _rank(config, out, args.format)
    return EXIT_OK


def cmd_demo(args: argparse.Namespace) -> int:
    """Write both demo configurations and run the ranking on each."""
    out = Path(args.out) if args.out else Path("output")
    out.mkdir(parents=True, exist_ok=True)
    setup_debug_file_logging(out)
    seed = 0 if args.seed is None else args.seed
    paths = write_demo_configs(out / "configs", seed=seed, output_root=str(out))
    for name, path in paths.items():
        config = Config(path)
        target = config.get_output_dir()
        target.mkdir(parents=True, exist_ok=True)
        _write_effective_config(target, config, "demo", {"name": name})
        logger.info("Running demo | name=%s config=%s", name, path)
        _rank(config, target, args.format)
    return EXIT_OK


COMMANDS = {
    "identify": cmd_identify,
    "fit": cmd_fit,
    "ard": cmd_ard,
    "rank": cmd_rank,
    "demo": cmd_demo,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="Output directory (default: config output_dir)")
    common.add_argument("--seed", type=int, default=None, help="Override every configured seed")
    common.add_argument(
        "--format", choices=("json", "csv"), default="csv", help="Format of tabular artifacts"
    )
    common.add_argument("--verbose", action="store_true", help="Enable debug logging")

    with_config = argparse.ArgumentParser(add_help=False, parents=[common])
    with_config.add_argument("--config", required=True, help="Path to the run config (YAML/JSON)")

    parser = argparse.ArgumentParser(
        prog="ibr-ard",
        description="Attack reachable domains and penetration indices of inverter-based resources",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    identify = sub.add_parser("identify", parents=[with_config], help=cmd_identify.__doc__)
    identify.add_argument("--bus", default=None, help="Target bus (default: first target)")

    fit = sub.add_parser("fit", parents=[with_config], help=cmd_fit.__doc__)
    fit.add_argument("--dataset", default=None, help="Dataset directory (default: <out>/dataset)")

    ard = sub.add_parser("ard", parents=[with_config], help=cmd_ard.__doc__)
    ard.add_argument("--bus", default=None, help="Target bus (default: first target)")
    ard.add_argument("--mode-index", type=int, default=0, help="Index into the critical modes")
    ard.add_argument("--directions", type=int, default=None, help="Boundary directions")
    ard.add_argument("--surrogate", default=None, help="Fitted surrogate JSON to use")
    ard.add_argument(
        "--study",
        action="append",
        choices=STUDIES,
        default=None,
        help="Extra study on the assessed mode (repeatable)",
    )
    ard.add_argument(
        "--chain-factors",
        type=_factor_list,
        default=DEFAULT_CHAIN_FACTORS,
        help="Comma-separated privilege scale factors for the chain study",
    )

    sub.add_parser("rank", parents=[with_config], help=cmd_rank.__doc__)
    sub.add_parser("demo", parents=[common], help=cmd_demo.__doc__)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        logger.error(
            "Command failed | command=%s category=config_missing message=%s", args.command, exc
        )
        return EXIT_CONFIG
    except Exception as exc:
        category, exit_code = classify_error(exc)
        logger.error(
            "Command failed | command=%s category=%s message=%s",
            args.command,
            category,
            exc,
            exc_info=logger.isEnabledFor(logging.DEBUG),
        )
        return exit_code


if __name__ == "__main__":
    sys.exit(main())
