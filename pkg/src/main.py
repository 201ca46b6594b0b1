import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import pandas as pd

from src.config.constants import ExitCode, ReportConfig, StudyConfig
from src.config.errors import ConfigurationError, ProvenanceError
from src.config.settings import RunConfig, apply_overrides
from src.dsmc.checkpoint import checkpoint
from src.experiments.study_manager import ProfileStudyManager, profile_report, profile_seed, simulate_profile
from src.experiments.validation import ValidationSuite
from src.reports.report_writer import ReportWriter

logger = logging.getLogger(__name__)

CommandOutcome = Tuple[int, List[str], bool]


def load_config(args: argparse.Namespace) -> RunConfig:
    """Returns the RunConfig of the invocation: the file (or defaults), then --set overrides, then shortcuts."""
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"solver.seed={args.seed}")
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    if args.out is not None:
        overrides.append(f"output_dir={json.dumps(args.out)}")
    if args.config:
        return RunConfig.from_file(args.config, overrides)
    return RunConfig.from_dict(apply_overrides(RunConfig().to_dict(), overrides))


def _print_table(frame: pd.DataFrame) -> None:
    print(frame.to_markdown(index=False))


# COMMANDS


def cmd_validate(config: RunConfig, out: Path, args: argparse.Namespace) -> CommandOutcome:
    """Runs the fast check suite and writes validation_summary.json."""
    suite = ValidationSuite(config)
    results = suite.run(args.filter)
    if not results:
        raise ConfigurationError(f"No check matches filter '{args.filter}'; available: {suite.names()}.")
    _print_table(suite.summary_frame(results))
    failed = [result.name for result in results if not result.passed]
    summary = {"checks": [result.to_dict() for result in results], "failed": failed, "passed": not failed}
    ReportWriter.write_json(summary, out / ReportConfig.VALIDATION_FILE.value, config.config_hash())
    code = ExitCode.CHECK_FAILURE.value if failed else ExitCode.SUCCESS.value
    return code, [ReportConfig.VALIDATION_FILE.value], False


def cmd_simulate(config: RunConfig, out: Path, args: argparse.Namespace) -> CommandOutcome:
    """Runs one particle simulation to steady state and writes its time series, histogram, report and checkpoint."""
    solver = config.solver
    profile, ensemble = simulate_profile(config, solver.alpha, solver.init_kind)
    config_hash = config.config_hash()
    ReportWriter.write_frame(profile.time_series, out / ReportConfig.TIME_SERIES_FILE.value, config_hash)
    ReportWriter.write_frame(profile.histogram_frame(), out / ReportConfig.HISTOGRAM_FILE.value, config_hash)
    report = profile_report(profile)
    ReportWriter.write_json(report, out / ReportConfig.MOMENT_REPORT_FILE.value, config_hash)
    checkpoint(ensemble, out / ReportConfig.CHECKPOINT_FILE.value, solver.alpha)
    _print_table(pd.DataFrame([{"k": k, "M_k": v} for k, v in report["run"]["moments"]["values"].items()]))
    artifacts = [
        ReportConfig.TIME_SERIES_FILE.value,
        ReportConfig.HISTOGRAM_FILE.value,
        ReportConfig.MOMENT_REPORT_FILE.value,
        ReportConfig.CHECKPOINT_FILE.value,
    ]
    code = ExitCode.PARTIAL.value if profile.timed_out else ExitCode.SUCCESS.value
    return code, artifacts, profile.timed_out


def cmd_sweep(config: RunConfig, out: Path, args: argparse.Namespace) -> CommandOutcome:
    """Runs the Boltzmann-limit sweep and writes sweep.csv and sweep.json."""
    result = ProfileStudyManager(config).boltzmann_limit_study()
    frame = result.to_frame()
    ReportWriter.write_frame(frame, out / StudyConfig.SWEEP_FILE.value, config.config_hash())
    ReportWriter.write_json(result.to_dict(), out / "sweep.json", config.config_hash())
    _print_table(frame)
    code = ExitCode.PARTIAL.value if result.partial else ExitCode.SUCCESS.value
    return code, [StudyConfig.SWEEP_FILE.value, "sweep.json"], result.partial


def cmd_uniqueness(config: RunConfig, out: Path, args: argparse.Namespace) -> CommandOutcome:
    """Compares steady profiles from different initial data and writes uniqueness.csv and uniqueness.json."""
    verdict = ProfileStudyManager(config).uniqueness_study()
    ReportWriter.write_frame(verdict.to_frame(), out / StudyConfig.UNIQUENESS_FILE.value, config.config_hash())
    ReportWriter.write_json(verdict.to_dict(), out / "uniqueness.json", config.config_hash())
    _print_table(verdict.to_frame())
    if verdict.timed_out:
        code = ExitCode.PARTIAL.value
    else:
        code = ExitCode.SUCCESS.value if verdict.passed else ExitCode.CHECK_FAILURE.value
    return code, [StudyConfig.UNIQUENESS_FILE.value, "uniqueness.json"], verdict.timed_out


def cmd_tails(config: RunConfig, out: Path, args: argparse.Namespace) -> CommandOutcome:
    """Estimates tail rates along the sweep and writes tails.csv."""
    study = ProfileStudyManager(config).tail_uniformity_study()
    ReportWriter.write_frame(study.frame, out / StudyConfig.TAILS_FILE.value, config.config_hash())
    summary = {
        "min_max_ratio": study.min_max_ratio,
        "all_positive": study.all_positive,
        "flagged": study.flagged,
        "passed": study.passed,
    }
    ReportWriter.write_json(summary, out / "tails.json", config.config_hash())
    _print_table(study.frame)
    code = ExitCode.SUCCESS.value if study.passed else ExitCode.CHECK_FAILURE.value
    return code, [StudyConfig.TAILS_FILE.value, "tails.json"], False


def cmd_linearize(config: RunConfig, out: Path, args: argparse.Namespace) -> CommandOutcome:
    """Assembles the linearized operator per grid size and writes spectrum.csv and eigenvalues.csv."""
    study = ProfileStudyManager(config).spectral_gap_study()
    ReportWriter.write_frame(study.frame, out / StudyConfig.SPECTRUM_FILE.value, config.config_hash())
    ReportWriter.write_frame(study.eigenvalues, out / StudyConfig.EIGENVALUES_FILE.value, config.config_hash())
    _print_table(study.frame)
    failed = bool(study.frame["failed"].any())
    code = ExitCode.CHECK_FAILURE.value if failed else ExitCode.SUCCESS.value
    return code, [StudyConfig.SPECTRUM_FILE.value, StudyConfig.EIGENVALUES_FILE.value], False


def cmd_nonlinear(config: RunConfig, out: Path, args: argparse.Namespace) -> CommandOutcome:
    """Fits D ~ c1 D^2 + c2 alpha along the sweep and writes nonlinear.csv."""
    probe = ProfileStudyManager(config).nonlinear_estimate_probe()
    ReportWriter.write_frame(probe.frame, out / StudyConfig.NONLINEAR_FILE.value, config.config_hash())
    fit = {"c1": probe.c1, "c2": probe.c2, "max_scaled_residual": probe.max_scaled_residual, "passed": probe.passed}
    ReportWriter.write_json(fit, out / "nonlinear.json", config.config_hash())
    _print_table(probe.frame)
    code = ExitCode.SUCCESS.value if probe.passed else ExitCode.CHECK_FAILURE.value
    return code, [StudyConfig.NONLINEAR_FILE.value, "nonlinear.json"], False


COMMANDS: Dict[str, Callable[[RunConfig, Path, argparse.Namespace], CommandOutcome]] = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "uniqueness": cmd_uniqueness,
    "tails": cmd_tails,
    "linearize": cmd_linearize,
    "nonlinear": cmd_nonlinear,
}


def build_parser() -> argparse.ArgumentParser:
    """Returns the argument parser of the command-line interface."""
    parser = argparse.ArgumentParser(description="Steady profiles of ballistic annihilation: solvers and studies.")
    parser.add_argument("command", choices=sorted(COMMANDS), help="what to run")
    parser.add_argument("--config", help="JSON run configuration (defaults apply when omitted)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key by dotted path")
    parser.add_argument("--workers", type=int, help="worker processes for independent runs")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="base seed of all runs")
    parser.add_argument("--filter", help="validate: run only checks whose name contains this text")
    parser.add_argument("--log-level", default="INFO", help="logging level (default INFO)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Executes one command and returns its exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    started = time.perf_counter()
    try:
        config = load_config(args)
        out = Path(config.resolve_output_dir())
        code, artifacts, partial = COMMANDS[args.command](config, out, args)
    except (ConfigurationError, ProvenanceError) as error:
        logger.error("%s refused: %s", args.command, error)
        return ExitCode.CONFIGURATION_ERROR.value
    except Exception as error:
        logger.exception("%s failed: %s", args.command, error)
        return ExitCode.CHECK_FAILURE.value
    solver = config.solver
    seeds = {
        "base": solver.seed,
        "default_run": profile_seed(solver.seed, solver.alpha, solver.init_kind),
    }
    ReportWriter.write_manifest(out, args.command, config.to_dict(), config.config_hash(), seeds, artifacts, partial)
    ReportWriter.write_timing(out, time.perf_counter() - started)
    return code


if __name__ == "__main__":
    sys.exit(main())
