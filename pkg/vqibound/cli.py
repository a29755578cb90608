"""
Command-line entry point.

    vqi simulate --config run.json --out data/
    vqi fit data/run_000.csv data/run_001.csv --config run.json --out fits/
    vqi bound --config run.json --coverage fits/coverage.json --out bounds/
    vqi scan --config run.json --assume-violation --out bounds/

Exit codes: 0 success, 2 input or config error, 3 Bell-violation
prerequisite not met.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from . import __version__
from .analysis.coverage import CoverageReport, coverage_report, read_coverage_json, write_coverage_json
from .analysis.fringe import fit_series, net_visibility, sliding_scan, stability_report
from .analysis.trace_io import write_trace_csv
from .core.config import FitPeriodMode, RunConfig, config_digest, get_settings, load_run_config
from .core.exceptions import (
    ConfigurationError,
    DataFormatError,
    InputValidationError,
    PrerequisiteError,
)
from .core.io import atomic_write_json
from .experiment.series_io import read_series_csv, write_series_csv
from .experiment.simulator import compose_day
from .physics.kinematics import ERA_OFFSET, ERA_RATE, J2000_EPOCH
from .pipeline.scan import ScanRequest, run_beta_scan, run_chi_scan, worst_case_report, write_curve

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PREREQUISITE = 3


def cmd_simulate(config: RunConfig, raw: bytes, out: Path, seed: int) -> int:
    """Simulate every scheduled run and write one CSV per run plus a manifest."""
    settings = get_settings()
    day = compose_day(
        config.scan.schedules(),
        config.source,
        seed=seed,
        resolution_s=config.analysis.coverage_resolution_s,
        max_workers=settings.max_workers,
    )
    files = []
    for index, series in enumerate(day.series):
        path = write_series_csv(series, out / f"run_{index:03d}.csv")
        files.append(path.name)
        logger.info(f"Run {index}: {len(series)} bins -> {path}")

    manifest = {
        "version": __version__,
        "seed": seed,
        "config_sha256": config_digest(raw),
        "sidereal_epoch": {
            "j2000_utc": J2000_EPOCH.isoformat(),
            "rotation_angle_offset": ERA_OFFSET,
            "rotation_angle_rate": ERA_RATE,
        },
        "files": files,
        "schedule_coverage": day.coverage.model_dump(mode="json"),
    }
    atomic_write_json(out / "manifest.json", manifest)
    return EXIT_OK


def cmd_fit(config: RunConfig, series_paths: list[Path], out: Path) -> int:
    """Fit each series, write its trace, then the combined coverage report."""
    if not series_paths:
        raise InputValidationError("no series files given")
    stems = [p.stem for p in series_paths]
    if len(set(stems)) != len(stems):
        raise InputValidationError("series file names must be unique", {"files": [str(p) for p in series_paths]})

    settings = get_settings()
    analysis = config.analysis
    period = config.scan.fringe_period
    window_length = analysis.window_length or 1.5 * period
    full_span_period = period if analysis.period_mode is FitPeriodMode.FIXED else None

    traces = []
    fits: dict[str, Any] = {}
    for path in series_paths:
        series = read_series_csv(path, bin_width=config.scan.bin_width)
        trace = sliding_scan(
            series,
            window_length=window_length,
            step=analysis.step,
            fixed_period=period,
            threshold=analysis.threshold,
            max_gap_fraction=analysis.max_gap_fraction,
            max_workers=settings.max_workers,
        )
        traces.append(trace)
        write_trace_csv(trace, out / f"{path.stem}_trace.csv", settings.csv_float_format)

        full = fit_series(series, fixed_period=full_span_period, nominal_period=period)
        accidentals_per_bin = config.source.accidental_rate * series.bin_width / 60.0
        net = None
        if full.converged:
            try:
                net = net_visibility(full, accidentals_per_bin)
            except InputValidationError as e:
                logger.warning(f"{path.name}: {e.message}")
        fits[path.stem] = {
            "full_span_fit": full.model_dump(mode="json"),
            "net_visibility": net,
            "stability": stability_report(series, analysis.stability_tolerance).model_dump(mode="json"),
            "windows_fitted": len(trace.points),
            "windows_skipped": [s.model_dump(mode="json") for s in trace.skipped],
        }
        logger.info(f"{path.name}: full-span V={full.visibility:.4f}±{full.visibility_sigma:.4f}")

    report = coverage_report(
        traces,
        resolution_s=analysis.coverage_resolution_s,
        min_multiplicity=analysis.min_multiplicity,
        threshold=analysis.threshold,
    )
    atomic_write_json(out / "fits.json", fits)
    write_coverage_json(report, out / "coverage.json")
    return EXIT_OK


def _scan_request(config: RunConfig, sweep: Any) -> ScanRequest:
    return ScanRequest(
        geometry=config.metrology.baseline(),
        clock=config.scan.clock(),
        sweep=sweep,
        alignment_mode=config.sweep.alignment_mode,
        rho=config.sweep.rho,
        oracle_window_bound=config.sweep.oracle_window_bound,
    )


def _gate_inputs(coverage_path: Path | None) -> CoverageReport | None:
    return read_coverage_json(coverage_path) if coverage_path is not None else None


def cmd_bound(
    config: RunConfig, raw: bytes, coverage_path: Path | None, assume_violation: bool, out: Path
) -> int:
    """Worst-case frame at the configured β."""
    coverage = _gate_inputs(coverage_path)
    report = worst_case_report(
        config.metrology.baseline(),
        config.scan.clock(),
        beta=config.sweep.chi.beta,
        chi_resolution=config.sweep.chi.points,
        coverage=coverage,
        assume_violation=assume_violation,
        alignment_mode=config.sweep.alignment_mode,
        rho=config.sweep.rho,
    )
    payload = report.model_dump(mode="json")
    payload["config_sha256"] = config_digest(raw)
    atomic_write_json(out / "worst_case.json", payload)
    logger.info(f"Worst case V_QI/c={report.vqi_over_c:.4g} at chi={report.chi_deg:.2f} deg")
    return EXIT_OK


def cmd_scan(
    config: RunConfig, raw: bytes, coverage_path: Path | None, assume_violation: bool, out: Path
) -> int:
    """χ and β sweeps, one curve CSV and summary JSON each."""
    coverage = _gate_inputs(coverage_path)
    workers = get_settings().max_workers
    extra = {
        "config_sha256": config_digest(raw),
        "assume_violation": assume_violation,
        "coverage_verdict": coverage.verdict if coverage is not None else None,
    }
    chi_curve = run_chi_scan(_scan_request(config, config.sweep.chi), coverage, assume_violation, workers)
    write_curve(chi_curve, out, "chi_scan", extra)
    beta_curve = run_beta_scan(_scan_request(config, config.sweep.beta), coverage, assume_violation, workers)
    write_curve(beta_curve, out, "beta_scan", extra)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="JSON run configuration")
    common.add_argument("--out", type=Path, required=True, help="Output directory")
    common.add_argument("--seed", type=int, default=None, help="Override the config seed")
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=None,
        help="Override VQI_LOG_LEVEL",
    )

    gate = argparse.ArgumentParser(add_help=False)
    gate.add_argument("--coverage", type=Path, default=None, help="coverage.json written by 'vqi fit'")
    gate.add_argument(
        "--assume-violation",
        action="store_true",
        help="Waive the Bell-violation prerequisite (pure geometry sweep)",
    )

    parser = argparse.ArgumentParser(prog="vqi", description="Lower bounds on the speed of quantum information")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="Simulate coincidence series for the run schedule")
    fit = sub.add_parser("fit", parents=[common], help="Fit visibility traces and check day coverage")
    fit.add_argument("series", nargs="*", type=Path, help="Series CSV files")
    sub.add_parser("bound", parents=[common, gate], help="Worst-case frame bound")
    sub.add_parser("scan", parents=[common, gate], help="Bound curves over chi and beta")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Run the CLI and return the process exit code."""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(level=args.log_level or settings.log_level, format=settings.log_format)

    try:
        config, raw = load_run_config(args.config)
        out: Path = args.out
        if args.command == "simulate":
            seed = args.seed if args.seed is not None else config.seed
            return cmd_simulate(config, raw, out, seed)
        if args.command == "fit":
            return cmd_fit(config, args.series, out)
        if args.command == "bound":
            return cmd_bound(config, raw, args.coverage, args.assume_violation, out)
        return cmd_scan(config, raw, args.coverage, args.assume_violation, out)
    except PrerequisiteError as e:
        coverage = e.details.get("coverage") or {}
        logger.error(f"❌ {e.message}")
        if coverage:
            logger.error(
                f"coverage: verdict={coverage.get('verdict')} "
                f"uncovered_cells={coverage.get('uncovered_cells')} "
                f"failing_windows={len(coverage.get('failing_windows', []))}"
            )
        return EXIT_PREREQUISITE
    except ConfigurationError as e:
        logger.error(f"❌ {e.message}")
        for err in e.details.get("errors", []):
            logger.error(f"  {err['loc']}: {err['msg']}")
        return EXIT_INPUT
    except (DataFormatError, InputValidationError) as e:
        logger.error(f"❌ {e.message}")
        return EXIT_INPUT
    except ValidationError as e:
        logger.error(f"❌ invalid input: {e}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
