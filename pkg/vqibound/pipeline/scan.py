"""
Frame sweeps producing lower bounds on V_QI.

A sweep fixes the baseline geometry and the integration time T and varies
the privileged frame, either its zenith angle χ at a fixed speed or its speed
β at a fixed χ. Each point composes the window bound on |β∥| with the
alignment bound; the sweep itself adds no arithmetic of its own.

Bounds are only claimed on top of a Bell violation that holds at every time
of the sidereal day, so the sweeps check a coverage report first unless the
caller explicitly waives it.
"""

import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from ..analysis.coverage import CoverageReport
from ..core.exceptions import InputValidationError, PrerequisiteError
from ..core.io import atomic_write_json, atomic_write_text
from ..physics.kinematics import (
    BaselineGeometry,
    CaseTag,
    RotationClock,
    bound_beta_parallel,
    brute_force_window_bound,
    window_beta_parallel_range,
)
from ..physics.relativity import PrivilegedFrame, vqi_bound_exact, vqi_bound_worstcase

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["sweep_value", "case_tag", "beta_parallel_bound", "vqi_over_c"]


class AlignmentMode(str, Enum):
    """How the alignment ρ enters each point."""

    WORST_CASE = "worst_case"  # |ρ| ≤ ρ̄
    EXACT = "exact"  # known signed ρ
    OPTIMIZED = "optimized"  # ρ chosen per frame to centre ρ + β∥ on zero


class ChiSweep(BaseModel):
    """Zenith angles χ from ``chi_min`` to ``chi_max`` at a fixed β."""

    model_config = {"frozen": True, "extra": "forbid"}

    kind: Literal["chi"] = "chi"
    beta: float = Field(default=1.0e-3, ge=0.0, lt=1.0)
    chi_min: float = Field(default=0.0, ge=0.0, le=180.0)
    chi_max: float = Field(default=180.0, ge=0.0, le=180.0)
    points: int = Field(default=1801, ge=2)

    @model_validator(mode="after")
    def validate_range(self) -> "ChiSweep":
        if self.chi_max <= self.chi_min:
            raise ValueError("chi_max must be > chi_min")
        return self

    def values(self) -> np.ndarray:
        # i·span/(n−1) keeps grid points such as 90° exact
        steps = np.arange(self.points, dtype=float)
        return self.chi_min + (self.chi_max - self.chi_min) * steps / (self.points - 1)


class BetaSweep(BaseModel):
    """Log-spaced speeds β from ``beta_min`` to ``beta_max`` at a fixed χ."""

    model_config = {"frozen": True, "extra": "forbid"}

    kind: Literal["beta"] = "beta"
    chi_deg: float = Field(default=90.0, ge=0.0, le=180.0)
    beta_min: float = Field(default=1.0e-6, gt=0.0, lt=1.0)
    beta_max: float = Field(default=1.0 - 1.0e-6, gt=0.0, lt=1.0)
    points: int = Field(default=241, ge=2)

    @model_validator(mode="after")
    def validate_range(self) -> "BetaSweep":
        if self.beta_max <= self.beta_min:
            raise ValueError("beta_max must be > beta_min")
        return self

    def values(self) -> np.ndarray:
        values = np.geomspace(self.beta_min, self.beta_max, self.points)
        values[0], values[-1] = self.beta_min, self.beta_max
        return values


Sweep = Annotated[ChiSweep | BetaSweep, Field(discriminator="kind")]


class ScanRequest(BaseModel):
    """Everything a sweep depends on."""

    model_config = {"frozen": True, "extra": "forbid"}

    geometry: BaselineGeometry
    clock: RotationClock
    sweep: Sweep
    alignment_mode: AlignmentMode = AlignmentMode.WORST_CASE
    rho: float | None = Field(default=None, gt=-1.0, lt=1.0, description="signed ρ for the exact mode")
    oracle_window_bound: bool = False
    oracle_samples: int = Field(default=1_000_000, ge=10_000)

    @model_validator(mode="after")
    def validate_alignment(self) -> "ScanRequest":
        if self.alignment_mode is AlignmentMode.EXACT and self.rho is None:
            raise ValueError("alignment_mode 'exact' needs rho")
        return self


class CurvePoint(BaseModel):
    sweep_value: float
    case_tag: CaseTag
    beta_parallel_bound: float
    vqi_over_c: float
    window_center_phase: float


class CurveSummary(BaseModel):
    """Minimum of the curve and where it is attained."""

    min_vqi_over_c: float
    argmin_sweep_value: float
    case_tag: CaseTag
    window_center_phase: float


class BoundCurve(BaseModel):
    """A swept V_QI/c lower bound."""

    request: ScanRequest
    points: list[CurvePoint]
    summary: CurveSummary


class WorstCaseReport(BaseModel):
    """Least favourable frame at a given speed, with the inputs echoed."""

    beta: float
    chi_deg: float
    case_tag: CaseTag
    beta_parallel_bound: float
    window_center_phase: float
    vqi_over_c: float
    inputs: dict[str, Any]


def check_prerequisite(coverage: CoverageReport | None, assume_violation: bool = False) -> None:
    """Refuse a bound claim without a day-long Bell violation.

    Raises:
        PrerequisiteError: If no passing coverage report is given and the
            check is not waived. ``details["coverage"]`` holds the report.
    """
    if assume_violation:
        logger.warning("Bell-violation prerequisite waived")
        return
    if coverage is None:
        raise PrerequisiteError(
            "A coverage report with a passing verdict is required (or waive with assume_violation)",
            {"coverage": None},
        )
    if not coverage.verdict:
        raise PrerequisiteError(
            f"Bell violation not established at all times: {len(coverage.under_covered_cells)} under-covered "
            f"cells, {len(coverage.failing_windows)} windows below threshold",
            {"coverage": coverage.model_dump(mode="json")},
        )


def evaluate_point(req: ScanRequest, frame: PrivilegedFrame) -> tuple[CaseTag, float, float, float]:
    """(case tag, |β∥| bound, window centre phase, V_QI/c) for one frame."""
    window = bound_beta_parallel(frame, req.geometry, req.clock)
    beta_parallel = window.beta_parallel_abs_bound
    if req.oracle_window_bound:
        beta_parallel = brute_force_window_bound(frame, req.geometry, req.clock, req.oracle_samples)

    if req.alignment_mode is AlignmentMode.WORST_CASE:
        value = vqi_bound_worstcase(req.geometry.rho_bar, frame.beta, beta_parallel)
        return window.case_tag, beta_parallel, window.window_center_phase, value

    lo, hi = window_beta_parallel_range(frame, req.geometry, req.clock, window.window_center_phase)
    if req.alignment_mode is AlignmentMode.OPTIMIZED:
        rho = -0.5 * (lo + hi)
    else:
        rho = req.rho
    # the bound falls with |ρ + β∥|, so the worst moment is an endpoint
    worst = lo if abs(rho + lo) >= abs(rho + hi) else hi
    worst = max(-frame.beta, min(frame.beta, worst))
    value = vqi_bound_exact(rho, frame.beta, worst)
    return window.case_tag, abs(worst), window.window_center_phase, value


def _frames(req: ScanRequest) -> list[PrivilegedFrame]:
    sweep = req.sweep
    if isinstance(sweep, ChiSweep):
        return [PrivilegedFrame(beta=sweep.beta, chi_deg=float(chi)) for chi in sweep.values()]
    return [PrivilegedFrame(beta=float(beta), chi_deg=sweep.chi_deg) for beta in sweep.values()]


def _run(req: ScanRequest, max_workers: int) -> BoundCurve:
    frames = _frames(req)
    coordinates = req.sweep.values()

    if max_workers > 1 and len(frames) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda f: evaluate_point(req, f), frames))
    else:
        results = [evaluate_point(req, f) for f in frames]

    points = [
        CurvePoint(
            sweep_value=float(x),
            case_tag=case,
            beta_parallel_bound=bound,
            vqi_over_c=value,
            window_center_phase=center,
        )
        for x, (case, bound, center, value) in zip(coordinates, results)
    ]
    best = min(points, key=lambda p: p.vqi_over_c)
    summary = CurveSummary(
        min_vqi_over_c=best.vqi_over_c,
        argmin_sweep_value=best.sweep_value,
        case_tag=best.case_tag,
        window_center_phase=best.window_center_phase,
    )
    logger.info(
        f"{req.sweep.kind} scan: {len(points)} points, minimum V_QI/c={best.vqi_over_c:.4g} "
        f"at {best.sweep_value:.6g}"
    )
    return BoundCurve(request=req, points=points, summary=summary)


def run_chi_scan(
    req: ScanRequest,
    coverage: CoverageReport | None = None,
    assume_violation: bool = False,
    max_workers: int = 1,
) -> BoundCurve:
    """V_QI/c lower bound as a function of χ at fixed β.

    Raises:
        InputValidationError: If the request does not hold a χ sweep.
        PrerequisiteError: If the Bell-violation prerequisite fails.
    """
    if not isinstance(req.sweep, ChiSweep):
        raise InputValidationError("run_chi_scan needs a chi sweep", {"kind": req.sweep.kind})
    check_prerequisite(coverage, assume_violation)
    return _run(req, max_workers)


def run_beta_scan(
    req: ScanRequest,
    coverage: CoverageReport | None = None,
    assume_violation: bool = False,
    max_workers: int = 1,
) -> BoundCurve:
    """V_QI/c lower bound as a function of β at fixed χ.

    Raises:
        InputValidationError: If the request does not hold a β sweep.
        PrerequisiteError: If the Bell-violation prerequisite fails.
    """
    if not isinstance(req.sweep, BetaSweep):
        raise InputValidationError("run_beta_scan needs a beta sweep", {"kind": req.sweep.kind})
    check_prerequisite(coverage, assume_violation)
    return _run(req, max_workers)


def worst_case_report(
    geometry: BaselineGeometry,
    clock: RotationClock,
    beta: float = 1.0e-3,
    chi_resolution: int = 1801,
    coverage: CoverageReport | None = None,
    assume_violation: bool = False,
    alignment_mode: AlignmentMode = AlignmentMode.WORST_CASE,
    rho: float | None = None,
) -> WorstCaseReport:
    """Global minimum of the bound over χ ∈ [0°, 180°] at speed β."""
    req = ScanRequest(
        geometry=geometry,
        clock=clock,
        sweep=ChiSweep(beta=beta, points=chi_resolution),
        alignment_mode=alignment_mode,
        rho=rho,
    )
    curve = run_chi_scan(req, coverage, assume_violation)
    best = next(p for p in curve.points if p.sweep_value == curve.summary.argmin_sweep_value)
    return WorstCaseReport(
        beta=beta,
        chi_deg=best.sweep_value,
        case_tag=best.case_tag,
        beta_parallel_bound=best.beta_parallel_bound,
        window_center_phase=best.window_center_phase,
        vqi_over_c=best.vqi_over_c,
        inputs={
            "geometry": geometry.model_dump(mode="json"),
            "clock": clock.model_dump(mode="json"),
            "beta": beta,
            "chi_resolution": chi_resolution,
            "alignment_mode": alignment_mode.value,
            "rho": rho,
            "assume_violation": assume_violation,
        },
    )


def curve_to_csv(curve: BoundCurve) -> str:
    """Render a curve; floats use 17 significant digits."""
    frame = pd.DataFrame(
        {
            "sweep_value": [p.sweep_value for p in curve.points],
            "case_tag": [p.case_tag.value for p in curve.points],
            "beta_parallel_bound": [p.beta_parallel_bound for p in curve.points],
            "vqi_over_c": [p.vqi_over_c for p in curve.points],
        },
        columns=CURVE_COLUMNS,
    )
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format="%.17g", lineterminator="\n")
    return buffer.getvalue()


def _json_float(value: float) -> float | str:
    return value if math.isfinite(value) else "inf"


def write_curve(curve: BoundCurve, out_dir: str | Path, stem: str, extra: dict[str, Any] | None = None) -> list[Path]:
    """Write ``<stem>.csv`` and ``<stem>_summary.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    summary = curve.summary.model_dump(mode="json")
    summary["min_vqi_over_c"] = _json_float(curve.summary.min_vqi_over_c)
    payload = {
        "request": curve.request.model_dump(mode="json"),
        "summary": summary,
        "points": len(curve.points),
    }
    if extra:
        payload.update(extra)
    return [
        atomic_write_text(out_dir / f"{stem}.csv", curve_to_csv(curve)),
        atomic_write_json(out_dir / f"{stem}_summary.json", payload),
    ]
