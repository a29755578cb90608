"""
Configuration management for vqibound.

Two layers: process settings read from ``VQI_*`` environment variables, and
the run configuration, a strict JSON document describing one experiment and
its sweeps. Run-config defaults describe an 18 km fiber baseline with a
360 s fringe period.
"""

import hashlib
import json
import logging
from datetime import datetime
from enum import Enum
from pathlib import Path

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..analysis.fringe import CHSH_THRESHOLD, MAX_GAP_FRACTION
from ..experiment.simulator import (
    DEFAULT_BIN_WIDTH_S,
    DEFAULT_RUN_START,
    MAX_RUN_DURATION_S,
    PhaseScan,
    RunSchedule,
    SourceModel,
)
from ..physics.kinematics import BaselineGeometry, RotationClock
from ..physics.metrology import (
    DispersionSpec,
    FiberPath,
    SiteCoordinates,
    alignment_from_measurements,
    baseline_from_sites,
)
from ..pipeline.scan import AlignmentMode, BetaSweep, ChiSweep
from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Process-wide settings."""

    model_config = SettingsConfigDict(env_prefix="VQI_", env_file=".env", case_sensitive=False, extra="ignore")

    log_level: str = Field(default="INFO")
    log_format: str = Field(default="%(asctime)s %(levelname)s %(name)s: %(message)s")
    max_workers: int = Field(default=1, ge=1)
    csv_float_format: str = Field(default="%.10g")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is supported."""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if v.upper() not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v.upper()

    @field_validator("csv_float_format")
    @classmethod
    def validate_float_format(cls, v: str) -> str:
        try:
            v % 1.5
        except (TypeError, ValueError):
            raise ValueError(f"csv_float_format {v!r} is not a %-format for floats")
        return v


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get process settings."""
    return settings


class _Section(BaseModel):
    model_config = {"extra": "forbid"}


class MetrologySection(_Section):
    """Baseline and alignment, given directly or derived from measurements.

    Sites, when both are given, replace ``r_ab`` and ``alpha_deg``. Fibers
    and dispersion, when all three are given, replace ``rho_bar``.
    """

    r_ab: float = Field(default=18_000.0, gt=0.0, description="meters")
    alpha_deg: float = Field(default=5.8, gt=-90.0, lt=90.0)
    rho_bar: float = Field(default=5.4e-6, ge=0.0, lt=1.0)
    fiber_a: FiberPath | None = None
    fiber_b: FiberPath | None = None
    dispersion: DispersionSpec | None = None
    site_a: SiteCoordinates | None = None
    site_b: SiteCoordinates | None = None

    @model_validator(mode="after")
    def validate_pairs(self) -> "MetrologySection":
        if (self.site_a is None) != (self.site_b is None):
            raise ValueError("site_a and site_b must be given together")
        measured = [self.fiber_a, self.fiber_b, self.dispersion]
        if any(m is not None for m in measured) and not all(m is not None for m in measured):
            raise ValueError("fiber_a, fiber_b and dispersion must be given together")
        return self

    def baseline(self) -> BaselineGeometry:
        """Resolve the section into the baseline geometry used by the sweeps."""
        if self.site_a is not None and self.site_b is not None:
            geometry = baseline_from_sites(self.site_a, self.site_b)
        else:
            geometry = BaselineGeometry(r_ab=self.r_ab, alpha_deg=self.alpha_deg)

        rho_bar = self.rho_bar
        if self.fiber_a is not None and self.fiber_b is not None and self.dispersion is not None:
            rho_bar = alignment_from_measurements(self.fiber_a, self.fiber_b, self.dispersion, geometry.r_ab).rho_bar
        return BaselineGeometry(**{**geometry.model_dump(), "rho_bar": rho_bar})


class RunSpec(_Section):
    """One scheduled run; ``ramp_segments`` override the scan section's."""

    start: datetime = DEFAULT_RUN_START
    duration: float = Field(default=4 * 3600.0, gt=0.0, le=MAX_RUN_DURATION_S, description="seconds")
    ramp_segments: list[tuple[float, float]] | None = None


class ScanSection(_Section):
    """Interference-phase ramp and run schedule."""

    fringe_period: float = Field(default=360.0, gt=0.0, description="seconds")
    initial_phase: float = 0.0
    ramp_segments: list[tuple[float, float]] | None = None
    bin_width: float = Field(default=DEFAULT_BIN_WIDTH_S, gt=0.0)
    runs: list[RunSpec] = Field(default_factory=lambda: [RunSpec()], min_length=1)

    def schedules(self) -> list[RunSchedule]:
        result = []
        for run in self.runs:
            segments = run.ramp_segments if run.ramp_segments is not None else self.ramp_segments
            phase_scan = PhaseScan(
                fringe_period=self.fringe_period, initial_phase=self.initial_phase, ramp_segments=segments
            )
            result.append(
                RunSchedule(start=run.start, duration=run.duration, scan=phase_scan, bin_width=self.bin_width)
            )
        return result

    def clock(self) -> RotationClock:
        """Integration time T of the Bell test is one fringe period."""
        return RotationClock.sidereal(self.fringe_period)


class FitPeriodMode(str, Enum):
    FIXED = "fixed"
    FITTED = "fitted"


class AnalysisSection(_Section):
    """Windowed fitting and coverage."""

    window_length: float | None = Field(default=None, gt=0.0, description="seconds, default 1.5 fringe periods")
    step: float | None = Field(default=None, gt=0.0, description="seconds, default one bin")
    threshold: float = Field(default=CHSH_THRESHOLD, gt=0.0, le=1.0)
    period_mode: FitPeriodMode = FitPeriodMode.FIXED
    max_gap_fraction: float = Field(default=MAX_GAP_FRACTION, ge=0.0, le=1.0)
    coverage_resolution_s: float = Field(default=300.0, gt=0.0)
    min_multiplicity: int = Field(default=1, ge=1)
    stability_tolerance: float = Field(default=0.05, gt=0.0)


class SweepSection(_Section):
    """Frame sweeps and how the alignment enters them."""

    chi: ChiSweep = Field(default_factory=ChiSweep)
    beta: BetaSweep = Field(default_factory=BetaSweep)
    alignment_mode: AlignmentMode = AlignmentMode.WORST_CASE
    rho: float | None = Field(default=None, gt=-1.0, lt=1.0)
    oracle_window_bound: bool = False

    @model_validator(mode="after")
    def validate_alignment(self) -> "SweepSection":
        if self.alignment_mode is AlignmentMode.EXACT and self.rho is None:
            raise ValueError("alignment_mode 'exact' needs rho")
        return self


class RunConfig(_Section):
    """Complete configuration of a simulate/fit/scan run."""

    metrology: MetrologySection = Field(default_factory=MetrologySection)
    source: SourceModel = Field(default_factory=SourceModel)
    scan: ScanSection = Field(default_factory=ScanSection)
    analysis: AnalysisSection = Field(default_factory=AnalysisSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    seed: int = Field(default=0, ge=0)


def config_digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def load_run_config(path: str | Path) -> tuple[RunConfig, bytes]:
    """Read and validate a JSON run configuration.

    Args:
        path: JSON file.

    Returns:
        Tuple of the parsed config and the raw file bytes (for hashing).

    Raises:
        ConfigurationError: If the file is missing, not JSON, or violates the
            schema. ``details["errors"]`` lists the schema diagnostics.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config not found: {path}", {"path": str(path)})
    raw = path.read_bytes()
    try:
        document = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"config is not valid JSON: {path}: {e}", {"path": str(path)})
    try:
        config = RunConfig.model_validate(document)
    except ValidationError as e:
        errors = [
            {"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]}
            for err in e.errors(include_url=False)
        ]
        raise ConfigurationError(f"invalid config {path}: {len(errors)} schema error(s)", {"errors": errors})
    logger.debug(f"Loaded run config {path} ({config_digest(raw)[:12]})")
    return config, raw
