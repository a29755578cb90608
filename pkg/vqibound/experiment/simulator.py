"""
Stochastic coincidence record of the long-distance Franson experiment.

The source produces a coincidence rate modulated by the two-photon
interference phase, plus a constant accidental background. The phase is
scanned linearly by a temperature ramp and frozen whenever the ramp stops.
Counts are drawn per time bin as independent Poisson variates.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timedelta, timezone

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from ..physics.kinematics import SIDEREAL_DAY_S, sidereal_phase

logger = logging.getLogger(__name__)

DEFAULT_BIN_WIDTH_S = 60.0
DEFAULT_RUN_START = datetime(2008, 1, 1, 0, 0, 0, tzinfo=timezone.utc)
MAX_RUN_DURATION_S = 15 * 3600.0


class SourceModel(BaseModel):
    """Coincidence and singles rates of the photon-pair source (per minute)."""

    model_config = {"frozen": True, "extra": "forbid"}

    true_coincidence_rate: float = Field(default=30.5, ge=0.0)
    accidental_rate: float = Field(default=2.5, ge=0.0)
    source_visibility: float = Field(default=0.948, ge=0.0, le=1.0)
    singles_rate_a: float = Field(default=1.0e4, ge=0.0)
    singles_rate_b: float = Field(default=1.0e4, ge=0.0)
    singles_drift_a: float = Field(default=0.0, description="counts/min per hour")
    singles_drift_b: float = Field(default=0.0, description="counts/min per hour")

    @property
    def mean_coincidence_rate(self) -> float:
        return self.true_coincidence_rate + self.accidental_rate

    @property
    def raw_visibility(self) -> float:
        """Visibility of the expected rate, accidentals included."""
        total = self.mean_coincidence_rate
        if total == 0.0:
            return 0.0
        return self.source_visibility * self.true_coincidence_rate / total


class PhaseScan(BaseModel):
    """Linear interference-phase ramp, halted between ramp segments.

    ``ramp_segments`` of None means the ramp runs for the whole record.
    """

    model_config = {"frozen": True, "extra": "forbid"}

    fringe_period: float = Field(default=360.0, gt=0.0, description="seconds")
    initial_phase: float = 0.0
    ramp_segments: list[tuple[float, float]] | None = None

    @field_validator("ramp_segments")
    @classmethod
    def validate_segments(cls, v: list[tuple[float, float]] | None) -> list[tuple[float, float]] | None:
        if v is None:
            return v
        previous_end = -math.inf
        for start, end in v:
            if not end > start:
                raise ValueError(f"ramp segment ({start}, {end}) must have end > start")
            if start < previous_end:
                raise ValueError("ramp segments must be disjoint and ordered")
            previous_end = end
        return v

    def active_time(self, t: float | np.ndarray) -> np.ndarray:
        """Ramp time elapsed between the start of the record and t."""
        t = np.asarray(t, dtype=float)
        if self.ramp_segments is None:
            return np.clip(t, 0.0, None)
        elapsed = np.zeros_like(t)
        for start, end in self.ramp_segments:
            elapsed += np.clip(np.minimum(t, end) - start, 0.0, end - start)
        return elapsed

    def is_active(self, t: float | np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.ramp_segments is None:
            return np.ones_like(t, dtype=bool)
        active = np.zeros_like(t, dtype=bool)
        for start, end in self.ramp_segments:
            active |= (t >= start) & (t < end)
        return active

    def phase_at(self, t: float | np.ndarray) -> np.ndarray:
        return self.initial_phase + 2.0 * np.pi * self.active_time(t) / self.fringe_period


class CoincidenceBin(BaseModel):
    """Counts recorded in one time bin."""

    model_config = {"frozen": True}

    start_time: float = Field(description="seconds since run start")
    wall_clock: datetime
    singles_a: int = Field(ge=0)
    singles_b: int = Field(ge=0)
    coincidences: int = Field(ge=0)
    scan_active: bool = True


class CoincidenceSeries(BaseModel):
    """Time-binned record of one measurement run."""

    bin_width: float = Field(default=DEFAULT_BIN_WIDTH_S, gt=0.0)
    bins: list[CoincidenceBin] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.bins)

    @property
    def wall_clock_anchor(self) -> datetime | None:
        """Wall-clock time of start_time = 0."""
        if not self.bins:
            return None
        first = self.bins[0]
        return first.wall_clock - timedelta(seconds=first.start_time)

    def to_frame(self) -> pd.DataFrame:
        """Bins as a DataFrame, one row per bin."""
        columns = ["start_time", "wall_clock", "singles_a", "singles_b", "coincidences", "scan_active"]
        if not self.bins:
            return pd.DataFrame(columns=columns)
        return pd.DataFrame([b.model_dump() for b in self.bins], columns=columns)

    def arrays(self) -> dict[str, np.ndarray]:
        """Numeric columns as numpy arrays."""
        return {
            "start_time": np.array([b.start_time for b in self.bins], dtype=float),
            "singles_a": np.array([b.singles_a for b in self.bins], dtype=float),
            "singles_b": np.array([b.singles_b for b in self.bins], dtype=float),
            "coincidences": np.array([b.coincidences for b in self.bins], dtype=float),
            "scan_active": np.array([b.scan_active for b in self.bins], dtype=bool),
        }


class RunSchedule(BaseModel):
    """One measurement run of a multi-day campaign."""

    model_config = {"frozen": True, "extra": "forbid"}

    start: datetime
    duration: float = Field(gt=0.0, le=MAX_RUN_DURATION_S, description="seconds")
    scan: PhaseScan = Field(default_factory=PhaseScan)
    bin_width: float = Field(default=DEFAULT_BIN_WIDTH_S, gt=0.0)


class DayCoverage(BaseModel):
    """Which sidereal phases a set of runs covers, and how many times."""

    cell_count: int = Field(ge=1)
    multiplicity: list[int]
    complete: bool
    uncovered_cells: list[int]

    @property
    def min_multiplicity(self) -> int:
        return min(self.multiplicity) if self.multiplicity else 0

    @property
    def covered_fraction(self) -> float:
        return sum(1 for m in self.multiplicity if m > 0) / self.cell_count


class DaySchedule(BaseModel):
    """Series of a campaign together with its coverage metadata."""

    series: list[CoincidenceSeries]
    coverage: DayCoverage


def coincidence_rate_at(model: SourceModel, scan: PhaseScan, t: float | np.ndarray) -> float | np.ndarray:
    """Expected coincidence rate (per minute) at time t."""
    phase = scan.phase_at(t)
    rate = model.true_coincidence_rate * (1.0 + model.source_visibility * np.cos(phase)) + model.accidental_rate
    if np.ndim(rate) == 0:
        return float(rate)
    return rate


def _bin_starts(duration: float, bin_width: float) -> np.ndarray:
    count = int(math.floor(duration / bin_width + 1e-9)) if duration > 0 else 0
    return np.arange(count) * bin_width


def expected_counts(
    model: SourceModel, scan: PhaseScan, duration: float, bin_width: float = DEFAULT_BIN_WIDTH_S
) -> dict[str, np.ndarray]:
    """Noiseless per-bin means, rates taken at bin centres."""
    starts = _bin_starts(duration, bin_width)
    centers = starts + 0.5 * bin_width
    minutes = bin_width / 60.0
    hours = centers / 3600.0
    return {
        "start_time": starts,
        "coincidences": coincidence_rate_at(model, scan, centers) * minutes,
        "singles_a": np.clip(model.singles_rate_a + model.singles_drift_a * hours, 0.0, None) * minutes,
        "singles_b": np.clip(model.singles_rate_b + model.singles_drift_b * hours, 0.0, None) * minutes,
        "scan_active": scan.is_active(centers),
    }


def simulate_series(
    model: SourceModel,
    scan: PhaseScan,
    duration: float,
    bin_width: float = DEFAULT_BIN_WIDTH_S,
    seed: int | np.random.SeedSequence = 0,
    start: datetime = DEFAULT_RUN_START,
) -> CoincidenceSeries:
    """Draw one run's binned singles and coincidence counts.

    Args:
        model: Source rates.
        scan: Phase ramp.
        duration: Run length in seconds; a trailing partial bin is dropped.
        bin_width: Bin width in seconds.
        seed: Seed of the run's random stream.
        start: Wall-clock time of the start of the run.

    Returns:
        The simulated series. Identical arguments give identical series.
    """
    expected = expected_counts(model, scan, duration, bin_width)
    rng = np.random.default_rng(seed)
    coincidences = rng.poisson(expected["coincidences"])
    singles_a = rng.poisson(expected["singles_a"])
    singles_b = rng.poisson(expected["singles_b"])

    bins = [
        CoincidenceBin(
            start_time=float(t0),
            wall_clock=start + timedelta(seconds=float(t0)),
            singles_a=int(sa),
            singles_b=int(sb),
            coincidences=int(cc),
            scan_active=bool(active),
        )
        for t0, sa, sb, cc, active in zip(
            expected["start_time"], singles_a, singles_b, coincidences, expected["scan_active"]
        )
    ]
    logger.debug(f"Simulated {len(bins)} bins of {bin_width} s starting {start.isoformat()}")
    return CoincidenceSeries(bin_width=bin_width, bins=bins)


def sidereal_cell_count(resolution_s: float) -> int:
    """Number of equal sidereal-phase cells of roughly ``resolution_s`` each."""
    return max(1, int(round(SIDEREAL_DAY_S / resolution_s)))


def run_coverage(runs: list[RunSchedule], resolution_s: float = 300.0) -> DayCoverage:
    """Multiplicity with which the run spans cover each sidereal cell.

    A cell counts as covered by a run when its centre phase lies inside the
    phase interval swept during the run.
    """
    cells = sidereal_cell_count(resolution_s)
    centers = (np.arange(cells) + 0.5) * (2.0 * np.pi / cells)
    multiplicity = np.zeros(cells, dtype=int)
    for run in runs:
        start_phase = sidereal_phase(run.start)
        span = 2.0 * np.pi * run.duration / SIDEREAL_DAY_S
        if span >= 2.0 * np.pi:
            multiplicity += 1
            continue
        offset = np.mod(centers - start_phase, 2.0 * np.pi)
        multiplicity += (offset < span).astype(int)

    uncovered = [int(i) for i in np.flatnonzero(multiplicity == 0)]
    return DayCoverage(
        cell_count=cells,
        multiplicity=multiplicity.tolist(),
        complete=not uncovered,
        uncovered_cells=uncovered,
    )


def compose_day(
    runs: list[RunSchedule],
    model: SourceModel,
    seed: int = 0,
    resolution_s: float = 300.0,
    max_workers: int = 1,
) -> DaySchedule:
    """Simulate a campaign of runs spread over several days.

    Each run draws from its own stream spawned from ``seed`` by run index, so
    the output does not depend on ``max_workers``.
    """
    streams = np.random.SeedSequence(seed).spawn(len(runs))

    def _simulate(index: int) -> CoincidenceSeries:
        run = runs[index]
        return simulate_series(model, run.scan, run.duration, run.bin_width, streams[index], run.start)

    if max_workers > 1 and len(runs) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            series = list(pool.map(_simulate, range(len(runs))))
    else:
        series = [_simulate(i) for i in range(len(runs))]

    coverage = run_coverage(runs, resolution_s)
    if not coverage.complete:
        logger.warning(
            f"Run set leaves {len(coverage.uncovered_cells)} of {coverage.cell_count} sidereal cells uncovered"
        )
    logger.info(f"Composed {len(series)} runs, minimum sidereal multiplicity {coverage.min_multiplicity}")
    return DaySchedule(series=series, coverage=coverage)
