"""
Sinusoidal fits of coincidence fringes and visibility traces.

A window of bins is fitted with m + a·cos(2πx/T + φ), x being the scan
clock (record time with the halted-ramp intervals removed). With T fixed the
model is linear in (m, a cos φ, −a sin φ) and is solved by Poisson-weighted
least squares; otherwise a one-dimensional search over T wraps the linear
solve. The visibility is a/m.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from datetime import timedelta

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import minimize_scalar

from ..core.exceptions import InputValidationError
from ..experiment.simulator import DEFAULT_BIN_WIDTH_S, CoincidenceSeries
from ..physics.kinematics import sidereal_phase

logger = logging.getLogger(__name__)

CHSH_THRESHOLD = 1.0 / math.sqrt(2.0)
MIN_FIT_BINS = 8
MAX_GAP_FRACTION = 0.1
_IRLS_MAX_ITER = 50
_IRLS_TOL = 1e-12
_MODEL_FLOOR = 0.5  # counts; keeps reweighting finite near dark fringes


class SinusoidFit(BaseModel):
    """Result of one sinusoidal fit."""

    mean: float = Field(description="counts per bin")
    amplitude: float = Field(ge=0.0, description="counts per bin")
    phase: float = Field(description="radians")
    period: float = Field(description="seconds")
    visibility: float
    visibility_sigma: float = Field(ge=0.0)
    window: tuple[float, float]
    converged: bool
    n_bins: int = Field(ge=0)
    residual_sum: float = Field(default=0.0, ge=0.0, description="weighted sum of squared residuals")
    message: str | None = None

    @classmethod
    def failed(cls, window: tuple[float, float], period: float | None, n_bins: int, message: str) -> "SinusoidFit":
        return cls(
            mean=0.0,
            amplitude=0.0,
            phase=0.0,
            period=period or 0.0,
            visibility=0.0,
            visibility_sigma=0.0,
            window=window,
            converged=False,
            n_bins=n_bins,
            message=message,
        )


class VisibilityPoint(BaseModel):
    """A fitted window tagged with its position in the sidereal day."""

    window_center_s: float
    sidereal_phase: float
    fit: SinusoidFit
    above_threshold: bool


class SkippedWindow(BaseModel):
    """A window that produced no trace point, and why."""

    window: tuple[float, float]
    reason: str


class VisibilityTrace(BaseModel):
    """Sliding-window visibilities of one series."""

    window_length: float
    step: float
    fixed_period: float | None
    threshold: float = CHSH_THRESHOLD
    points: list[VisibilityPoint] = Field(default_factory=list)
    skipped: list[SkippedWindow] = Field(default_factory=list)


class StabilityReport(BaseModel):
    """Singles-rate stability over a run."""

    mean_singles_a: float
    mean_singles_b: float
    relative_spread_a: float
    relative_spread_b: float
    drift_a_per_hour: float
    drift_b_per_hour: float
    tolerance: float
    stable: bool


def scan_clock(series: CoincidenceSeries) -> np.ndarray:
    """Ramp time at each bin centre.

    Inactive bins do not advance the ramp; bins missing from the record do.
    """
    cols = series.arrays()
    if len(series) == 0:
        return np.array([], dtype=float)
    bw = series.bin_width
    centers = cols["start_time"] - cols["start_time"][0] + 0.5 * bw
    inactive = ~cols["scan_active"]
    halted_before = bw * (np.cumsum(inactive) - inactive)
    clock = centers - halted_before
    # a halted bin sits at the phase reached when the ramp stopped
    return np.where(inactive, clock - 0.5 * bw, clock)


def _design(x: np.ndarray, period: float) -> np.ndarray:
    angle = 2.0 * np.pi * x / period
    return np.column_stack([np.ones_like(x), np.cos(angle), np.sin(angle)])


def _weighted_solve(design: np.ndarray, y: np.ndarray, weights: np.ndarray) -> np.ndarray:
    root = np.sqrt(weights)
    coef, *_ = np.linalg.lstsq(design * root[:, None], y * root, rcond=None)
    return coef


def _neyman_chi2(x: np.ndarray, y: np.ndarray, period: float) -> float:
    design = _design(x, period)
    weights = 1.0 / np.maximum(y, 1.0)
    coef = _weighted_solve(design, y, weights)
    return float(np.sum(weights * (y - design @ coef) ** 2))


def _linear_fit(x: np.ndarray, y: np.ndarray, period: float, window: tuple[float, float]) -> SinusoidFit:
    design = _design(x, period)
    if np.linalg.matrix_rank(design) < 3:
        return SinusoidFit.failed(window, period, len(y), "singular design: samples do not resolve the fringe")
    weights = 1.0 / np.maximum(y, 1.0)
    coef = _weighted_solve(design, y, weights)

    # Reweight with the model: the fixed point is the Poisson ML estimate.
    for _ in range(_IRLS_MAX_ITER):
        model = design @ coef
        weights = 1.0 / np.maximum(model, _MODEL_FLOOR)
        updated = _weighted_solve(design, y, weights)
        change = np.max(np.abs(updated - coef)) / max(np.max(np.abs(updated)), 1e-300)
        coef = updated
        if change < _IRLS_TOL:
            break

    if not np.all(np.isfinite(coef)):
        return SinusoidFit.failed(window, period, len(y), "non-finite fit coefficients")

    mean, c_cos, c_sin = (float(c) for c in coef)
    if mean <= 0.0:
        return SinusoidFit.failed(window, period, len(y), f"non-positive fitted mean {mean:.3g}")

    normal = design.T @ (design * weights[:, None])
    try:
        cov = np.linalg.inv(normal)
    except np.linalg.LinAlgError:
        return SinusoidFit.failed(window, period, len(y), "singular normal matrix")

    amplitude = math.hypot(c_cos, c_sin)
    phase = math.atan2(-c_sin, c_cos)
    visibility = amplitude / mean
    if amplitude > 0.0:
        grad = np.array([-amplitude / mean**2, c_cos / (amplitude * mean), c_sin / (amplitude * mean)])
        variance = float(grad @ cov @ grad)
    else:
        variance = float(max(cov[1, 1], cov[2, 2])) / mean**2
    residual = float(np.sum(weights * (y - design @ coef) ** 2))
    # covariance scaled by the reduced chi-square, as curve_fit with absolute_sigma=False
    variance *= residual / (len(y) - 3)

    return SinusoidFit(
        mean=mean,
        amplitude=amplitude,
        phase=phase,
        period=period,
        visibility=visibility,
        visibility_sigma=math.sqrt(max(variance, 0.0)),
        window=window,
        converged=True,
        n_bins=len(y),
        residual_sum=residual,
    )


def _search_period(x: np.ndarray, y: np.ndarray, bin_width: float, nominal: float | None) -> float:
    span = float(x.max() - x.min()) + bin_width
    if nominal is not None:
        lo, hi = 0.5 * nominal, 2.0 * nominal
    else:
        lo, hi = 4.0 * bin_width, span
    grid = np.geomspace(lo, hi, 400)
    scores = np.array([_neyman_chi2(x, y, p) for p in grid])
    best = int(np.argmin(scores))
    bracket = (grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)])
    result = minimize_scalar(
        lambda p: _neyman_chi2(x, y, p), bounds=bracket, method="bounded", options={"xatol": 1e-6 * grid[best]}
    )
    return float(result.x) if result.success else float(grid[best])


def fit_window(
    series: CoincidenceSeries,
    window: tuple[float, float],
    fixed_period: float | None = None,
    nominal_period: float | None = None,
    clock: np.ndarray | None = None,
    columns: dict[str, np.ndarray] | None = None,
) -> SinusoidFit:
    """Fit the scan-active bins lying entirely inside ``window``.

    Args:
        series: Binned record.
        window: (start, end) in seconds of record time.
        fixed_period: Fringe period in seconds; fitted when omitted.
        nominal_period: Centre of the period search range when fitting T.
        clock: Precomputed ``scan_clock(series)``.
        columns: Precomputed ``series.arrays()``.

    Returns:
        The fit. Failures come back with ``converged=False`` and a message.
    """
    start, end = window
    cols = columns if columns is not None else series.arrays()
    if clock is None:
        clock = scan_clock(series)
    starts = cols["start_time"]
    inside = (starts >= start - 1e-9) & (starts + series.bin_width <= end + 1e-9)
    selected = inside & cols["scan_active"]
    n_bins = int(selected.sum())

    if fixed_period is not None and (end - start) < 1.5 * fixed_period * (1.0 - 1e-9):
        return SinusoidFit.failed(window, fixed_period, n_bins, "window shorter than 1.5 fringe periods")
    return fit_sinusoid(
        clock[selected], cols["coincidences"][selected], fixed_period, nominal_period, series.bin_width, window
    )


def fit_sinusoid(
    x: np.ndarray,
    y: np.ndarray,
    fixed_period: float | None = None,
    nominal_period: float | None = None,
    bin_width: float = DEFAULT_BIN_WIDTH_S,
    window: tuple[float, float] | None = None,
) -> SinusoidFit:
    """Fit m + a·cos(2πx/T + φ) to counts ``y`` sampled at scan times ``x``.

    Counts may be non-integer (expected values, corrected data).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        window = (float(x.min()), float(x.max())) if len(x) else (0.0, 0.0)
    if len(x) < MIN_FIT_BINS:
        return SinusoidFit.failed(window, fixed_period, len(x), f"only {len(x)} active bins (need {MIN_FIT_BINS})")
    period = fixed_period
    if period is None:
        period = _search_period(x, y, bin_width, nominal_period)
    return _linear_fit(x, y, period, window)


def fit_series(
    series: CoincidenceSeries, fixed_period: float | None = None, nominal_period: float | None = None
) -> SinusoidFit:
    """Single fit over the whole record."""
    if len(series) == 0:
        return SinusoidFit.failed((0.0, 0.0), fixed_period, 0, "empty series")
    first = series.bins[0].start_time
    last = series.bins[-1].start_time + series.bin_width
    return fit_window(series, (first, last), fixed_period, nominal_period)


def net_visibility(fit: SinusoidFit, accidental_rate: float) -> float:
    """Visibility with the accidental background (counts per bin) removed.

    Raises:
        InputValidationError: If the background is negative or not below the
            fitted mean.
    """
    if accidental_rate < 0.0 or accidental_rate >= fit.mean:
        raise InputValidationError(
            f"accidental_rate must be in [0, mean={fit.mean:.4g}), got {accidental_rate}",
            {"accidental_rate": accidental_rate, "mean": fit.mean},
        )
    return fit.amplitude / (fit.mean - accidental_rate)


def sliding_scan(
    series: CoincidenceSeries,
    window_length: float | None = None,
    step: float | None = None,
    fixed_period: float | None = None,
    threshold: float = CHSH_THRESHOLD,
    max_gap_fraction: float = MAX_GAP_FRACTION,
    max_workers: int = 1,
) -> VisibilityTrace:
    """Fit a window slid along the record.

    Windows whose halted or missing time exceeds ``max_gap_fraction`` of the
    window are dropped; the others are fitted on their active bins. Failed
    windows are recorded in ``skipped`` and leave a gap in the trace.

    Raises:
        InputValidationError: If neither a window length nor a period is given.
    """
    if window_length is None:
        if fixed_period is None:
            raise InputValidationError("window_length or fixed_period is required")
        window_length = 1.5 * fixed_period
    if step is None:
        step = series.bin_width
    if window_length <= 0.0 or step <= 0.0:
        raise InputValidationError(
            "window_length and step must be > 0", {"window_length": window_length, "step": step}
        )

    trace = VisibilityTrace(window_length=window_length, step=step, fixed_period=fixed_period, threshold=threshold)
    if len(series) == 0:
        return trace

    cols = series.arrays()
    clock = scan_clock(series)
    bw = series.bin_width
    first = cols["start_time"][0]
    end = cols["start_time"][-1] + bw
    count = int(math.floor((end - first - window_length) / step + 1e-9)) + 1
    if end - first < window_length - 1e-9:
        count = 0
    slots = int(math.floor(window_length / bw + 1e-9))
    anchor = series.wall_clock_anchor

    def _evaluate(k: int) -> VisibilityPoint | SkippedWindow:
        ws = first + k * step
        we = ws + window_length
        inside = (cols["start_time"] >= ws - 1e-9) & (cols["start_time"] + bw <= we + 1e-9)
        active = int((inside & cols["scan_active"]).sum())
        gap = (slots - active) * bw
        if gap > max_gap_fraction * window_length:
            return SkippedWindow(window=(ws, we), reason=f"scan gap of {gap:.0f} s in window")
        fit = fit_window(series, (ws, we), fixed_period, clock=clock, columns=cols)
        if not fit.converged:
            return SkippedWindow(window=(ws, we), reason=fit.message or "fit failed")
        center = 0.5 * (ws + we)
        phase = sidereal_phase(anchor + timedelta(seconds=center))
        return VisibilityPoint(
            window_center_s=center,
            sidereal_phase=phase,
            fit=fit,
            above_threshold=fit.visibility > threshold,
        )

    if max_workers > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_evaluate, range(count)))
    else:
        results = [_evaluate(k) for k in range(count)]

    for result in results:
        if isinstance(result, VisibilityPoint):
            trace.points.append(result)
        else:
            trace.skipped.append(result)

    if trace.skipped:
        logger.warning(f"{len(trace.skipped)} of {count} windows skipped")
    logger.info(f"Fitted {len(trace.points)} windows of {window_length:.0f} s")
    return trace


def stability_report(series: CoincidenceSeries, tolerance: float = 0.05) -> StabilityReport:
    """Singles-rate means, relative spreads and linear drifts."""
    cols = series.arrays()
    hours = cols["start_time"] / 3600.0
    stats: list[tuple[float, float, float]] = []
    for key in ("singles_a", "singles_b"):
        values = cols[key]
        mean = float(values.mean()) if len(values) else 0.0
        spread = float(values.std() / mean) if mean > 0 else 0.0
        drift = float(np.polyfit(hours, values, 1)[0]) if len(values) > 1 else 0.0
        stats.append((mean, spread, drift))

    (mean_a, spread_a, drift_a), (mean_b, spread_b, drift_b) = stats
    return StabilityReport(
        mean_singles_a=mean_a,
        mean_singles_b=mean_b,
        relative_spread_a=spread_a,
        relative_spread_b=spread_b,
        drift_a_per_hour=drift_a,
        drift_b_per_hour=drift_b,
        tolerance=tolerance,
        stable=spread_a <= tolerance and spread_b <= tolerance,
    )
