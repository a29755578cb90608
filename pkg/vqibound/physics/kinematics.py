"""
Earth-rotation kinematics of the baseline component β∥.

As the Earth turns, the component of its velocity along the A–B axis
oscillates with the sidereal period:

    β∥(t) = β cos χ sin α + β sin χ cos α cos ωt

A Bell violation integrated over a time T only constrains V_QI through the
largest |β∥| seen during the integration, so what matters is how small |β∥|
can be kept over the best length-T window of the day.
"""

import logging
import math
from datetime import datetime, timezone
from enum import Enum
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.ndimage import maximum_filter1d

from .relativity import PrivilegedFrame

logger = logging.getLogger(__name__)

SIDEREAL_DAY_S = 86164.0905
SIDEREAL_OMEGA = 2.0 * math.pi / SIDEREAL_DAY_S

# Earth rotation angle: theta = 2*pi*(ERA_OFFSET + ERA_RATE * days since J2000)
J2000_EPOCH = datetime(2000, 1, 1, 12, 0, 0, tzinfo=timezone.utc)
ERA_OFFSET = 0.7790572732640
ERA_RATE = 1.00273781191135448


class CaseTag(str, Enum):
    """Which window bound applies to a frame."""

    CROSSING = "i"  # β∥ has a zero crossing during the day
    POLAR = "ii"  # v points close to a pole, the constant term dominates


class BaselineGeometry(BaseModel):
    """The A–B axis: chord length, inclination to the equator, alignment bound."""

    model_config = {"frozen": True, "extra": "forbid"}

    r_ab: float = Field(gt=0.0, description="meters")
    alpha_deg: float = Field(gt=-90.0, lt=90.0)
    rho_bar: float = Field(default=0.0, ge=0.0, lt=1.0)


class RotationClock(BaseModel):
    """Earth angular velocity and the Bell-violation integration time T."""

    model_config = {"frozen": True, "extra": "forbid"}

    omega: float = Field(default=SIDEREAL_OMEGA, gt=0.0, description="rad/s")
    window_T: float = Field(gt=0.0, description="seconds")

    @model_validator(mode="after")
    def validate_window(self) -> "RotationClock":
        if self.omega * self.window_T >= 2.0 * math.pi:
            raise ValueError("window_T must be shorter than one revolution")
        return self

    @classmethod
    def sidereal(cls, window_T: float) -> "RotationClock":
        return cls(omega=SIDEREAL_OMEGA, window_T=window_T)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def half_angle(self) -> float:
        """ωT/2, the rotation angle covered by half a window."""
        return 0.5 * self.omega * self.window_T

    @property
    def c_t(self) -> float:
        """C_T = cos²(ωT/4)."""
        return math.cos(0.25 * self.omega * self.window_T) ** 2


class WindowBound(BaseModel):
    """Upper bound on |β∥| over the best length-T window of the day."""

    model_config = {"frozen": True, "extra": "forbid"}

    case_tag: CaseTag
    beta_parallel_abs_bound: float = Field(ge=0.0)
    window_center_phase: float = Field(description="ωt at the window centre, radians")


def _terms(frame: PrivilegedFrame, geom: BaselineGeometry) -> tuple[float, float]:
    """Constant and oscillating amplitudes (A, B) of β∥ = A + B cos ωt."""
    chi = math.radians(frame.chi_deg)
    alpha = math.radians(geom.alpha_deg)
    return (
        frame.beta * math.cos(chi) * math.sin(alpha),
        frame.beta * math.sin(chi) * math.cos(alpha),
    )


def _folded_trig(chi_deg: float) -> tuple[float, float]:
    """(|sin χ|, |cos χ|) evaluated on min(χ, 180°−χ), symmetric bit for bit."""
    folded = math.radians(min(chi_deg, 180.0 - chi_deg))
    return math.sin(folded), math.cos(folded)


def beta_parallel_at(
    frame: PrivilegedFrame, geom: BaselineGeometry, clock: RotationClock, t: float | np.ndarray
) -> float | np.ndarray:
    """β∥ at time t (seconds, ωt = 0 when the oscillating term peaks)."""
    a_term, b_term = _terms(frame, geom)
    values = a_term + b_term * np.cos(clock.omega * np.asarray(t, dtype=float))
    if np.ndim(values) == 0:
        return float(values)
    return values


def classify_case(frame: PrivilegedFrame, geom: BaselineGeometry, clock: RotationClock) -> CaseTag:
    """Case (i) when C_T |tan χ| > |tan α|, otherwise case (ii)."""
    if frame.chi_deg == 90.0:
        return CaseTag.CROSSING
    sin_chi, cos_chi = _folded_trig(frame.chi_deg)
    tan_alpha = abs(math.tan(math.radians(geom.alpha_deg)))
    if clock.c_t * sin_chi / cos_chi > tan_alpha:
        return CaseTag.CROSSING
    return CaseTag.POLAR


def _balanced_center(a_term: float, b_term: float, half: float) -> float:
    """Centre phase of the window minimising max |A + B cos ωt| around a crossing.

    With A, B ≥ 0 the window [θ₀ − h, θ₀ + h] is monotone and its end values
    are opposite when cos θ₀ = −A / (B cos h); that needs A ≤ B cos²h. Past
    that point the window centred on the minimum at π is optimal. Negative
    signs are folded back by symmetry.
    """
    if b_term == 0.0:
        return 0.0
    if b_term < 0.0:
        a_term, b_term = -a_term, -b_term
    mirrored = a_term < 0.0
    a_term = abs(a_term)
    cos_h = math.cos(half)
    if cos_h > 0.0 and a_term <= b_term * cos_h * cos_h:
        center = math.acos(-a_term / (b_term * cos_h))
    else:
        center = math.pi
    return math.pi - center if mirrored else center


def bound_beta_parallel(frame: PrivilegedFrame, geom: BaselineGeometry, clock: RotationClock) -> WindowBound:
    """Bound on |β∥| over a length-T window and where that window sits.

    Case (i): the window straddles a zero crossing of β∥ and the bound is the
    linearised excursion β √(sin²χ cos²α − cos²χ sin²α) · ωT/2. The reported
    centre is the optimal window near the crossing, whose largest |β∥| never
    exceeds the bound.
    Case (ii): the window is centred on the extremum of the oscillating term
    that opposes the constant one, giving
    β (|cos χ sin α| − |sin χ cos α| cos(ωT/2)), clamped at zero.

    Returns:
        WindowBound with the case tag, the bound and the centre phase ωt₀.
    """
    case = classify_case(frame, geom, clock)
    sin_chi, cos_chi = _folded_trig(frame.chi_deg)
    alpha = math.radians(geom.alpha_deg)
    sin_alpha, cos_alpha = abs(math.sin(alpha)), math.cos(alpha)
    a_term, b_term = _terms(frame, geom)

    if case is CaseTag.CROSSING:
        radicand = (sin_chi * cos_alpha) ** 2 - (cos_chi * sin_alpha) ** 2
        bound = frame.beta * math.sqrt(max(radicand, 0.0)) * clock.half_angle
        center = _balanced_center(a_term, b_term, clock.half_angle)
    else:
        bound = frame.beta * (cos_chi * sin_alpha - sin_chi * cos_alpha * math.cos(clock.half_angle))
        bound = max(bound, 0.0)
        center = math.pi if a_term * b_term > 0.0 else 0.0

    logger.debug(
        f"chi={frame.chi_deg} beta={frame.beta} case={case.value} bound={bound:.6e} center={center:.6f}"
    )
    return WindowBound(case_tag=case, beta_parallel_abs_bound=bound, window_center_phase=center)


def window_beta_parallel_range(
    frame: PrivilegedFrame, geom: BaselineGeometry, clock: RotationClock, center_phase: float
) -> tuple[float, float]:
    """(min, max) of β∥ over the length-T window centred at ``center_phase``."""
    half = clock.half_angle
    lo_phase, hi_phase = center_phase - half, center_phase + half
    phases = [lo_phase, hi_phase]
    # interior extrema of cos at multiples of π
    k = math.ceil(lo_phase / math.pi)
    while k * math.pi <= hi_phase:
        phases.append(k * math.pi)
        k += 1
    a_term, b_term = _terms(frame, geom)
    values = [a_term + b_term * math.cos(p) for p in phases]
    return min(values), max(values)


@lru_cache(maxsize=4)
def _cos_table(samples: int) -> np.ndarray:
    table = np.cos(np.arange(samples) * (2.0 * math.pi / samples))
    table.flags.writeable = False
    return table


def brute_force_window_bound(
    frame: PrivilegedFrame,
    geom: BaselineGeometry,
    clock: RotationClock,
    samples_per_period: int = 1_000_000,
) -> float:
    """Optimal window bound on |β∥| by dense sampling of one full period.

    For every sample taken as a window centre, the maximum of |β∥| over the
    samples lying inside the length-T window is computed (a sliding maximum
    with periodic wrap); the minimum over centres is returned.

    Raises:
        ValueError: If fewer than 10⁴ samples per period are requested.
    """
    if samples_per_period < 10_000:
        raise ValueError("samples_per_period must be >= 10000")

    a_term, b_term = _terms(frame, geom)
    magnitude = np.abs(a_term + b_term * _cos_table(samples_per_period))

    step = 2.0 * math.pi / samples_per_period
    # the sampled window around the nearest sample to any centre stays inside
    # the continuous window, so the result never exceeds the true optimum
    half_width = max(int(math.floor(clock.half_angle / step - 0.5)), 0)
    window_max = maximum_filter1d(magnitude, size=2 * half_width + 1, mode="wrap")
    return float(window_max.min())


def sidereal_phase(moment: datetime | np.ndarray) -> float | np.ndarray:
    """Earth rotation angle in [0, 2π) at a UTC instant.

    Naive datetimes are taken as UTC. Only the topology of day coverage
    depends on this value, so UT1−UTC is ignored.
    """
    if isinstance(moment, datetime):
        if moment.tzinfo is None:
            moment = moment.replace(tzinfo=timezone.utc)
        days = (moment - J2000_EPOCH).total_seconds() / 86400.0
        return 2.0 * math.pi * ((ERA_OFFSET + ERA_RATE * days) % 1.0)

    seconds = np.asarray(moment, dtype=float)
    days = seconds / 86400.0
    return 2.0 * np.pi * np.mod(ERA_OFFSET + ERA_RATE * days, 1.0)


def seconds_since_j2000(moment: datetime) -> float:
    """UTC seconds elapsed since the J2000 epoch."""
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return (moment - J2000_EPOCH).total_seconds()
