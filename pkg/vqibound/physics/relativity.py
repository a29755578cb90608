"""
Lower bounds on the speed of a superluminal influence in a privileged frame.

Two independent routes are provided: the closed-form bounds in terms of the
alignment ρ and the baseline component β∥ of the Earth's velocity, and a
direct Lorentz transformation of the two detection events. The second one is
the oracle that validates the first.

All speeds are dimensionless fractions of c. A bound that does not constrain
the influence at all (simultaneous events in F) is reported as ``UNBOUNDED``.
"""

import math
from typing import overload

import numpy as np
from pydantic import BaseModel, Field, field_validator

from ..core.exceptions import InputValidationError

SPEED_OF_LIGHT = 299_792_458.0  # m/s
UNBOUNDED = math.inf

Vector3 = tuple[float, float, float]


class SpacetimeEvent(BaseModel):
    """An event in the Earth-centred inertial frame."""

    model_config = {"frozen": True}

    position: Vector3 = Field(description="meters")
    time: float = Field(description="seconds")

    @field_validator("position")
    @classmethod
    def validate_position(cls, v: Vector3) -> Vector3:
        if not all(math.isfinite(x) for x in v):
            raise ValueError("position components must be finite")
        return v

    @field_validator("time")
    @classmethod
    def validate_time(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("time must be finite")
        return v


class FrameVelocity(BaseModel):
    """Velocity of the Earth frame relative to F, as a β-vector."""

    model_config = {"frozen": True}

    velocity: Vector3

    @field_validator("velocity")
    @classmethod
    def validate_velocity(cls, v: Vector3) -> Vector3:
        if not all(math.isfinite(x) for x in v):
            raise ValueError("velocity components must be finite")
        if math.hypot(*v) >= 1.0:
            raise ValueError("|velocity| must be < 1")
        return v

    @property
    def beta(self) -> float:
        return math.hypot(*self.velocity)


class PrivilegedFrame(BaseModel):
    """A hypothetical privileged frame: Earth's speed β and zenith angle χ."""

    model_config = {"frozen": True}

    beta: float = Field(ge=0.0, lt=1.0)
    chi_deg: float = Field(ge=0.0, le=180.0)


class AlignmentRho(BaseModel):
    """Alignment ρ = c·t_AB / r_AB of the two detection events.

    ``is_bound`` marks an experimental upper bound ρ̄ rather than a value.
    """

    model_config = {"frozen": True}

    rho: float = Field(gt=-1.0, lt=1.0)
    is_bound: bool = False

    @classmethod
    def from_events(cls, a: SpacetimeEvent, b: SpacetimeEvent) -> "AlignmentRho":
        separation = np.subtract(b.position, a.position)
        r_ab = float(np.linalg.norm(separation))
        if r_ab == 0.0:
            raise InputValidationError("Events are at the same position", {"position": a.position})
        rho = SPEED_OF_LIGHT * (b.time - a.time) / r_ab
        if abs(rho) >= 1.0:
            raise InputValidationError(
                f"Events are not space-like separated (|rho|={abs(rho):.6g} >= 1)",
                {"rho": rho},
            )
        return cls(rho=rho)


def gamma_factor(beta: float) -> float:
    """Lorentz factor 1/√(1−β²).

    Raises:
        InputValidationError: If β is outside [0, 1).
    """
    if not 0.0 <= beta < 1.0:
        raise InputValidationError(f"beta must be in [0, 1), got {beta}", {"beta": beta})
    return 1.0 / math.sqrt(1.0 - beta * beta)


def lorentz_boost_event(event: SpacetimeEvent, v: FrameVelocity) -> tuple[np.ndarray, float]:
    """Coordinates in F of an event given in the Earth frame.

    The Earth frame moves with velocity ``v`` relative to F, so
    r' = r + (γ−1)(r·n)n + γ v c t and t' = γ(t + v·r/c).

    Args:
        event: Event in Earth-frame coordinates.
        v: Earth velocity relative to F.

    Returns:
        Tuple of (position in meters, time in seconds) in F.
    """
    beta_vec = np.asarray(v.velocity, dtype=float)
    beta = float(np.linalg.norm(beta_vec))
    gamma = gamma_factor(beta)
    r = np.asarray(event.position, dtype=float)
    t = event.time
    if beta == 0.0:
        return r.copy(), t

    n = beta_vec / beta
    r_par = float(np.dot(r, n))
    r_prime = r + (gamma - 1.0) * r_par * n + gamma * beta_vec * SPEED_OF_LIGHT * t
    t_prime = gamma * (t + float(np.dot(beta_vec, r)) / SPEED_OF_LIGHT)
    return r_prime, t_prime


def vqi_from_events(a: SpacetimeEvent, b: SpacetimeEvent, v: FrameVelocity) -> float:
    """Bound on V_QI/c from the event coordinates transformed into F.

    Args:
        a: Detection event A.
        b: Detection event B.
        v: Earth velocity relative to F.

    Returns:
        ||r'_B − r'_A|| / (c |t'_B − t'_A|), or ``UNBOUNDED`` when the events
        are simultaneous in F.

    Raises:
        InputValidationError: If the events are time-like separated.
    """
    AlignmentRho.from_events(a, b)

    # Boost the separation; translation invariance makes this equal to the
    # difference of the boosted events without the large common offset.
    beta_vec = np.asarray(v.velocity, dtype=float)
    beta = float(np.linalg.norm(beta_vec))
    gamma = gamma_factor(beta)
    dr = np.subtract(b.position, a.position).astype(float)
    dt = b.time - a.time

    if beta == 0.0:
        dr_prime, dt_prime = dr, dt
    else:
        n = beta_vec / beta
        dr_par = float(np.dot(dr, n))
        dr_perp = dr - dr_par * n
        dr_prime = dr_perp + gamma * (dr_par + beta * SPEED_OF_LIGHT * dt) * n
        dt_prime = gamma * (dt + beta * dr_par / SPEED_OF_LIGHT)

    if dt_prime == 0.0:
        return UNBOUNDED
    return float(np.linalg.norm(dr_prime)) / (SPEED_OF_LIGHT * abs(dt_prime))


def vqi_bound_exact(rho: AlignmentRho | float, beta: float, beta_parallel: float) -> float:
    """Bound on V_QI/c for a known alignment ρ.

    (V_QI/c)² ≥ 1 + (1−β²)(1−ρ²)/(ρ+β∥)². β = 1 is accepted as the limit of
    the formula and yields 1.

    Args:
        rho: Alignment ρ of the two events.
        beta: Earth speed relative to F.
        beta_parallel: Component of the Earth velocity along the A–B axis.

    Returns:
        The bound, or ``UNBOUNDED`` when ρ + β∥ = 0.

    Raises:
        InputValidationError: On any precondition violation.
    """
    rho_value = rho.rho if isinstance(rho, AlignmentRho) else float(rho)
    if not abs(rho_value) < 1.0:
        raise InputValidationError(f"|rho| must be < 1, got {rho_value}", {"rho": rho_value})
    if not 0.0 <= beta <= 1.0:
        raise InputValidationError(f"beta must be in [0, 1], got {beta}", {"beta": beta})
    if abs(beta_parallel) > beta * (1.0 + 1e-12):
        raise InputValidationError(
            f"|beta_parallel|={abs(beta_parallel)} exceeds beta={beta}",
            {"beta": beta, "beta_parallel": beta_parallel},
        )

    denominator = (rho_value + beta_parallel) ** 2
    if denominator == 0.0:
        return UNBOUNDED
    return math.sqrt(1.0 + (1.0 - beta * beta) * (1.0 - rho_value * rho_value) / denominator)


@overload
def vqi_bound_worstcase(rho_bar: float, beta: float, beta_parallel_abs_bound: float) -> float: ...


@overload
def vqi_bound_worstcase(
    rho_bar: float, beta: np.ndarray, beta_parallel_abs_bound: np.ndarray
) -> np.ndarray: ...


def vqi_bound_worstcase(rho_bar, beta, beta_parallel_abs_bound):
    """Bound on V_QI/c for an alignment only known up to |ρ| ≤ ρ̄.

    (V_QI/c)² ≥ 1 + (1−β²)(1−ρ̄²)/(ρ̄+|β∥|)².

    Accepts scalars or equally shaped arrays for ``beta`` and
    ``beta_parallel_abs_bound``.

    Raises:
        InputValidationError: On any precondition violation.
    """
    scalar = np.isscalar(beta) and np.isscalar(beta_parallel_abs_bound)
    b = np.asarray(beta, dtype=float)
    bpar = np.asarray(beta_parallel_abs_bound, dtype=float)

    if not 0.0 <= rho_bar < 1.0:
        raise InputValidationError(f"rho_bar must be in [0, 1), got {rho_bar}", {"rho_bar": rho_bar})
    if np.any(b < 0.0) or np.any(b > 1.0) or not np.all(np.isfinite(b)):
        raise InputValidationError("beta must be in [0, 1]", {"beta": b.tolist()})
    if np.any(bpar < 0.0) or not np.all(np.isfinite(bpar)):
        raise InputValidationError(
            "beta_parallel_abs_bound must be finite and >= 0", {"beta_parallel_abs_bound": bpar.tolist()}
        )

    denominator = (rho_bar + bpar) ** 2
    with np.errstate(divide="ignore"):
        ratio = (1.0 - b * b) * (1.0 - rho_bar * rho_bar) / denominator
    # 0/0 happens only at β = 1 with a perfect alignment; the (1−β²) limit wins.
    ratio = np.where((denominator == 0.0) & (b >= 1.0), 0.0, ratio)
    result = np.sqrt(1.0 + ratio)

    if scalar:
        return float(result)
    return result
