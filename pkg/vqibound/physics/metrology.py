"""
Alignment budget of the two detection events.

The arrival-time difference t_AB of the two photons is uncertain through the
residual fiber-length mismatch and through chromatic dispersion. Together
with the chord length r_AB it bounds the alignment |ρ| ≤ ρ̄ = c·t_AB / r_AB.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..core.exceptions import InputValidationError
from .kinematics import BaselineGeometry
from .relativity import SPEED_OF_LIGHT

logger = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0
DEFAULT_GROUP_INDEX = 1.468
PS = 1e-12


class FiberPath(BaseModel):
    """Fiber from the source to one detector."""

    model_config = {"frozen": True, "extra": "forbid"}

    length: float = Field(ge=0.0, description="meters")
    group_index: float = Field(default=DEFAULT_GROUP_INDEX, gt=1.0)
    length_uncertainty: float = Field(default=0.0, ge=0.0, description="meters")


class DispersionSpec(BaseModel):
    """Chromatic dispersion seen by the photon pair."""

    model_config = {"frozen": True, "extra": "forbid"}

    coefficient: float = Field(ge=0.0, description="ps/(nm·km)")
    spectral_half_width: float = Field(ge=0.0, description="nm")
    fiber_length_one_side: float = Field(ge=0.0, description="km")


class AlignmentBudget(BaseModel):
    """Uncertainty terms on t_AB and the resulting alignment bound."""

    model_config = {"frozen": True, "extra": "forbid"}

    length_term: float = Field(ge=0.0, description="seconds")
    dispersion_term: float = Field(ge=0.0, description="seconds")
    t_ab_total: float = Field(ge=0.0, description="seconds")
    r_ab: float = Field(gt=0.0, description="meters")
    rho_bar: float = Field(ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def validate_budget(self) -> "AlignmentBudget":
        if self.t_ab_total < max(self.length_term, self.dispersion_term):
            raise ValueError("t_ab_total must dominate both uncertainty terms")
        return self


class SiteCoordinates(BaseModel):
    """Geographic position of a receiving station (spherical Earth)."""

    model_config = {"frozen": True, "extra": "forbid"}

    latitude: float = Field(ge=-90.0, le=90.0)
    longitude: float = Field(ge=-180.0, le=180.0)
    altitude: float = Field(default=0.0, description="meters")

    def to_cartesian(self) -> np.ndarray:
        """Earth-centred Cartesian position, z along the rotation axis."""
        lat = math.radians(self.latitude)
        lon = math.radians(self.longitude)
        radius = EARTH_RADIUS_M + self.altitude
        return np.array(
            [
                radius * math.cos(lat) * math.cos(lon),
                radius * math.cos(lat) * math.sin(lon),
                radius * math.sin(lat),
            ]
        )


def length_mismatch_time(path_a: FiberPath, path_b: FiberPath) -> float:
    """Time uncertainty from the fiber-length mismatch, in seconds.

    The two length uncertainties combine in quadrature; the group index is
    the mean of both paths.
    """
    mismatch = abs(path_a.length - path_b.length)
    uncertainty = math.hypot(path_a.length_uncertainty, path_b.length_uncertainty)
    group_index = 0.5 * (path_a.group_index + path_b.group_index)
    return (mismatch + uncertainty) * group_index / SPEED_OF_LIGHT


def dispersion_time(spec: DispersionSpec) -> float:
    """Time uncertainty from chromatic dispersion, in seconds.

    The photons are anticorrelated in energy, so their dispersive delays add:
    the one-side fiber length counts twice.
    """
    picoseconds = spec.coefficient * spec.spectral_half_width * 2.0 * spec.fiber_length_one_side
    return picoseconds * PS


def total_alignment(length_term: float, dispersion_term: float, r_ab: float) -> AlignmentBudget:
    """Combine both terms in quadrature and derive ρ̄.

    Raises:
        InputValidationError: On negative terms, a non-positive distance or
            a budget giving ρ̄ ≥ 1.
    """
    if length_term < 0.0 or dispersion_term < 0.0:
        raise InputValidationError(
            "Uncertainty terms must be >= 0",
            {"length_term": length_term, "dispersion_term": dispersion_term},
        )
    if r_ab <= 0.0:
        raise InputValidationError(f"r_ab must be > 0, got {r_ab}", {"r_ab": r_ab})

    t_ab = math.hypot(length_term, dispersion_term)
    rho_bar = SPEED_OF_LIGHT * t_ab / r_ab
    if rho_bar >= 1.0:
        raise InputValidationError(
            f"rho_bar must be < 1, got {rho_bar:.3g}: t_AB exceeds the light travel time over r_AB",
            {"t_ab": t_ab, "r_ab": r_ab, "rho_bar": rho_bar},
        )
    logger.debug(f"t_AB={t_ab / PS:.1f} ps rho_bar={rho_bar:.3e} over r_AB={r_ab:.1f} m")
    return AlignmentBudget(
        length_term=length_term,
        dispersion_term=dispersion_term,
        t_ab_total=t_ab,
        r_ab=r_ab,
        rho_bar=rho_bar,
    )


def alignment_from_measurements(
    path_a: FiberPath, path_b: FiberPath, dispersion: DispersionSpec, r_ab: float
) -> AlignmentBudget:
    """Full chain from fiber and dispersion measurements to ρ̄."""
    return total_alignment(length_mismatch_time(path_a, path_b), dispersion_time(dispersion), r_ab)


def baseline_from_sites(a: SiteCoordinates, b: SiteCoordinates, rho_bar: float = 0.0) -> BaselineGeometry:
    """Chord length and equatorial inclination of the A–B axis.

    Raises:
        InputValidationError: If both sites coincide or the chord is parallel
            to the rotation axis.
    """
    delta = b.to_cartesian() - a.to_cartesian()
    r_ab = float(np.linalg.norm(delta))
    if r_ab == 0.0:
        raise InputValidationError("Sites coincide", {"a": a.model_dump(), "b": b.model_dump()})
    alpha = math.degrees(math.asin(min(1.0, abs(delta[2]) / r_ab)))
    if alpha >= 90.0:
        raise InputValidationError(
            "Baseline is parallel to the rotation axis", {"a": a.model_dump(), "b": b.model_dump(), "r_ab": r_ab}
        )
    return BaselineGeometry(r_ab=r_ab, alpha_deg=alpha, rho_bar=rho_bar)
