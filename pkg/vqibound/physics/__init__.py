"""
Relativistic bounds, Earth-rotation kinematics and the alignment budget.
"""

from .kinematics import BaselineGeometry, CaseTag, RotationClock, WindowBound
from .metrology import AlignmentBudget, DispersionSpec, FiberPath, SiteCoordinates
from .relativity import UNBOUNDED, AlignmentRho, FrameVelocity, PrivilegedFrame, SpacetimeEvent

__all__ = [
    "AlignmentBudget",
    "AlignmentRho",
    "BaselineGeometry",
    "CaseTag",
    "DispersionSpec",
    "FiberPath",
    "FrameVelocity",
    "PrivilegedFrame",
    "RotationClock",
    "SiteCoordinates",
    "SpacetimeEvent",
    "UNBOUNDED",
    "WindowBound",
]
