"""
vqibound: lower bounds on the speed of quantum information.

Simulates the coincidence record of a long-distance two-photon Franson
interference test, verifies a Bell violation at every time of the sidereal
day, and turns it into lower bounds on the speed of a hypothetical
superluminal influence for every candidate privileged frame.
"""

__version__ = "0.1.0"

from .physics.kinematics import BaselineGeometry, RotationClock, bound_beta_parallel
from .physics.relativity import PrivilegedFrame, vqi_bound_exact, vqi_bound_worstcase
from .pipeline.scan import BetaSweep, ChiSweep, ScanRequest, run_beta_scan, run_chi_scan, worst_case_report

__all__ = [
    "BaselineGeometry",
    "BetaSweep",
    "ChiSweep",
    "PrivilegedFrame",
    "RotationClock",
    "ScanRequest",
    "bound_beta_parallel",
    "run_beta_scan",
    "run_chi_scan",
    "vqi_bound_exact",
    "vqi_bound_worstcase",
    "worst_case_report",
]
