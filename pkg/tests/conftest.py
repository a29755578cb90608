"""
Pytest configuration and shared fixtures for vqibound tests.
"""

import json
import math
from datetime import timedelta
from pathlib import Path

import pytest

from vqibound.experiment.simulator import (
    DEFAULT_RUN_START,
    CoincidenceBin,
    CoincidenceSeries,
    PhaseScan,
    RunSchedule,
    SourceModel,
)
from vqibound.physics.kinematics import BaselineGeometry, RotationClock

GENEVA_RHO_BAR = 5.4e-6
GENEVA_ALPHA_DEG = 5.8


@pytest.fixture
def geneva_geometry():
    """18 km east-west-ish baseline with the measured alignment bound."""
    return BaselineGeometry(r_ab=18_000.0, alpha_deg=GENEVA_ALPHA_DEG, rho_bar=GENEVA_RHO_BAR)


@pytest.fixture
def geneva_clock():
    """Sidereal rotation with a 360 s Bell-test integration time."""
    return RotationClock.sidereal(360.0)


@pytest.fixture
def geneva_source():
    """33 coinc./min on average, 2.5 accidental, raw visibility 0.876."""
    return SourceModel()


@pytest.fixture
def long_fringe_scan():
    """Uninterrupted ramp with a 900 s fringe period."""
    return PhaseScan(fringe_period=900.0)


def double_coverage_runs(count: int = 4) -> list[RunSchedule]:
    """13 h runs, run k starting on day k at hour 6k: each sidereal moment at least twice."""
    scan = PhaseScan(fringe_period=360.0)
    return [
        RunSchedule(start=DEFAULT_RUN_START + timedelta(days=k, hours=6 * k), duration=13 * 3600.0, scan=scan)
        for k in range(count)
    ]


@pytest.fixture
def integer_fringe_series():
    """Noiseless 360 s fringe whose bin counts are exact integers.

    Bin centres fall on multiples of 60° of fringe phase, so the counts
    40 + 20·cos(θ) cycle through 60, 50, 30, 20, 30, 50.
    """
    bins = []
    for k in range(90):
        start = 60.0 * k
        angle = 2.0 * math.pi * (start + 30.0) / 360.0 - math.pi / 6.0
        bins.append(
            CoincidenceBin(
                start_time=start,
                wall_clock=DEFAULT_RUN_START + timedelta(seconds=start),
                singles_a=10_000,
                singles_b=10_000,
                coincidences=int(round(40.0 + 20.0 * math.cos(angle))),
            )
        )
    return CoincidenceSeries(bin_width=60.0, bins=bins)


@pytest.fixture
def write_config(tmp_path):
    """Write a run-config dict as JSON and return its path."""

    def _write(document: dict, name: str = "run.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def double_coverage_schedule():
    """Four 13 h runs that cover every sidereal moment at least twice."""
    return double_coverage_runs()
