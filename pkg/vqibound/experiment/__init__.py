"""Simulated coincidence records and their CSV form."""

from .series_io import read_series_csv, write_series_csv
from .simulator import CoincidenceSeries, PhaseScan, SourceModel, compose_day, simulate_series

__all__ = [
    "CoincidenceSeries",
    "PhaseScan",
    "SourceModel",
    "compose_day",
    "read_series_csv",
    "simulate_series",
    "write_series_csv",
]
