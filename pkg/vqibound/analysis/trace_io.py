"""
CSV output of visibility traces.

Format: a header row, then one row per fitted window::

    window_center_s,sidereal_phase_rad,visibility,visibility_sigma,mean,amplitude,phase_rad,above_threshold
"""

import io
import logging
from pathlib import Path

import pandas as pd

from ..core.io import atomic_write_text
from .fringe import VisibilityTrace

logger = logging.getLogger(__name__)

TRACE_COLUMNS = [
    "window_center_s",
    "sidereal_phase_rad",
    "visibility",
    "visibility_sigma",
    "mean",
    "amplitude",
    "phase_rad",
    "above_threshold",
]


def trace_to_csv(trace: VisibilityTrace, float_format: str = "%.10g") -> str:
    """Render a trace, rows ordered by window start."""
    frame = pd.DataFrame(
        {
            "window_center_s": [p.window_center_s for p in trace.points],
            "sidereal_phase_rad": [p.sidereal_phase for p in trace.points],
            "visibility": [p.fit.visibility for p in trace.points],
            "visibility_sigma": [p.fit.visibility_sigma for p in trace.points],
            "mean": [p.fit.mean for p in trace.points],
            "amplitude": [p.fit.amplitude for p in trace.points],
            "phase_rad": [p.fit.phase for p in trace.points],
            "above_threshold": ["true" if p.above_threshold else "false" for p in trace.points],
        },
        columns=TRACE_COLUMNS,
    )
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=float_format, lineterminator="\n")
    return buffer.getvalue()


def write_trace_csv(trace: VisibilityTrace, path: str | Path, float_format: str = "%.10g") -> Path:
    logger.debug(f"Writing {len(trace.points)} trace rows to {path}")
    return atomic_write_text(path, trace_to_csv(trace, float_format))
