"""
CSV codec for coincidence series.

Format: a header row, then one row per bin::

    start_s,wall_clock_iso8601,singles_a,singles_b,coincidences,scan_active
"""

import io
import logging
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from ..core.exceptions import DataFormatError
from ..core.io import atomic_write_text
from .simulator import DEFAULT_BIN_WIDTH_S, CoincidenceBin, CoincidenceSeries

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ["start_s", "wall_clock_iso8601", "singles_a", "singles_b", "coincidences", "scan_active"]
_TRUE = {"true", "1"}
_FALSE = {"false", "0"}


def series_to_csv(series: CoincidenceSeries) -> str:
    """Render a series in the CSV format."""
    frame = pd.DataFrame(
        {
            "start_s": [f"{b.start_time:.3f}" for b in series.bins],
            "wall_clock_iso8601": [b.wall_clock.isoformat() for b in series.bins],
            "singles_a": [b.singles_a for b in series.bins],
            "singles_b": [b.singles_b for b in series.bins],
            "coincidences": [b.coincidences for b in series.bins],
            "scan_active": ["true" if b.scan_active else "false" for b in series.bins],
        },
        columns=SERIES_COLUMNS,
    )
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def write_series_csv(series: CoincidenceSeries, path: str | Path) -> Path:
    """Write a series atomically."""
    return atomic_write_text(path, series_to_csv(series))


def _fail(path: Path, line: int, reason: str) -> DataFormatError:
    return DataFormatError(f"{path}:{line}: {reason}", {"path": str(path), "line": line})


def read_series_csv(path: str | Path, bin_width: float | None = None) -> CoincidenceSeries:
    """Parse a series CSV.

    Args:
        path: File to read.
        bin_width: Bin width in seconds; inferred from the bin spacing when
            omitted.

    Returns:
        The parsed series.

    Raises:
        DataFormatError: On a missing file, a wrong header or a malformed row;
            the message names the file and the 1-based line.
    """
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"Series file not found: {path}", {"path": str(path)})

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataFormatError(f"{path}: unreadable CSV: {e}", {"path": str(path)})

    if list(frame.columns) != SERIES_COLUMNS:
        raise _fail(path, 1, f"expected header {','.join(SERIES_COLUMNS)}")

    bins: list[CoincidenceBin] = []
    previous_start = -np.inf
    for index, row in enumerate(frame.itertuples(index=False)):
        line = index + 2
        if all(pd.isna(value) or not str(value).strip() for value in row):
            raise _fail(path, line, "blank line")
        try:
            start_time = float(row.start_s)
            wall_clock = datetime.fromisoformat(row.wall_clock_iso8601)
            counts = [int(row.singles_a), int(row.singles_b), int(row.coincidences)]
        except (TypeError, ValueError) as e:
            raise _fail(path, line, str(e))
        flag = str(row.scan_active).strip().lower()
        if flag not in _TRUE | _FALSE:
            raise _fail(path, line, f"scan_active must be true/false, got {row.scan_active!r}")
        if min(counts) < 0:
            raise _fail(path, line, "counts must be non-negative")
        if not start_time > previous_start:
            raise _fail(path, line, "start_s must be strictly increasing")
        if wall_clock.tzinfo is None:
            wall_clock = wall_clock.replace(tzinfo=timezone.utc)
        previous_start = start_time
        bins.append(
            CoincidenceBin(
                start_time=start_time,
                wall_clock=wall_clock,
                singles_a=counts[0],
                singles_b=counts[1],
                coincidences=counts[2],
                scan_active=flag in _TRUE,
            )
        )

    if bin_width is None:
        starts = np.array([b.start_time for b in bins])
        bin_width = float(np.diff(starts).min()) if len(starts) > 1 else DEFAULT_BIN_WIDTH_S

    logger.debug(f"Read {len(bins)} bins from {path}")
    return CoincidenceSeries(bin_width=bin_width, bins=bins)
