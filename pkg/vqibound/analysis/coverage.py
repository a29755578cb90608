"""
Sidereal-day coverage of a set of visibility traces.

The sidereal day is split into equal cells. A cell is covered by a trace when
at least one of the trace's windows is centred in it; the multiplicity of a
cell is the number of traces covering it. The Bell violation holds at all
times of the day when every cell reaches the required multiplicity and every
fitted window lies above the threshold.
"""

import json
import logging
import math
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from ..core.exceptions import DataFormatError
from ..core.io import atomic_write_json
from ..experiment.simulator import sidereal_cell_count
from .fringe import CHSH_THRESHOLD, VisibilityTrace

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION_S = 300.0


class CoverageCell(BaseModel):
    """One sidereal-phase cell."""

    index: int = Field(ge=0)
    phase_start: float
    phase_end: float
    multiplicity: int = Field(ge=0)
    window_count: int = Field(ge=0)
    min_visibility: float | None = None


class FailingWindow(BaseModel):
    """A fitted window at or below the threshold."""

    trace_index: int
    window_center_s: float
    sidereal_phase: float
    visibility: float
    visibility_sigma: float


class CoverageReport(BaseModel):
    """Per-cell multiplicity and minimum visibility, plus the global verdict."""

    resolution_s: float = Field(gt=0.0)
    cell_count: int = Field(ge=1)
    threshold: float
    min_multiplicity_required: int = Field(ge=1)
    trace_count: int = Field(ge=0)
    cells: list[CoverageCell]
    uncovered_cells: list[int]
    under_covered_cells: list[int]
    failing_windows: list[FailingWindow]
    min_multiplicity: int
    min_visibility: float | None
    verdict: bool


def coverage_report(
    traces: list[VisibilityTrace],
    resolution_s: float = DEFAULT_RESOLUTION_S,
    min_multiplicity: int = 1,
    threshold: float = CHSH_THRESHOLD,
) -> CoverageReport:
    """Partition the sidereal day and check the Bell violation in every cell.

    Args:
        traces: Traces whose points carry sidereal phases.
        resolution_s: Approximate cell width in sidereal seconds.
        min_multiplicity: Traces required per cell for the verdict.
        threshold: Visibility a window must exceed.

    Returns:
        The coverage report. Problems are reported, never raised.
    """
    cells = sidereal_cell_count(resolution_s)
    width = 2.0 * math.pi / cells
    multiplicity = np.zeros(cells, dtype=int)
    window_count = np.zeros(cells, dtype=int)
    min_vis = np.full(cells, np.inf)
    failing: list[FailingWindow] = []

    for trace_index, trace in enumerate(traces):
        touched = np.zeros(cells, dtype=bool)
        for point in trace.points:
            cell = min(int(math.floor(point.sidereal_phase / width)), cells - 1)
            touched[cell] = True
            window_count[cell] += 1
            min_vis[cell] = min(min_vis[cell], point.fit.visibility)
            if not point.fit.visibility > threshold:
                failing.append(
                    FailingWindow(
                        trace_index=trace_index,
                        window_center_s=point.window_center_s,
                        sidereal_phase=point.sidereal_phase,
                        visibility=point.fit.visibility,
                        visibility_sigma=point.fit.visibility_sigma,
                    )
                )
        multiplicity += touched

    cell_models = [
        CoverageCell(
            index=i,
            phase_start=i * width,
            phase_end=(i + 1) * width,
            multiplicity=int(multiplicity[i]),
            window_count=int(window_count[i]),
            min_visibility=float(min_vis[i]) if np.isfinite(min_vis[i]) else None,
        )
        for i in range(cells)
    ]
    uncovered = [int(i) for i in np.flatnonzero(multiplicity == 0)]
    under = [int(i) for i in np.flatnonzero(multiplicity < min_multiplicity)]
    finite = min_vis[np.isfinite(min_vis)]
    verdict = not under and not failing

    if uncovered:
        logger.warning(f"{len(uncovered)} of {cells} sidereal cells have no fitted window")
    if failing:
        logger.warning(f"{len(failing)} windows at or below the threshold {threshold:.6f}")
    logger.info(f"Coverage verdict {'✅' if verdict else '❌'} over {len(traces)} traces")

    return CoverageReport(
        resolution_s=resolution_s,
        cell_count=cells,
        threshold=threshold,
        min_multiplicity_required=min_multiplicity,
        trace_count=len(traces),
        cells=cell_models,
        uncovered_cells=uncovered,
        under_covered_cells=under,
        failing_windows=failing,
        min_multiplicity=int(multiplicity.min()),
        min_visibility=float(finite.min()) if len(finite) else None,
        verdict=verdict,
    )


def write_coverage_json(report: CoverageReport, path: str | Path) -> Path:
    return atomic_write_json(path, report.model_dump(mode="json"))


def read_coverage_json(path: str | Path) -> CoverageReport:
    """Load a coverage report written by ``write_coverage_json``.

    Raises:
        DataFormatError: If the file is missing or does not hold a report.
    """
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"Coverage report not found: {path}", {"path": str(path)})
    try:
        return CoverageReport.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{path}:{e.lineno}: invalid JSON: {e.msg}", {"path": str(path), "line": e.lineno})
    except ValidationError as e:
        raise DataFormatError(f"{path}: not a coverage report: {e}", {"path": str(path)})
