"""
Tests for sidereal-day coverage of visibility traces.
"""

import math

import pytest

from vqibound.analysis.coverage import coverage_report, read_coverage_json, write_coverage_json
from vqibound.analysis.fringe import CHSH_THRESHOLD, SinusoidFit, VisibilityPoint, VisibilityTrace, sliding_scan
from vqibound.core.exceptions import DataFormatError
from vqibound.experiment.simulator import SourceModel, compose_day, sidereal_cell_count

CELLS = sidereal_cell_count(300.0)
WIDTH = 2.0 * math.pi / CELLS


def _point(phase, visibility=0.85):
    fit = SinusoidFit(
        mean=33.0,
        amplitude=33.0 * visibility,
        phase=0.0,
        period=360.0,
        visibility=visibility,
        visibility_sigma=0.05,
        window=(0.0, 540.0),
        converged=True,
        n_bins=9,
    )
    return VisibilityPoint(
        window_center_s=270.0, sidereal_phase=phase, fit=fit, above_threshold=visibility > CHSH_THRESHOLD
    )


def _full_trace(skip=(), overrides=None):
    overrides = overrides or {}
    points = [
        _point((i + 0.5) * WIDTH, overrides.get(i, 0.85)) for i in range(CELLS) if i not in skip
    ]
    return VisibilityTrace(window_length=540.0, step=60.0, fixed_period=360.0, points=points)


@pytest.mark.unit
class TestCoverageReport:
    """Test the per-cell coverage and the verdict."""

    def test_full_coverage(self):
        """Test one trace over the whole day passes at multiplicity one."""
        report = coverage_report([_full_trace()])
        assert report.cell_count == CELLS
        assert report.verdict
        assert report.min_multiplicity == 1
        assert report.uncovered_cells == []
        assert report.min_visibility == pytest.approx(0.85)

    def test_empty_cell(self):
        """Test a missing cell is identified and fails the verdict."""
        report = coverage_report([_full_trace(skip={17})])
        assert not report.verdict
        assert report.uncovered_cells == [17]
        assert report.cells[17].multiplicity == 0
        assert report.cells[17].min_visibility is None

    def test_failing_window(self):
        """Test a window at 0.70 fails the verdict and is reported with its phase."""
        report = coverage_report([_full_trace(overrides={40: 0.70})])
        assert not report.verdict
        assert report.uncovered_cells == []
        assert len(report.failing_windows) == 1
        failing = report.failing_windows[0]
        assert failing.visibility == 0.70
        assert failing.sidereal_phase == pytest.approx(40.5 * WIDTH)
        assert report.min_visibility == 0.70

    def test_threshold_is_strict(self):
        """Test a window exactly at the threshold fails."""
        report = coverage_report([_full_trace(overrides={3: CHSH_THRESHOLD})])
        assert not report.verdict

    def test_multiplicity_counts_traces(self):
        """Test several windows of one trace in a cell count once."""
        doubled = _full_trace()
        doubled.points.extend(_full_trace().points)
        report = coverage_report([doubled], min_multiplicity=2)
        assert report.min_multiplicity == 1
        assert report.cells[0].window_count == 2
        assert not report.verdict
        assert len(report.under_covered_cells) == CELLS

        two = coverage_report([_full_trace(), _full_trace()], min_multiplicity=2)
        assert two.verdict
        assert two.min_multiplicity == 2

    def test_no_traces(self):
        """Test an empty trace set covers nothing."""
        report = coverage_report([])
        assert not report.verdict
        assert len(report.uncovered_cells) == CELLS
        assert report.min_visibility is None

    def test_phase_at_end_of_day(self):
        """Test a phase just below 2 pi lands in the last cell."""
        trace = VisibilityTrace(
            window_length=540.0, step=60.0, fixed_period=360.0, points=[_point(math.nextafter(2.0 * math.pi, 0.0))]
        )
        assert coverage_report([trace]).cells[-1].multiplicity == 1


@pytest.mark.unit
class TestCoverageJson:
    """Test coverage report files."""

    def test_round_trip(self, tmp_path):
        """Test a written report reads back unchanged."""
        report = coverage_report([_full_trace(skip={2}, overrides={5: 0.6})])
        path = write_coverage_json(report, tmp_path / "coverage.json")
        assert read_coverage_json(path) == report

    def test_missing(self, tmp_path):
        """Test a missing report."""
        with pytest.raises(DataFormatError, match="not found"):
            read_coverage_json(tmp_path / "coverage.json")

    def test_invalid_json(self, tmp_path):
        """Test a file that is not JSON."""
        path = tmp_path / "coverage.json"
        path.write_text("{\n  verdict: yes\n", encoding="utf-8")
        with pytest.raises(DataFormatError) as excinfo:
            read_coverage_json(path)
        assert excinfo.value.details["line"] == 2

    def test_wrong_document(self, tmp_path):
        """Test JSON that is not a coverage report."""
        path = tmp_path / "coverage.json"
        path.write_text('{"verdict": true}', encoding="utf-8")
        with pytest.raises(DataFormatError, match="not a coverage report"):
            read_coverage_json(path)


@pytest.mark.slow
class TestSimulatedCampaign:
    """Test the verdict on simulated multi-day campaigns."""

    def _traces(self, runs, seed):
        day = compose_day(runs, SourceModel(source_visibility=0.98), seed=seed)
        return [sliding_scan(series, fixed_period=360.0) for series in day.series]

    def test_double_coverage_verdict(self, double_coverage_schedule):
        """Test staggered runs prove the violation at every moment, twice."""
        passing = 0
        for seed in range(20):
            report = coverage_report(self._traces(double_coverage_schedule, seed), min_multiplicity=2)
            assert report.min_multiplicity >= 2
            if report.verdict:
                passing += 1
        assert passing >= 19

    def test_dropping_a_run_breaks_double_coverage(self, double_coverage_schedule):
        """Test three of the four runs leave cells seen only once."""
        traces = self._traces(double_coverage_schedule, seed=0)
        del traces[1]
        report = coverage_report(traces, min_multiplicity=2)
        assert not report.verdict
        assert report.min_multiplicity == 1
        assert report.under_covered_cells
