"""
Tests for the coincidence-series simulator.
"""

import math
from datetime import timedelta

import numpy as np
import pytest
from pydantic import ValidationError

from vqibound.experiment.simulator import (
    DEFAULT_RUN_START,
    PhaseScan,
    RunSchedule,
    SourceModel,
    coincidence_rate_at,
    compose_day,
    expected_counts,
    run_coverage,
    sidereal_cell_count,
    simulate_series,
)
from vqibound.physics.kinematics import SIDEREAL_DAY_S


@pytest.mark.unit
class TestSourceModel:
    """Test the source rate model."""

    def test_defaults_reproduce_quoted_rates(self, geneva_source):
        """Test 33 coinc./min on average and raw visibility 0.876."""
        assert geneva_source.mean_coincidence_rate == pytest.approx(33.0)
        assert geneva_source.raw_visibility == pytest.approx(0.876, abs=5e-4)

    def test_dark_source(self):
        """Test a source with no counts has zero visibility."""
        assert SourceModel(true_coincidence_rate=0.0, accidental_rate=0.0).raw_visibility == 0.0

    @pytest.mark.parametrize(
        "field, value", [("true_coincidence_rate", -1.0), ("source_visibility", 1.1), ("singles_rate_a", -5.0)]
    )
    def test_rejects_invalid(self, field, value):
        """Test negative rates and visibilities above one."""
        with pytest.raises(ValidationError):
            SourceModel(**{field: value})


@pytest.mark.unit
class TestPhaseScan:
    """Test the interference-phase ramp."""

    def test_segments_must_be_ordered(self):
        """Test overlapping or reversed segments are rejected."""
        with pytest.raises(ValidationError):
            PhaseScan(ramp_segments=[(0.0, 100.0), (50.0, 200.0)])
        with pytest.raises(ValidationError):
            PhaseScan(ramp_segments=[(100.0, 100.0)])

    def test_phase_freezes_in_gaps(self):
        """Test accumulated phase counts only active ramp time."""
        scan = PhaseScan(fringe_period=360.0, ramp_segments=[(0.0, 1_000.0), (1_500.0, 2_500.0)])
        assert scan.phase_at(1_200.0) == pytest.approx(2.0 * math.pi * 1_000.0 / 360.0)
        assert scan.phase_at(1_499.0) == pytest.approx(scan.phase_at(1_001.0))
        assert scan.phase_at(3_000.0) == pytest.approx(2.0 * math.pi * 2_000.0 / 360.0)

    def test_gap_placement_does_not_change_total_phase(self):
        """Test the same active time gives the same phase wherever the gap sits."""
        early = PhaseScan(fringe_period=900.0, ramp_segments=[(0.0, 600.0), (1_800.0, 4_000.0)])
        late = PhaseScan(fringe_period=900.0, ramp_segments=[(0.0, 2_200.0), (3_400.0, 4_000.0)])
        assert early.phase_at(4_000.0) == pytest.approx(late.phase_at(4_000.0))

    def test_is_active(self):
        """Test activity flags follow the segments."""
        scan = PhaseScan(ramp_segments=[(0.0, 100.0)])
        np.testing.assert_array_equal(scan.is_active(np.array([50.0, 100.0, 150.0])), [True, False, False])


@pytest.mark.unit
class TestCoincidenceRate:
    """Test the expected coincidence rate."""

    def test_peak(self, geneva_source):
        """Test the rate at zero phase."""
        assert coincidence_rate_at(geneva_source, PhaseScan(), 0.0) == pytest.approx(61.914, rel=1e-9)

    def test_no_interference_is_constant(self):
        """Test V_src = 0 gives R_c + R_acc at all times."""
        model = SourceModel(source_visibility=0.0)
        rates = coincidence_rate_at(model, PhaseScan(), np.linspace(0.0, 5_000.0, 37))
        np.testing.assert_allclose(rates, 33.0, rtol=1e-12)

    def test_perfect_destructive_interference(self):
        """Test phase pi with V_src = 1 and no accidentals gives zero."""
        model = SourceModel(source_visibility=1.0, accidental_rate=0.0)
        assert coincidence_rate_at(model, PhaseScan(initial_phase=math.pi), 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_binned_visibility(self, geneva_source, long_fringe_scan):
        """Test the expected binned counts carry the raw visibility."""
        expected = expected_counts(geneva_source, long_fringe_scan, 4 * 3600.0)
        counts = expected["coincidences"]
        phases = long_fringe_scan.phase_at(expected["start_time"] + 30.0)
        # 16 whole fringes of 15 bins: the discrete Fourier component is exact
        amplitude = 2.0 * abs(np.mean(counts * np.exp(-1j * phases)))
        assert counts.mean() == pytest.approx(33.0, rel=1e-9)
        assert amplitude / counts.mean() == pytest.approx(geneva_source.raw_visibility, rel=1e-9)


@pytest.mark.unit
class TestSimulateSeries:
    """Test the Poisson series generator."""

    def test_four_hour_run(self, geneva_source, long_fringe_scan):
        """Test 4 h of 60 s bins."""
        series = simulate_series(geneva_source, long_fringe_scan, 4 * 3600.0, seed=1)
        assert len(series) == 240
        counts = series.arrays()["coincidences"]
        assert counts.mean() == pytest.approx(33.0, abs=1.5)
        assert series.bins[1].start_time - series.bins[0].start_time == 60.0
        assert series.bins[0].wall_clock == DEFAULT_RUN_START
        assert series.wall_clock_anchor == DEFAULT_RUN_START

    def test_zero_duration(self, geneva_source):
        """Test an empty run."""
        series = simulate_series(geneva_source, PhaseScan(), 0.0)
        assert len(series) == 0
        assert series.wall_clock_anchor is None

    def test_trailing_partial_bin_dropped(self, geneva_source):
        """Test only whole bins are produced."""
        assert len(simulate_series(geneva_source, PhaseScan(), 150.0)) == 2

    def test_deterministic(self, geneva_source, long_fringe_scan):
        """Test the same seed reproduces the same series."""
        first = simulate_series(geneva_source, long_fringe_scan, 3_600.0, seed=42)
        second = simulate_series(geneva_source, long_fringe_scan, 3_600.0, seed=42)
        other = simulate_series(geneva_source, long_fringe_scan, 3_600.0, seed=43)
        assert first.model_dump() == second.model_dump()
        assert first.model_dump() != other.model_dump()

    def test_poisson_statistics(self):
        """Test mean and variance agree over 10^4 constant-rate bins."""
        model = SourceModel(source_visibility=0.0)
        series = simulate_series(model, PhaseScan(), 10_000 * 60.0, seed=5)
        counts = series.arrays()["coincidences"]
        assert len(counts) == 10_000
        assert counts.var(ddof=1) == pytest.approx(counts.mean(), rel=0.05)
        assert counts.mean() == pytest.approx(33.0, rel=0.01)

    def test_gap_bins_flagged(self, geneva_source):
        """Test bins during a halted ramp are marked inactive."""
        scan = PhaseScan(fringe_period=360.0, ramp_segments=[(0.0, 1_200.0), (1_800.0, 3_600.0)])
        series = simulate_series(geneva_source, scan, 3_600.0, seed=3)
        flags = series.arrays()["scan_active"]
        assert flags.sum() == 50
        assert not flags[20:30].any()
        assert flags[:20].all() and flags[30:].all()

    def test_singles_drift(self):
        """Test a linear singles drift shows in the expected counts."""
        model = SourceModel(singles_drift_a=-600.0)
        expected = expected_counts(model, PhaseScan(), 2 * 3600.0)
        assert expected["singles_a"][0] > expected["singles_a"][-1]
        np.testing.assert_allclose(expected["singles_b"], 1.0e4)


@pytest.mark.unit
class TestRunCoverage:
    """Test sidereal coverage of a run set."""

    def test_cell_count(self):
        """Test 5 min cells."""
        assert sidereal_cell_count(300.0) == 287
        assert sidereal_cell_count(1e9) == 1

    def test_single_hour_is_incomplete(self):
        """Test a 1 h run covers about 1/24 of the day."""
        coverage = run_coverage([RunSchedule(start=DEFAULT_RUN_START, duration=3_600.0)])
        assert not coverage.complete
        assert coverage.covered_fraction == pytest.approx(3_600.0 / SIDEREAL_DAY_S, abs=0.005)
        assert len(coverage.uncovered_cells) == coverage.cell_count - sum(coverage.multiplicity)

    def test_two_half_day_runs(self):
        """Test two 13 h runs offset by 12 h cover the day, doubly in the overlap."""
        runs = [
            RunSchedule(start=DEFAULT_RUN_START, duration=13 * 3600.0),
            RunSchedule(start=DEFAULT_RUN_START + timedelta(hours=12), duration=13 * 3600.0),
        ]
        coverage = run_coverage(runs)
        assert coverage.complete
        assert coverage.min_multiplicity == 1
        assert max(coverage.multiplicity) == 2

    def test_double_coverage(self, double_coverage_schedule):
        """Test four staggered 13 h runs cover every cell at least twice."""
        coverage = run_coverage(double_coverage_schedule)
        assert coverage.complete
        assert coverage.min_multiplicity >= 2

    def test_run_length_limit(self):
        """Test runs longer than 15 h are rejected."""
        with pytest.raises(ValidationError):
            RunSchedule(start=DEFAULT_RUN_START, duration=16 * 3600.0)


@pytest.mark.unit
class TestComposeDay:
    """Test multi-run composition."""

    def test_independent_of_parallelism(self, geneva_source, double_coverage_schedule):
        """Test serial and threaded generation give identical series."""
        runs = [r.model_copy(update={"duration": 3_600.0}) for r in double_coverage_schedule]
        serial = compose_day(runs, geneva_source, seed=9, max_workers=1)
        threaded = compose_day(runs, geneva_source, seed=9, max_workers=4)
        assert [s.model_dump() for s in serial.series] == [s.model_dump() for s in threaded.series]

    def test_runs_draw_distinct_streams(self, geneva_source):
        """Test identical runs get different noise."""
        run = RunSchedule(start=DEFAULT_RUN_START, duration=3_600.0)
        day = compose_day([run, run], geneva_source, seed=1)
        assert day.series[0].arrays()["coincidences"].tolist() != day.series[1].arrays()["coincidences"].tolist()

    def test_incomplete_set_is_flagged_not_rejected(self, geneva_source, caplog):
        """Test a partial day is reported in the coverage and logged."""
        run = RunSchedule(start=DEFAULT_RUN_START, duration=3_600.0)
        with caplog.at_level("WARNING"):
            day = compose_day([run], geneva_source, seed=0)
        assert len(day.series) == 1
        assert not day.coverage.complete
        assert "uncovered" in caplog.text

    def test_anchors_follow_schedule(self, geneva_source, double_coverage_schedule):
        """Test each series is anchored at its run start."""
        runs = [r.model_copy(update={"duration": 600.0}) for r in double_coverage_schedule]
        day = compose_day(runs, geneva_source)
        assert [s.wall_clock_anchor for s in day.series] == [r.start for r in runs]
