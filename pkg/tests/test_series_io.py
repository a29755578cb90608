"""
Tests for the coincidence-series CSV codec.
"""

import pytest

from vqibound.core.exceptions import DataFormatError
from vqibound.experiment.series_io import SERIES_COLUMNS, read_series_csv, series_to_csv, write_series_csv
from vqibound.experiment.simulator import PhaseScan, simulate_series

HEADER = ",".join(SERIES_COLUMNS)


def _write(tmp_path, *rows, header=HEADER):
    path = tmp_path / "series.csv"
    path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")
    return path


@pytest.mark.unit
class TestSeriesCsv:
    """Test writing and reading series files."""

    def test_header(self, geneva_source):
        """Test the first line is the column header."""
        series = simulate_series(geneva_source, PhaseScan(), 180.0)
        assert series_to_csv(series).splitlines()[0] == HEADER

    def test_round_trip(self, tmp_path, geneva_source):
        """Test a written series reads back unchanged."""
        scan = PhaseScan(ramp_segments=[(0.0, 600.0), (900.0, 1_800.0)])
        series = simulate_series(geneva_source, scan, 1_800.0, seed=4)
        path = write_series_csv(series, tmp_path / "out" / "run.csv")
        assert path.exists()
        loaded = read_series_csv(path)
        assert loaded.bin_width == 60.0
        assert loaded.model_dump() == series.model_dump()

    def test_write_is_deterministic(self, tmp_path, geneva_source):
        """Test writing the same series twice gives identical bytes."""
        series = simulate_series(geneva_source, PhaseScan(), 600.0, seed=8)
        first = write_series_csv(series, tmp_path / "a.csv").read_bytes()
        second = write_series_csv(series, tmp_path / "b.csv").read_bytes()
        assert first == second

    def test_explicit_bin_width(self, tmp_path):
        """Test the bin width argument wins over inference."""
        path = _write(tmp_path, "0.000,2008-01-01T00:00:00+00:00,10,10,30,true")
        assert read_series_csv(path, bin_width=30.0).bin_width == 30.0
        assert read_series_csv(path).bin_width == 60.0

    def test_naive_timestamp_is_utc(self, tmp_path):
        """Test a timestamp without offset is read as UTC."""
        path = _write(tmp_path, "0.000,2008-01-01T00:00:00,10,10,30,1")
        bin_ = read_series_csv(path).bins[0]
        assert bin_.wall_clock.utcoffset().total_seconds() == 0.0
        assert bin_.scan_active


@pytest.mark.unit
class TestSeriesCsvErrors:
    """Test malformed input is rejected with file and line."""

    def test_missing_file(self, tmp_path):
        """Test a missing file."""
        with pytest.raises(DataFormatError, match="not found"):
            read_series_csv(tmp_path / "absent.csv")

    def test_bad_header(self, tmp_path):
        """Test a wrong header is reported at line 1."""
        path = _write(tmp_path, "0,2008-01-01T00:00:00+00:00,1,1,1,true", header="t,clock,a,b,c,flag")
        with pytest.raises(DataFormatError) as excinfo:
            read_series_csv(path)
        assert excinfo.value.details["line"] == 1

    def test_bad_number(self, tmp_path):
        """Test an unparsable count names its line."""
        path = _write(
            tmp_path,
            "0.000,2008-01-01T00:00:00+00:00,10,10,30,true",
            "60.000,2008-01-01T00:01:00+00:00,10,ten,30,true",
        )
        with pytest.raises(DataFormatError) as excinfo:
            read_series_csv(path)
        assert excinfo.value.details["line"] == 3
        assert "series.csv:3" in excinfo.value.message

    def test_blank_line_keeps_line_numbers(self, tmp_path):
        """Test a blank line is rejected at its own line."""
        path = _write(
            tmp_path,
            "0.000,2008-01-01T00:00:00+00:00,10,10,30,true",
            "",
            "120.000,2008-01-01T00:02:00+00:00,10,10,30,true",
        )
        with pytest.raises(DataFormatError, match="blank line") as excinfo:
            read_series_csv(path)
        assert excinfo.value.details["line"] == 3
        assert "series.csv:3" in excinfo.value.message

    def test_negative_count(self, tmp_path):
        """Test negative counts are rejected."""
        path = _write(tmp_path, "0.000,2008-01-01T00:00:00+00:00,10,10,-1,true")
        with pytest.raises(DataFormatError, match="non-negative"):
            read_series_csv(path)

    def test_non_increasing_start(self, tmp_path):
        """Test bin starts must increase."""
        path = _write(
            tmp_path,
            "60.000,2008-01-01T00:01:00+00:00,10,10,30,true",
            "60.000,2008-01-01T00:01:00+00:00,10,10,30,true",
        )
        with pytest.raises(DataFormatError, match="increasing"):
            read_series_csv(path)

    def test_bad_flag(self, tmp_path):
        """Test scan_active accepts only boolean spellings."""
        path = _write(tmp_path, "0.000,2008-01-01T00:00:00+00:00,10,10,30,maybe")
        with pytest.raises(DataFormatError, match="scan_active"):
            read_series_csv(path)

    def test_empty_file(self, tmp_path):
        """Test an empty file is unreadable."""
        path = tmp_path / "empty.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataFormatError):
            read_series_csv(path)
