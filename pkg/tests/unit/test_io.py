"""Tests for eedi_lab.io module."""

from __future__ import annotations

import json
import math
from typing import TYPE_CHECKING

import numpy as np
import pytest

from eedi_lab.errors import ConfigParseError, EmptyInputError, InsufficientDataError
from eedi_lab.io import (
    ENERGIES_FILE,
    RECORDS_FILE,
    format_cell,
    read_records,
    read_symbols,
    write_csv,
    write_json,
    write_records,
    write_symbols,
)
from eedi_lab.models.experiment import ExperimentRecord

if TYPE_CHECKING:
    from pathlib import Path


def _records() -> list[ExperimentRecord]:
    return [
        ExperimentRecord(
            blocklength=n,
            distance_km=320.0,
            launch_power_dbm=-2.0,
            seed=seed,
            effective_snr_db=12.0 + 0.1 * seed + 1e-3 * n,
            eedi={0.9014: 1.0 / n, 0.9921: 0.5 / n},
            edi={31: 2.0 / n},
            kurtosis=1.6 + 1e-4 * n,
            energies=np.arange(8.0) * seed,
        )
        for n in (10, 100)
        for seed in (1, 2)
    ]


class TestCells:
    """Tests for CSV and JSON writers."""

    def test_format_cell(self) -> None:
        """Test floats keep full precision and booleans become digits."""
        assert format_cell(0.1 + 0.2) == "0.30000000000000004"
        assert format_cell(np.float64(1.5)) == "1.5"
        assert format_cell(np.int64(7)) == "7"
        assert format_cell(True) == "1"
        assert format_cell("x") == "x"

    def test_csv_line_endings(self, tmp_path: Path) -> None:
        """Test rows end with a bare newline."""
        path = tmp_path / "out.csv"
        write_csv(path, ("a", "b"), [(1, 2.5)])
        assert path.read_bytes() == b"a,b\n1,2.5\n"

    def test_json_sorted(self, tmp_path: Path) -> None:
        """Test JSON keys are sorted and the file ends with a newline."""
        path = tmp_path / "nested" / "out.json"
        write_json(path, {"b": 1, "a": [1.5]})
        text = path.read_text()
        assert text.endswith("\n")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [1.5], "b": 1}


class TestSymbols:
    """Tests for symbol CSV files."""

    def test_write_then_read(self, tmp_path: Path) -> None:
        """Test complex symbols survive a write and read exactly."""
        symbols = np.array([1 + 3j, -7 - 5j, 0.1 + 0.2j])
        path = tmp_path / "symbols.csv"
        write_symbols(path, symbols)
        assert path.read_text().splitlines()[0] == "index,re,im"
        np.testing.assert_array_equal(read_symbols(path), symbols)

    def test_missing_columns(self, tmp_path: Path) -> None:
        """Test a CSV without re/im columns is rejected."""
        path = tmp_path / "bad.csv"
        path.write_text("index,value\n0,1.0\n")
        with pytest.raises(ConfigParseError):
            read_symbols(path)

    def test_empty(self, tmp_path: Path) -> None:
        """Test a header-only file holds no symbols."""
        path = tmp_path / "empty.csv"
        path.write_text("index,re,im\n")
        with pytest.raises(EmptyInputError):
            read_symbols(path)

    def test_unreadable(self, tmp_path: Path) -> None:
        """Test a missing file is a parse error."""
        with pytest.raises(ConfigParseError, match="cannot read"):
            read_symbols(tmp_path / "absent.csv")


class TestRecords:
    """Tests for records.csv and energies.npz."""

    def test_header(self, tmp_path: Path) -> None:
        """Test metric columns are named by their parameters."""
        write_records(tmp_path, _records())
        header = (tmp_path / RECORDS_FILE).read_text().splitlines()[0].split(",")
        assert header == [
            "blocklength",
            "distance_km",
            "launch_power_dbm",
            "seed",
            "effective_snr_db",
            "kurtosis",
            "eedi_0.9014",
            "eedi_0.9921",
            "edi_31",
            "eedi_db_0.9014",
            "eedi_db_0.9921",
        ]

    def test_write_then_read(self, tmp_path: Path) -> None:
        """Test records and their energy series read back unchanged."""
        records = _records()
        write_records(tmp_path, records)
        assert read_records(tmp_path) == records

    def test_without_energies(self, tmp_path: Path) -> None:
        """Test energies can be skipped and then read back as None."""
        write_records(tmp_path, _records(), save_energies=False)
        assert not (tmp_path / ENERGIES_FILE).exists()
        assert all(r.energies is None for r in read_records(tmp_path))

    def test_eedi_db_column(self, tmp_path: Path) -> None:
        """Test the dB column holds 10 log10 of the EEDI."""
        write_records(tmp_path, _records()[:1])
        row = (tmp_path / RECORDS_FILE).read_text().splitlines()[1].split(",")
        assert float(row[-2]) == pytest.approx(10 * math.log10(0.1))

    def test_missing_columns(self, tmp_path: Path) -> None:
        """Test a records file without the fixed columns is rejected."""
        (tmp_path / RECORDS_FILE).write_text("blocklength,seed\n10,1\n")
        with pytest.raises(ConfigParseError, match="lacks columns"):
            read_records(tmp_path)

    def test_no_rows(self, tmp_path: Path) -> None:
        """Test a header-only records file is rejected."""
        write_records(tmp_path, _records())
        path = tmp_path / RECORDS_FILE
        path.write_text(path.read_text().splitlines()[0] + "\n")
        with pytest.raises(InsufficientDataError):
            read_records(tmp_path)

    def test_malformed_row(self, tmp_path: Path) -> None:
        """Test a non-numeric cell names its row."""
        write_records(tmp_path, _records(), save_energies=False)
        path = tmp_path / RECORDS_FILE
        path.write_text(path.read_text().replace("320.0", "far", 1))
        with pytest.raises(ConfigParseError, match="row 1"):
            read_records(tmp_path)
