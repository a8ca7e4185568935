"""Result files: CSV tables, JSON summaries and NPZ energy archives.

Numbers are written with ``repr`` so files are locale-independent and
floats survive a write/read cycle exactly.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from typing import TYPE_CHECKING, Final

import numpy as np

from eedi_lab.errors import ConfigParseError, EmptyInputError, InsufficientDataError
from eedi_lab.models.experiment import ExperimentRecord
from eedi_lab.services.metrics import eedi_db

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence
    from pathlib import Path

logger = logging.getLogger(__name__)

RECORDS_FILE: Final[str] = "records.csv"
ENERGIES_FILE: Final[str] = "energies.npz"
SUMMARY_FILE: Final[str] = "summary.json"
CURVE_FILE: Final[str] = "correlation_curve.csv"
EFFECTIVE_CONFIG_FILE: Final[str] = "effective_config.cfg"
METADATA_FILE: Final[str] = "run_metadata.json"

_RECORD_COLUMNS: Final[tuple[str, ...]] = (
    "blocklength",
    "distance_km",
    "launch_power_dbm",
    "seed",
    "effective_snr_db",
    "kurtosis",
)
_EEDI_PREFIX = "eedi_"
_EEDI_DB_PREFIX = "eedi_db_"
_EDI_PREFIX = "edi_"


def format_cell(value: object) -> str:
    """Render one CSV cell."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return repr(float(value))
    if isinstance(value, int | np.integer):
        return str(int(value))
    return str(value)


def write_csv(
    path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]
) -> None:
    """Write a header row and data rows with ``\\n`` line endings."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    """Read a CSV file into its header and data rows.

    Raises:
        ConfigParseError: If the file cannot be read or has no header.
    """
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        msg = f"cannot read {path}: {exc.strerror}"
        raise ConfigParseError(msg) from exc
    if not rows:
        msg = f"{path} has no header row"
        raise ConfigParseError(msg)
    return rows[0], rows[1:]


def write_json(path: Path, payload: object) -> None:
    """Write pretty-printed JSON with sorted keys."""
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")


def write_symbols(path: Path, symbols: np.ndarray) -> None:
    """Write complex symbols as ``index, re, im`` rows."""
    write_csv(
        path,
        ("index", "re", "im"),
        ((i, s.real, s.imag) for i, s in enumerate(np.asarray(symbols).tolist())),
    )


def read_symbols(path: Path) -> np.ndarray:
    """Read a symbol CSV written by :func:`write_symbols`.

    Raises:
        ConfigParseError: If the columns are missing or a value is not a number.
        EmptyInputError: If the file holds no symbols.
    """
    header, rows = read_csv(path)
    try:
        re_col, im_col = header.index("re"), header.index("im")
        values = [complex(float(row[re_col]), float(row[im_col])) for row in rows]
    except (ValueError, IndexError) as exc:
        msg = f"{path} is not a symbol CSV with re and im columns"
        raise ConfigParseError(msg) from exc
    if not values:
        msg = f"{path} holds no symbols"
        raise EmptyInputError(msg)
    return np.array(values, dtype=np.complex128)


def _record_header(
    lambdas: Sequence[float], windows: Sequence[int]
) -> list[str]:
    """Column names of records.csv for the given metric parameters."""
    return [
        *_RECORD_COLUMNS,
        *(f"{_EEDI_PREFIX}{lam!r}" for lam in lambdas),
        *(f"{_EDI_PREFIX}{w}" for w in windows),
        *(f"{_EEDI_DB_PREFIX}{lam!r}" for lam in lambdas),
    ]


def _db_or_nan(value: float) -> float:
    """EEDI in dB, or NaN for a non-positive value."""
    return eedi_db(value) if value > 0 else math.nan


def write_records(
    directory: Path,
    records: Sequence[ExperimentRecord],
    *,
    save_energies: bool = True,
) -> None:
    """Write ``records.csv`` and, optionally, ``energies.npz``.

    Records are written in the order given; energy series are stored as
    ``run_00000``, ``run_00001``, ... in the same order.
    """
    lambdas = sorted(set().union(*(r.eedi for r in records))) if records else []
    windows = sorted(set().union(*(r.edi for r in records))) if records else []
    rows = [
        [
            r.blocklength,
            r.distance_km,
            r.launch_power_dbm,
            r.seed,
            r.effective_snr_db,
            r.kurtosis,
            *(r.eedi.get(lam, math.nan) for lam in lambdas),
            *(r.edi.get(w, math.nan) for w in windows),
            *(_db_or_nan(r.eedi.get(lam, math.nan)) for lam in lambdas),
        ]
        for r in records
    ]
    write_csv(directory / RECORDS_FILE, _record_header(lambdas, windows), rows)
    if save_energies:
        arrays = {
            f"run_{i:05d}": r.energies
            for i, r in enumerate(records)
            if r.energies is not None
        }
        np.savez_compressed(directory / ENERGIES_FILE, **arrays)
    logger.info("wrote %d records to %s", len(records), directory)


def read_records(directory: Path) -> list[ExperimentRecord]:
    """Read records written by :func:`write_records`.

    Energy series are attached when ``energies.npz`` is present.

    Raises:
        ConfigParseError: If ``records.csv`` is unreadable or malformed.
        InsufficientDataError: If it holds no records.
    """
    header, rows = read_csv(directory / RECORDS_FILE)
    missing = [c for c in _RECORD_COLUMNS if c not in header]
    if missing:
        msg = f"{RECORDS_FILE} lacks columns {missing}"
        raise ConfigParseError(msg)
    if not rows:
        msg = f"{directory / RECORDS_FILE} holds no records"
        raise InsufficientDataError(msg)
    energies: dict[str, np.ndarray] = {}
    npz_path = directory / ENERGIES_FILE
    if npz_path.exists():
        with np.load(npz_path) as archive:
            energies = {key: archive[key] for key in archive.files}
    records = []
    for i, row in enumerate(rows):
        try:
            cells = dict(zip(header, row, strict=True))
            records.append(
                ExperimentRecord(
                    blocklength=int(cells["blocklength"]),
                    distance_km=float(cells["distance_km"]),
                    launch_power_dbm=float(cells["launch_power_dbm"]),
                    seed=int(cells["seed"]),
                    effective_snr_db=float(cells["effective_snr_db"]),
                    eedi={
                        float(key.removeprefix(_EEDI_PREFIX)): float(value)
                        for key, value in cells.items()
                        if key.startswith(_EEDI_PREFIX)
                        and not key.startswith(_EEDI_DB_PREFIX)
                    },
                    edi={
                        int(key.removeprefix(_EDI_PREFIX)): float(value)
                        for key, value in cells.items()
                        if key.startswith(_EDI_PREFIX)
                    },
                    kurtosis=float(cells["kurtosis"]),
                    energies=energies.get(f"run_{i:05d}"),
                )
            )
        except ValueError as exc:
            msg = f"{RECORDS_FILE} row {i + 1} is malformed: {exc}"
            raise ConfigParseError(msg) from exc
    return records
