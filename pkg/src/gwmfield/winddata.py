"""Strict parser for the StatLib Irish daily wind-speed file.

Row structure: whitespace-delimited `yy mm dd` followed by 12 station
daily mean speeds in knots.  Stations appear in the fixed order below;
speeds must lie in [0, 80].  Feb 29 rows are dropped so every year
contributes exactly 365 days, and day-of-year indices follow the non-leap
calendar.  The dataset itself is not vendored; validation errors carry
line numbers and the ingest path reports a content checksum.
"""

from __future__ import annotations

import datetime
import hashlib

import numpy as np

from .errors import DataFormatError
from .inference import DailySeries

__all__ = ["STATIONS", "load_wind_file", "load_plain_series", "file_checksum"]

STATIONS = ["RPT", "VAL", "ROS", "KIL", "SHA", "BIR", "DUB", "CLA", "MUL", "CLO", "BEL", "MAL"]
SPEED_RANGE = (0.0, 80.0)
_N_FIELDS = 3 + len(STATIONS)


def _station_index(station) -> int:
    if isinstance(station, int):
        if not (0 <= station < len(STATIONS)):
            raise DataFormatError(f"station index out of range 0..{len(STATIONS) - 1}")
        return station
    name = str(station).upper()
    if name not in STATIONS:
        raise DataFormatError(f"unknown station {station!r}; expected one of {STATIONS}")
    return STATIONS.index(name)


def load_wind_file(path: str, station="RPT", years: tuple[int, int] = (1973, 1978)) -> DailySeries:
    """Parse, validate, and extract one station's series for a year range.

    years is an inclusive (first, last) pair of 4-digit years.  The
    selected range must be complete: 365 entries per year after dropping
    Feb 29.
    """
    col = _station_index(station)
    y0, y1 = years
    values, yrs, days = [], [], []
    seen_per_year: dict[int, int] = {}
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != _N_FIELDS:
                raise DataFormatError(
                    f"{path}:{lineno}: expected {_N_FIELDS} fields, got {len(fields)}"
                )
            try:
                yy, mm, dd = int(fields[0]), int(fields[1]), int(fields[2])
                speeds = [float(f) for f in fields[3:]]
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: unparseable field ({exc})") from exc
            year = 1900 + yy
            try:
                datetime.date(year, mm, dd)
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid date {year}-{mm}-{dd}") from exc
            for s in speeds:
                if not (SPEED_RANGE[0] <= s <= SPEED_RANGE[1]):
                    raise DataFormatError(
                        f"{path}:{lineno}: speed {s} outside {SPEED_RANGE} knots"
                    )
            if not (y0 <= year <= y1):
                continue
            if mm == 2 and dd == 29:
                continue
            doy = datetime.date(2001, mm, dd).timetuple().tm_yday  # non-leap reference
            values.append(speeds[col])
            yrs.append(year)
            days.append(doy)
            seen_per_year[year] = seen_per_year.get(year, 0) + 1

    expected_years = list(range(y0, y1 + 1))
    missing = [y for y in expected_years if seen_per_year.get(y, 0) != 365]
    if missing:
        raise DataFormatError(
            f"{path}: incomplete years {missing} in range {y0}-{y1} "
            f"(need 365 rows each after dropping Feb 29)"
        )
    return DailySeries(values=np.array(values), years=np.array(yrs), days=np.array(days))


def load_plain_series(path: str) -> np.ndarray:
    """One float per line; treated as an already-deseasonalized series."""
    vals = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                vals.append(float(s))
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: not a number: {s!r}") from exc
    if len(vals) < 2:
        raise DataFormatError(f"{path}: need at least 2 values")
    return np.asarray(vals, dtype=float)


def file_checksum(path: str) -> str:
    """SHA-256 of the raw file bytes, for provenance reporting."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
