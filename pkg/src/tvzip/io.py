"""CSV ingestion and output.

Files are comma-delimited with a mandatory header row and period decimals.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .core import CountSeries
from .errors import AlignmentError, DataFileError, EmptyInputError, OrderingError, ParseError


@dataclass(frozen=True)
class DataFile:
    path: str
    series: CountSeries
    time: np.ndarray
    time_col: str
    count_col: str
    exog_col: Optional[str] = None
    month_col: Optional[str] = None
    months: Optional[tuple] = None


def _parse_count(raw: str, row: int) -> int:
    text = raw.strip()
    if not text:
        raise ParseError("missing count", row)
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"count {text!r} is not a number", row) from None
    if not math.isfinite(value) or value != int(value):
        raise ParseError(f"count {text!r} is not an integer", row)
    return int(value)


def _parse_float(raw: str, what: str, row: int) -> float:
    try:
        value = float(raw.strip())
    except ValueError:
        raise ParseError(f"{what} {raw.strip()!r} is not a number", row) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} {raw.strip()!r} is not finite", row)
    return value


def load_data_file(path, time_col: str = "t", count_col: str = "count",
                   exog_col: Optional[str] = None, month_col: Optional[str] = None) -> DataFile:
    """Read and validate a count series.

    Rows are numbered from 1 after the header. Counts must be nonnegative
    integers and times strictly increasing. A mapped ``exog_col`` must have a
    value on every row.
    """
    path = os.fspath(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataFileError(f"cannot open {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyInputError(f"{path} is empty")
        header = [h.strip() for h in header]
        wanted = [c for c in (time_col, count_col, exog_col, month_col) if c is not None]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise DataFileError(f"{path}: missing column(s) {missing}; header is {header}")
        pos = {c: header.index(c) for c in wanted}

        times, counts, exog, months = [], [], [], []
        for row, rec in enumerate(reader, start=1):
            if not rec or all(not cell.strip() for cell in rec):
                continue
            cells = rec + [""] * (len(header) - len(rec))
            t = _parse_float(cells[pos[time_col]], "time", row)
            if times and t <= times[-1]:
                raise OrderingError(f"row {row}: time {t:g} does not follow {times[-1]:g}")
            x = _parse_count(cells[pos[count_col]], row)
            if x < 0:
                raise ParseError(f"count {x} is negative", row)
            times.append(t)
            counts.append(x)
            if exog_col is not None:
                raw = cells[pos[exog_col]]
                if not raw.strip():
                    raise AlignmentError(f"row {row}: count present but {exog_col!r} is missing")
                exog.append(_parse_float(raw, exog_col, row))
            if month_col is not None:
                months.append(_parse_count(cells[pos[month_col]], row))
    if not counts:
        raise EmptyInputError(f"{path} has no data rows")
    series = CountSeries(np.array(counts, dtype=np.int64),
                         np.array(exog) if exog_col is not None else None)
    return DataFile(path, series, np.array(times), time_col, count_col, exog_col, month_col,
                    tuple(months) if month_col is not None else None)


def load_count_csv(path, time_col: str = "t", count_col: str = "count",
                   exog_col: Optional[str] = None) -> CountSeries:
    """:func:`load_data_file` returning only the series."""
    return load_data_file(path, time_col, count_col, exog_col).series


def format_value(value) -> str:
    """Shortest round-tripping text for numbers; integers stay integral."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(out: TextIO, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
