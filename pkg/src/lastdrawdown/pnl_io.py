"""
Daily PnL ingestion and drawdown extraction.

Input is a CSV with header ``date,pnl`` holding the *cumulative* PnL per
trading day. Time is counted in rows (trading days), never in calendar days.
After :func:`normalize` the daily increments have unit sample standard
deviation, so one year of ``frequency`` rows has volatility
``sqrt(frequency)``; depths are divided by that to land in annual sigma units.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
import os
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np

from .errors import PnlDataError
from .inference import DrawdownObservation, Source

TRADING_DAYS_PER_YEAR = 257
MIN_ROWS_FOR_NORMALIZATION = 30


@dataclass(frozen=True)
class PnlSeries:
    dates: Tuple[dt.date, ...]
    values: np.ndarray
    frequency: int = TRADING_DAYS_PER_YEAR
    vol_estimate: Optional[float] = None
    normalized: bool = False
    source: str = "<memory>"

    def __post_init__(self):
        if len(self.dates) != len(self.values):
            raise PnlDataError("dates and values differ in length")
        if len(self.dates) < 2:
            raise PnlDataError("a PnL series needs at least 2 rows")
        if self.frequency < 1:
            raise PnlDataError("frequency must be a positive number of rows per year")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise PnlDataError(f"dates not strictly increasing: {prev} then {cur}")
        self.values.setflags(write=False)

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def horizon(self) -> float:
        """Span of the series in years, counted in rows."""
        return (len(self) - 1) / self.frequency


def parse_csv(
    data: Union[bytes, str],
    frequency: int = TRADING_DAYS_PER_YEAR,
    source: str = "<input>",
) -> PnlSeries:
    """Parse ``date,pnl`` CSV content. Errors name ``source`` and the line."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise PnlDataError(f"{source}: not valid UTF-8 ({exc})") from None
    reader = csv.reader(io.StringIO(data))
    header = next(reader, None)
    if header is None:
        raise PnlDataError(f"{source}: empty series")
    if [h.strip().lower() for h in header] != ["date", "pnl"]:
        raise PnlDataError(f"{source}:1: expected header 'date,pnl', got {','.join(header)!r}")

    dates, values = [], []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise PnlDataError(f"{source}:{line}: expected 2 fields, got {len(row)}")
        raw_date, raw_pnl = row[0].strip(), row[1].strip()
        try:
            day = dt.date.fromisoformat(raw_date)
        except ValueError:
            raise PnlDataError(f"{source}:{line}: bad ISO-8601 date {raw_date!r}") from None
        try:
            value = float(raw_pnl)
        except ValueError:
            raise PnlDataError(f"{source}:{line}: bad pnl value {raw_pnl!r}") from None
        if not math.isfinite(value):
            raise PnlDataError(f"{source}:{line}: non-finite pnl value {raw_pnl!r}")
        if dates:
            if day == dates[-1]:
                raise PnlDataError(f"{source}:{line}: duplicate date {day}")
            if day < dates[-1]:
                raise PnlDataError(
                    f"{source}:{line}: dates out of order: {dates[-1]} followed by {day}"
                )
        dates.append(day)
        values.append(value)

    if not dates:
        raise PnlDataError(f"{source}: empty series")
    if len(dates) < 2:
        raise PnlDataError(f"{source}: need at least 2 rows, got 1")
    return PnlSeries(tuple(dates), np.asarray(values, dtype=float), frequency, source=source)


def load_csv(path: Union[str, os.PathLike], frequency: int = TRADING_DAYS_PER_YEAR) -> PnlSeries:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise PnlDataError(f"cannot read {os.fspath(path)}: {exc.strerror}") from None
    return parse_csv(raw, frequency=frequency, source=os.fspath(path))


def normalize(
    series: PnlSeries,
    min_rows: int = MIN_ROWS_FOR_NORMALIZATION,
    vol_window: Optional[int] = None,
) -> PnlSeries:
    """
    Rescale daily increments to unit sample std (n-1 denominator) and rebuild
    the cumulative series from 0. ``vol_window`` restricts the std estimate to
    the last ``vol_window`` increments; the default uses the full history.
    """
    if len(series) < min_rows:
        raise PnlDataError(
            f"insufficient history for volatility normalization: "
            f"{len(series)} rows, need {min_rows}"
        )
    diffs = np.diff(series.values)
    window = diffs if vol_window is None else diffs[-vol_window:]
    if window.size < 2:
        raise PnlDataError("volatility window needs at least 2 increments")
    vol = float(np.std(window, ddof=1))
    scale = float(np.max(np.abs(window)))
    if vol <= 1e-12 * scale or vol == 0.0:
        raise PnlDataError("zero volatility: daily PnL increments are constant")
    # same as cumulating diffs / vol, but exact ties with the maximum survive
    rebuilt = (series.values - series.values[0]) / vol
    return replace(series, values=rebuilt, vol_estimate=vol, normalized=True)


def extract_drawdown(series: PnlSeries) -> DrawdownObservation:
    """Length (years) and depth (annual sigma units) of the drawdown in progress."""
    if not series.normalized:
        raise PnlDataError("extract_drawdown needs a normalized series (call normalize first)")
    values = series.values
    n = values.size
    last_peak = n - 1 - int(np.argmax(values[::-1]))
    peak = values[last_peak]
    length = (n - 1 - last_peak) / series.frequency
    depth = float(peak - values[-1]) / math.sqrt(series.frequency)
    return DrawdownObservation(
        length=length, depth=depth, source=Source.EXTRACTED, horizon=series.horizon
    )
