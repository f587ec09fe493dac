"""Parsing, serialization and summaries of daily cash-flow datasets.

The on-disk format is a CSV file with one row per (company, working day)
and the columns ``Date, Company, NetCF, DayMonth, DayWeek`` in any order.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

__all__ = [
    "COLUMNS",
    "CashFlowObservation",
    "CashFlowSeries",
    "DatasetError",
    "LaggedPairs",
    "SummaryStatistics",
    "parse_dataset",
    "read_dataset",
    "write_dataset",
    "summarize",
    "poincare_pairs",
]

COLUMNS = ("Date", "Company", "NetCF", "DayMonth", "DayWeek")


class DatasetError(ValueError):
    """Raised for malformed or inconsistent dataset input.

    ``row`` is the 1-based line number in the source file (header is line 1)
    when the problem can be attributed to a single row.
    """

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class CashFlowObservation:
    date: dt.date
    net_flow: float
    day_of_month: int
    day_of_week: int

    def __post_init__(self):
        if self.day_of_month != self.date.day:
            raise DatasetError(
                f"DayMonth {self.day_of_month} does not match date {self.date.isoformat()}"
            )
        if self.day_of_week != self.date.isoweekday():
            raise DatasetError(
                f"DayWeek {self.day_of_week} does not match date {self.date.isoformat()} "
                f"(ISO weekday {self.date.isoweekday()})"
            )

    @classmethod
    def from_date(cls, date: dt.date, net_flow: float) -> "CashFlowObservation":
        return cls(date, float(net_flow), date.day, date.isoweekday())


@dataclass(frozen=True)
class CashFlowSeries:
    """Ordered daily net cash flows of a single company."""

    company_id: int
    observations: tuple[CashFlowObservation, ...]

    def __post_init__(self):
        obs = tuple(self.observations)
        object.__setattr__(self, "observations", obs)
        if not obs:
            raise DatasetError(f"company {self.company_id}: series must not be empty")
        for prev, cur in zip(obs, obs[1:]):
            if cur.date <= prev.date:
                raise DatasetError(
                    f"company {self.company_id}: dates not strictly increasing "
                    f"({prev.date.isoformat()} then {cur.date.isoformat()})"
                )

    @classmethod
    def from_arrays(cls, company_id: int, dates: Iterable[dt.date],
                    values: Iterable[float]) -> "CashFlowSeries":
        obs = tuple(CashFlowObservation.from_date(d, v) for d, v in zip(dates, values))
        return cls(int(company_id), obs)

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def values(self) -> np.ndarray:
        return np.array([o.net_flow for o in self.observations], dtype=float)

    @property
    def dates(self) -> list[dt.date]:
        return [o.date for o in self.observations]

    @property
    def calendar(self) -> np.ndarray:
        """``(n, 2)`` integer array of (day-of-month, day-of-week) features."""
        return np.array(
            [(o.day_of_month, o.day_of_week) for o in self.observations], dtype=np.int64
        ).reshape(-1, 2)

    def with_values(self, values: Sequence[float]) -> "CashFlowSeries":
        """Return a copy with the same dates and new net-flow values."""
        values = np.asarray(values, dtype=float)
        if values.shape != (len(self),):
            raise ValueError(f"expected {len(self)} values, got shape {values.shape}")
        return CashFlowSeries.from_arrays(self.company_id, self.dates, values)


@dataclass(frozen=True)
class SummaryStatistics:
    length: int
    null_share: float
    mean: float
    std: float | None
    excess_kurtosis: float | None
    skewness: float | None
    min: float
    max: float

    def as_dict(self) -> dict:
        return {
            "length": self.length,
            "null_share": self.null_share,
            "mean": self.mean,
            "std": self.std,
            "excess_kurtosis": self.excess_kurtosis,
            "skewness": self.skewness,
            "min": self.min,
            "max": self.max,
        }


@dataclass(frozen=True)
class LaggedPairs:
    lag: int
    pairs: tuple[tuple[float, float], ...]

    def __len__(self) -> int:
        return len(self.pairs)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _parse_number(text: str, row: int) -> float:
    s = text.strip()
    if "," in s and "." not in s:
        s = s.replace(",", ".")
    try:
        value = float(s)
    except ValueError:
        raise DatasetError(f"non-numeric NetCF {text!r}", row) from None
    if not math.isfinite(value):
        raise DatasetError(f"non-finite NetCF {text!r}", row)
    return value


def _parse_int(text: str, column: str, row: int) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise DatasetError(f"non-integer {column} {text!r}", row) from None


def _sniff_delimiter(header_line: str) -> str:
    return ";" if header_line.count(";") > header_line.count(",") else ","


def parse_dataset(source: IO[str] | str) -> list[CashFlowSeries]:
    """Parse a cash-flow CSV into one series per company.

    Parameters
    ----------
    source : text stream or str
        CSV content. A ``str`` is treated as the file content itself, not a
        path; use :func:`read_dataset` for paths.

    Returns
    -------
    list of CashFlowSeries
        Sorted by company id, each with observations sorted by date.

    Raises
    ------
    DatasetError
        On a missing header column, a malformed date or number, day columns
        inconsistent with the date, or a duplicated (company, date) pair.
    """
    text = source if isinstance(source, str) else source.read()
    if text.startswith("\ufeff"):
        text = text[1:]
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise DatasetError("empty input: header row required")
    reader = csv.reader(io.StringIO(text), delimiter=_sniff_delimiter(lines[0]))
    header = [h.strip() for h in next(reader)]
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise DatasetError(f"header is missing column(s): {', '.join(missing)}", 1)
    idx = {c: header.index(c) for c in COLUMNS}

    rows: dict[int, dict[dt.date, CashFlowObservation]] = {}
    for lineno, fields in enumerate(reader, start=2):
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) < len(header):
            raise DatasetError(f"expected {len(header)} fields, got {len(fields)}", lineno)
        raw_date = fields[idx["Date"]].strip()
        try:
            date = dt.date.fromisoformat(raw_date)
        except ValueError:
            raise DatasetError(f"malformed date {raw_date!r} (expected YYYY-MM-DD)", lineno) from None
        company = _parse_int(fields[idx["Company"]], "Company", lineno)
        value = _parse_number(fields[idx["NetCF"]], lineno)
        dom = _parse_int(fields[idx["DayMonth"]], "DayMonth", lineno)
        dow = _parse_int(fields[idx["DayWeek"]], "DayWeek", lineno)
        try:
            obs = CashFlowObservation(date, value, dom, dow)
        except DatasetError as exc:
            raise DatasetError(str(exc), lineno) from None
        per_company = rows.setdefault(company, {})
        if date in per_company:
            raise DatasetError(f"duplicate row for company {company} on {raw_date}", lineno)
        per_company[date] = obs

    if not rows:
        raise DatasetError("no data rows")
    return [
        CashFlowSeries(cid, tuple(obs for _, obs in sorted(rows[cid].items())))
        for cid in sorted(rows)
    ]


def read_dataset(path) -> list[CashFlowSeries]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_dataset(fh)


def write_dataset(series: Iterable[CashFlowSeries], dest: IO[str]) -> None:
    """Write series in the canonical column order.

    Values are written with ``repr`` so that parsing the output recovers the
    exact floats.
    """
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(COLUMNS)
    for s in series:
        for o in s.observations:
            writer.writerow(
                [o.date.isoformat(), s.company_id, repr(o.net_flow), o.day_of_month, o.day_of_week]
            )


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------

def summarize(series: CashFlowSeries | Sequence[float], strict: bool = False) -> SummaryStatistics:
    """Table-style summary of a series.

    Kurtosis is reported in excess form (``m4 / m2**2 - 3``) and skewness as
    ``m3 / m2**1.5``, where ``m_k`` are central sample moments. The standard
    deviation uses ``ddof=1``.

    Statistics that are undefined (std for a single value, kurtosis and
    skewness for a single value or zero variance) are ``None``, unless
    ``strict`` is set, in which case a ``ValueError`` is raised.
    """
    y = series.values if isinstance(series, CashFlowSeries) else np.asarray(series, dtype=float)
    n = y.size
    if n == 0:
        raise ValueError("cannot summarize an empty series")
    null_share = float(np.count_nonzero(y == 0.0)) / n
    mean = float(np.mean(y))
    lo, hi = float(y.min()), float(y.max())
    # rounding in the mean can push it a hair outside [min, max]
    mean = min(max(mean, lo), hi)
    std = kurt = skew = None
    try:
        std, kurt, skew = moment_statistics(y)
    except ValueError:
        if strict:
            raise
        if n >= 2:
            std = 0.0
    return SummaryStatistics(n, null_share, mean, std, kurt, skew, lo, hi)


def moment_statistics(values: Sequence[float]) -> tuple[float, float, float]:
    """Return ``(std, excess_kurtosis, skewness)``.

    Raises
    ------
    ValueError
        If fewer than two values are given or the values have zero variance.
    """
    y = np.asarray(values, dtype=float)
    if y.size < 2:
        raise ValueError("moment statistics need at least 2 observations")
    d = y - y.mean()
    scale = np.max(np.abs(d))
    if scale == 0.0:
        raise ValueError("zero variance: kurtosis and skewness are undefined")
    # the moment ratios are scale free; rescaling avoids under/overflow
    d = d / scale
    m2 = np.mean(d**2)
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    std = float(scale * np.sqrt(m2 * y.size / (y.size - 1)))
    return std, float(m4 / m2**2 - 3.0), float(m3 / m2**1.5)


def poincare_pairs(series: CashFlowSeries | Sequence[float], lag: int = 1) -> LaggedPairs:
    """Pairs ``(y[t], y[t + lag])`` in time order."""
    if int(lag) != lag or lag < 1:
        raise ValueError(f"lag must be a positive integer, got {lag!r}")
    lag = int(lag)
    y = series.values if isinstance(series, CashFlowSeries) else np.asarray(series, dtype=float)
    pairs = tuple((float(a), float(b)) for a, b in zip(y[:-lag], y[lag:])) if lag < y.size else ()
    return LaggedPairs(lag, pairs)
