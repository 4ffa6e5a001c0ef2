"""Minute-bar panel construction and the trading-session calendar.

The trading session is the 391 minutes from 09:30 (minute 0) to 16:00
(minute 390). A panel is a dense (company, day, minute) array block with
NaN marking absent cells; after construction it is immutable and safe to
share across threads. Calendar days are grouped into contiguous
half-year periods labelled 1..S, which all downstream statistics key on.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DataError,
    DuplicateCell,
    ExcludedPair,
    MalformedRow,
    MissingColumn,
    OverlappingRanges,
    UncoveredDate,
)

SESSION_MINUTES = 391
SESSION_OPEN = 9 * 60 + 30  # 09:30 as minutes past midnight

#: canonical field -> default column name
DEFAULT_SCHEMA = {
    "ticker": "ticker",
    "date": "date",
    "time": "minute",
    "volume": "volume",
    "open": "open",
    "high": "high",
    "low": "low",
    "close": "close",
}

CANONICAL_COLUMNS = ["ticker", "date", "minute", "volume", "open", "high", "low", "close"]


@dataclass(frozen=True)
class MinuteBar:
    """One minute of trading for one ticker on one day."""

    ticker: str
    date: dt.date
    minute: int
    volume: float
    open: float
    high: float
    low: float
    close: float

    def __post_init__(self):
        if not 0 <= self.minute <= 390:
            raise ValueError(f"minute {self.minute} outside session 0..390")
        if not (self.volume >= 0 and float(self.volume).is_integer()):
            raise ValueError(f"volume {self.volume} is not a non-negative integer")
        prices = (self.open, self.high, self.low, self.close)
        if any(not (p > 0 and math.isfinite(p)) for p in prices):
            raise ValueError(f"non-positive price in {prices}")
        if not (self.low <= min(self.open, self.close)
                and self.high >= max(self.open, self.close)
                and self.low <= self.high):
            raise ValueError(f"OHLC ordering violated: {prices}")


@dataclass
class SkippedRow:
    source: str
    line: int
    reason: str


@dataclass
class LoadReport:
    """What the loader kept and what it dropped, per input file."""

    files: list[str] = field(default_factory=list)
    n_rows: int = 0
    n_loaded: int = 0
    skipped: list[SkippedRow] = field(default_factory=list)

    def n_skipped_by_reason(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for row in self.skipped:
            out[row.reason] = out.get(row.reason, 0) + 1
        return out

    def to_json(self) -> dict:
        return {
            "files": list(self.files),
            "rows_read": self.n_rows,
            "rows_loaded": self.n_loaded,
            "rows_skipped": [
                {"source": s.source, "line": s.line, "reason": s.reason}
                for s in self.skipped
            ],
            "skipped_by_reason": self.n_skipped_by_reason(),
        }


@dataclass(frozen=True)
class MinutePanel:
    """Dense (company, day, minute) store of volume and OHLC.

    Arrays are float64 with NaN as the missing-cell marker; a cell is
    present iff its volume entry is finite, and present cells always
    carry a full OHLC quadruple. Axes are strictly sorted and
    duplicate-free.
    """

    companies: tuple[str, ...]
    days: tuple[dt.date, ...]
    volume: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray

    def __post_init__(self):
        if list(self.companies) != sorted(set(self.companies)):
            raise ValueError("company axis must be strictly sorted, duplicate-free")
        if list(self.days) != sorted(set(self.days)):
            raise ValueError("day axis must be strictly sorted, duplicate-free")
        shape = (len(self.companies), len(self.days), SESSION_MINUTES)
        for name in ("volume", "open", "high", "low", "close"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} array has shape {arr.shape}, want {shape}")
            arr.setflags(write=False)

    @property
    def n_companies(self) -> int:
        return len(self.companies)

    @property
    def n_days(self) -> int:
        return len(self.days)

    def company_index(self, ticker: str) -> int:
        try:
            return self.companies.index(ticker)
        except ValueError:
            raise DataError(f"ticker {ticker!r} not in panel") from None

    def day_index(self, day: dt.date) -> int:
        try:
            return self.days.index(day)
        except ValueError:
            raise DataError(f"day {day.isoformat()} not in panel") from None

    def present(self) -> np.ndarray:
        """Boolean mask of present cells."""
        return np.isfinite(self.volume)

    @staticmethod
    def from_bars(bars: Iterable[MinuteBar]) -> "MinutePanel":
        bars = list(bars)
        companies = tuple(sorted({b.ticker for b in bars}))
        days = tuple(sorted({b.date for b in bars}))
        c_pos = {c: i for i, c in enumerate(companies)}
        d_pos = {d: j for j, d in enumerate(days)}
        shape = (len(companies), len(days), SESSION_MINUTES)
        vol = np.full(shape, np.nan)
        o = np.full(shape, np.nan)
        h = np.full(shape, np.nan)
        lo = np.full(shape, np.nan)
        cl = np.full(shape, np.nan)
        for b in bars:
            i, j, t = c_pos[b.ticker], d_pos[b.date], b.minute
            if np.isfinite(vol[i, j, t]):
                raise DuplicateCell(
                    f"duplicate cell ({b.ticker}, {b.date.isoformat()}, minute {t})")
            vol[i, j, t] = b.volume
            o[i, j, t] = b.open
            h[i, j, t] = b.high
            lo[i, j, t] = b.low
            cl[i, j, t] = b.close
        return MinutePanel(companies, days, vol, o, h, lo, cl)


def _parse_minute(value: str, time_format: str) -> int:
    value = value.strip()
    fmt = time_format
    if fmt == "auto":
        fmt = "clock" if ":" in value else "index"
    if fmt == "clock":
        parts = value.split(":")
        if len(parts) == 3 and parts[2] == "00":
            parts = parts[:2]
        if len(parts) != 2:
            raise ValueError(f"bad clock time {value!r}")
        hh, mm = int(parts[0]), int(parts[1])
        if not (0 <= hh < 24 and 0 <= mm < 60):
            raise ValueError(f"bad clock time {value!r}")
        return hh * 60 + mm - SESSION_OPEN
    return int(value)


def _csv_paths(path) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        found = sorted(q for q in p.iterdir() if q.suffix.lower() == ".csv")
        if not found:
            raise DataError(f"no .csv files under {p}")
        return found
    if not p.exists():
        raise DataError(f"input path {p} does not exist")
    return [p]


def load_minute_bars(
    path,
    schema: Mapping[str, str] | None = None,
    *,
    time_format: str = "auto",
    strict: bool = False,
) -> tuple[MinutePanel, LoadReport]:
    """Load minute bars from one CSV, a list of CSVs, or a directory.

    Files with a ticker column hold any number of tickers; files without
    one are per-ticker files and the ticker is the filename stem.
    Malformed rows are skipped and reported (or raised when strict);
    rows outside the 09:30-16:00 session are always skipped and counted.
    A repeated (ticker, date, minute) cell rejects the whole load.
    """
    schema = dict(DEFAULT_SCHEMA, **(schema or {}))
    if isinstance(path, (list, tuple)):
        paths = [q for p in path for q in _csv_paths(p)]
    else:
        paths = _csv_paths(path)

    report = LoadReport()
    bars: dict[tuple[str, dt.date, int], MinuteBar] = {}

    for p in paths:
        report.files.append(str(p))
        with open(p, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{p}: empty file (header row required)") from None
            header = [h.strip() for h in header]
            col = {}
            for fld in ("date", "time", "volume", "open", "high", "low", "close"):
                name = schema[fld]
                if name not in header:
                    # the default time column has a common alternate spelling
                    if fld == "time" and "time" in header:
                        col[fld] = header.index("time")
                        continue
                    raise MissingColumn(f"{p}: column {name!r} (for {fld}) not in header")
                col[fld] = header.index(name)
            ticker_col = header.index(schema["ticker"]) if schema["ticker"] in header else None
            file_ticker = p.stem

            for line_no, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                report.n_rows += 1
                try:
                    minute = _parse_minute(row[col["time"]], time_format)
                except (ValueError, IndexError):
                    if strict:
                        raise MalformedRow(f"{p}:{line_no}: unparseable time field")
                    report.skipped.append(SkippedRow(str(p), line_no, "malformed"))
                    continue
                if not 0 <= minute <= 390:
                    report.skipped.append(SkippedRow(str(p), line_no, "out-of-session"))
                    continue
                try:
                    ticker = row[ticker_col].strip() if ticker_col is not None else file_ticker
                    bar = MinuteBar(
                        ticker=ticker,
                        date=dt.date.fromisoformat(row[col["date"]].strip()),
                        minute=minute,
                        volume=float(row[col["volume"]]),
                        open=float(row[col["open"]]),
                        high=float(row[col["high"]]),
                        low=float(row[col["low"]]),
                        close=float(row[col["close"]]),
                    )
                except (ValueError, IndexError) as exc:
                    if strict:
                        raise MalformedRow(f"{p}:{line_no}: {exc}") from None
                    report.skipped.append(SkippedRow(str(p), line_no, "malformed"))
                    continue
                key = (bar.ticker, bar.date, bar.minute)
                if key in bars:
                    raise DuplicateCell(
                        f"{p}:{line_no}: duplicate cell ({bar.ticker}, {bar.date}, {bar.minute})")
                bars[key] = bar
                report.n_loaded += 1

    if not bars:
        raise DataError("no usable rows in input")
    return MinutePanel.from_bars(bars.values()), report


def write_panel_csv(panel: MinutePanel, path) -> None:
    """Serialize to the canonical combined CSV (sorted, 17-digit floats)."""
    pres = panel.present()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CANONICAL_COLUMNS)
        for i, ticker in enumerate(panel.companies):
            for j, day in enumerate(panel.days):
                row_mask = pres[i, j]
                if not row_mask.any():
                    continue
                for t in np.nonzero(row_mask)[0]:
                    writer.writerow([
                        ticker,
                        day.isoformat(),
                        int(t),
                        format(panel.volume[i, j, t], ".17g"),
                        format(panel.open[i, j, t], ".17g"),
                        format(panel.high[i, j, t], ".17g"),
                        format(panel.low[i, j, t], ".17g"),
                        format(panel.close[i, j, t], ".17g"),
                    ])


@dataclass(frozen=True)
class SemesterIndex:
    """Contiguous half-year periods labelled 1..S plus per-period ticker
    exclusions. Every panel day maps to exactly one label."""

    boundaries: tuple[tuple[int, dt.date, dt.date], ...]
    exclusions: Mapping[int, frozenset[str]] = field(default_factory=dict)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(b[0] for b in self.boundaries)

    @property
    def n_semesters(self) -> int:
        return len(self.boundaries)

    def semester_of(self, day: dt.date) -> int:
        firsts = [b[1] for b in self.boundaries]
        k = bisect_right(firsts, day) - 1
        if k < 0 or day > self.boundaries[k][2]:
            raise UncoveredDate(f"day {day.isoformat()} outside all semester ranges")
        return self.boundaries[k][0]

    def range_of(self, s: int) -> tuple[dt.date, dt.date]:
        for label, first, last in self.boundaries:
            if label == s:
                return first, last
        raise DataError(f"no semester labelled {s}")

    def is_excluded(self, ticker: str, s: int) -> bool:
        return ticker in self.exclusions.get(s, frozenset())

    def with_exclusions(self, extra: Mapping[int, Iterable[str]]) -> "SemesterIndex":
        merged = {s: set(v) for s, v in self.exclusions.items()}
        for s, tickers in extra.items():
            merged.setdefault(int(s), set()).update(tickers)
        return SemesterIndex(self.boundaries,
                             {s: frozenset(v) for s, v in merged.items()})


def default_semester_boundaries(first_day: dt.date, last_day: dt.date) -> list[tuple[dt.date, dt.date]]:
    """Calendar half-years (Jan-Jun, Jul-Dec) covering the given span."""
    out = []
    year, first_half = first_day.year, first_day.month <= 6
    while True:
        if first_half:
            rng = (dt.date(year, 1, 1), dt.date(year, 6, 30))
        else:
            rng = (dt.date(year, 7, 1), dt.date(year, 12, 31))
        out.append(rng)
        if rng[1] >= last_day:
            return out
        first_half = not first_half
        if first_half:
            year += 1


def assign_semesters(panel: MinutePanel, boundaries: Sequence[tuple[dt.date, dt.date]]) -> SemesterIndex:
    """Label the panel's days with semesters 1..S in date order."""
    ranges = sorted(boundaries, key=lambda r: r[0])
    for (f1, l1), (f2, l2) in zip(ranges, ranges[1:]):
        if f2 <= l1:
            raise OverlappingRanges(
                f"ranges {f1}..{l1} and {f2}..{l2} overlap")
    for first, last in ranges:
        if first > last:
            raise DataError(f"range {first}..{last} is reversed")
    labelled = tuple((k + 1, first, last) for k, (first, last) in enumerate(ranges))
    index = SemesterIndex(labelled)
    for day in panel.days:
        index.semester_of(day)  # raises UncoveredDate
    return index


def semester_day_indices(panel: MinutePanel, index: SemesterIndex, s: int) -> np.ndarray:
    first, last = index.range_of(s)
    return np.array([j for j, d in enumerate(panel.days) if first <= d <= last], dtype=int)


def included_company_indices(panel: MinutePanel, index: SemesterIndex, s: int) -> np.ndarray:
    """Positions of companies not excluded in semester s. The single gate
    through which semester-scoped statistics see the company axis."""
    excl = index.exclusions.get(s, frozenset())
    return np.array([i for i, c in enumerate(panel.companies) if c not in excl], dtype=int)


def require_included(index: SemesterIndex, ticker: str, s: int) -> None:
    if index.is_excluded(ticker, s):
        raise ExcludedPair(f"({ticker}, semester {s}) is excluded")


@dataclass
class CoverageRecord:
    ticker: str
    semester: int
    n_days: int
    coverage: float
    included: bool


@dataclass
class ValidationReport:
    min_day_coverage: float
    records: list[CoverageRecord]

    def exclusions(self) -> dict[int, set[str]]:
        out: dict[int, set[str]] = {}
        for r in self.records:
            if not r.included:
                out.setdefault(r.semester, set()).add(r.ticker)
        return out

    def to_json(self) -> dict:
        return {
            "min_day_coverage": self.min_day_coverage,
            "pairs": [
                {
                    "ticker": r.ticker,
                    "semester": r.semester,
                    "n_days": r.n_days,
                    "coverage": r.coverage,
                    "included": r.included,
                }
                for r in self.records
            ],
        }


def validate_panel(panel: MinutePanel, index: SemesterIndex, min_day_coverage: float) -> ValidationReport:
    """Per (ticker, semester) coverage accounting.

    Coverage is the fraction of present minutes out of semester-days x 391;
    pairs under the threshold are flagged for downstream exclusion.
    """
    pres = panel.present()
    records = []
    for s in index.labels:
        day_idx = semester_day_indices(panel, index, s)
        denom = len(day_idx) * SESSION_MINUTES
        for i, ticker in enumerate(panel.companies):
            if denom == 0:
                records.append(CoverageRecord(ticker, s, 0, 0.0, False))
                continue
            cells = pres[i, day_idx, :]
            n_days = int(cells.any(axis=1).sum())
            coverage = float(cells.sum()) / denom
            records.append(CoverageRecord(
                ticker, s, n_days, coverage, coverage >= min_day_coverage))
    return ValidationReport(min_day_coverage, records)
