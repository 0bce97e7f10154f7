"""Parsers for the four gauge datasets plus NOAA-style forecast files.

All inputs are plain UTF-8 CSV with a mandatory header, comma separators
and ``\\n`` line endings. Exact headers:

    stage       gauge_id,timestamp,stage_ft
    thresholds  gauge_id,minor_ft,moderate_ft,major_ft
    precip      gauge_id,date,precip_mm
    attributes  gauge_id,<attr1>,<attr2>,...
    forecasts   gauge_id,issued_at,valid_at,forecast_stage_ft

Timestamps are ISO-8601 UTC with a ``Z`` suffix at second precision.
Stage is feet, precipitation millimeters; no unit inference anywhere.
An empty ``stage_ft`` field records a gap at that timestamp (zero is a
valid stage, so gaps are never encoded as 0).

Parsers are pure functions of the file contents. In ``strict`` mode any
malformed row aborts the parse; in ``lenient`` mode malformed rows are
counted, skipped, and reported through the returned table's ``skipped``
list.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyJoinError,
    HorizonExceededError,
    MissingHeaderError,
    NonMonotonicTimestampError,
    NonPositiveMinorError,
    ThresholdOrderViolationError,
    UnparseableRowError,
)
from .timeutil import date_to_days, iso_to_epoch

STAGE_HEADER = ["gauge_id", "timestamp", "stage_ft"]
THRESHOLD_HEADER = ["gauge_id", "minor_ft", "moderate_ft", "major_ft"]
PRECIP_HEADER = ["gauge_id", "date", "precip_mm"]
FORECAST_HEADER = ["gauge_id", "issued_at", "valid_at", "forecast_stage_ft"]

REQUIRED_ATTRIBUTES = ("impervious_pct", "elevation_m", "characteristic_length")

FORECAST_MAX_HORIZON_S = 72 * 3600

STRICT = "strict"
LENIENT = "lenient"


# --- domain types ----------------------------------------------------------

@dataclass(frozen=True)
class StageSeries:
    """River-stage record for one gauge.

    times are epoch seconds, strictly increasing; stages are feet with NaN
    marking a recorded gap. Nominal cadence is 15 minutes but gaps (missing
    rows or NaN readings) are allowed and never interpolated.
    """

    gauge_id: str
    times: np.ndarray
    stages: np.ndarray

    def __len__(self):
        return len(self.times)

    @property
    def n_valid(self) -> int:
        return int(np.count_nonzero(~np.isnan(self.stages)))


@dataclass(frozen=True)
class FloodThresholds:
    gauge_id: str
    minor: float
    moderate: float | None = None
    major: float | None = None


@dataclass(frozen=True)
class DailyPrecip:
    """Daily precipitation totals; days are days-since-epoch, strictly increasing."""

    gauge_id: str
    days: np.ndarray
    precip_mm: np.ndarray

    def __len__(self):
        return len(self.days)


@dataclass(frozen=True)
class BasinAttributes:
    gauge_id: str
    attributes: dict[str, float]


@dataclass(frozen=True)
class ForecastSeries:
    """Stage forecasts for one gauge, ordered by (issued_at, valid_at)."""

    gauge_id: str
    issued_at: np.ndarray
    valid_at: np.ndarray
    forecast_stage: np.ndarray

    def __len__(self):
        return len(self.issued_at)


@dataclass
class ParsedTable:
    """Per-gauge parse result plus lenient-mode skip diagnostics."""

    by_gauge: dict
    skipped: list[str] = field(default_factory=list)

    @property
    def gauge_ids(self) -> list[str]:
        return sorted(self.by_gauge)

    def __contains__(self, gauge_id):
        return gauge_id in self.by_gauge

    def __getitem__(self, gauge_id):
        return self.by_gauge[gauge_id]


@dataclass(frozen=True)
class GaugeRecord:
    """One gauge with all four data components present."""

    gauge_id: str
    series: StageSeries
    thresholds: FloodThresholds
    precip: DailyPrecip
    attributes: BasinAttributes


@dataclass
class JoinResult:
    records: list[GaugeRecord]
    # gauge_id -> names of the components it is missing; only partially
    # covered gauges appear here
    missing: dict[str, list[str]]

    @property
    def gauge_ids(self) -> list[str]:
        return [r.gauge_id for r in self.records]


# --- helpers ---------------------------------------------------------------

def _open_rows(path, expected_header):
    fh = open(path, "r", encoding="utf-8", newline="")
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        fh.close()
        raise MissingHeaderError(f"{path}: empty file, expected header {expected_header}")
    if header != expected_header:
        fh.close()
        raise MissingHeaderError(
            f"{path}: bad header {header!r}, expected {expected_header!r}"
        )
    return fh, reader


def _check_strictness(strictness):
    if strictness not in (STRICT, LENIENT):
        raise ValueError(f"strictness must be 'strict' or 'lenient', got {strictness!r}")


def _finite_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


class _RowError(Exception):
    """Internal: row-level problem routed to skip-or-abort by strictness."""


def _parse_grouped(path, header, strictness, parse_row, finish_gauge, error_cls):
    """Shared parse loop: validate header, group rows by gauge, finish each gauge.

    parse_row(row) -> (gauge_id, payload) or raises _RowError.
    finish_gauge(gauge_id, payloads, skipped) -> per-gauge object; may raise
    _RowError for gauge-level invariant violations (duplicate timestamps).
    """
    _check_strictness(strictness)
    fh, reader = _open_rows(path, header)
    groups: dict[str, list] = {}
    skipped: list[str] = []
    try:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                gauge_id, payload = parse_row(row)
            except _RowError as exc:
                if strictness == STRICT:
                    raise error_cls(f"{path}:{lineno}: {exc}") from None
                skipped.append(f"{path}:{lineno}: {exc}")
                continue
            groups.setdefault(gauge_id, []).append(payload)
    finally:
        fh.close()

    by_gauge = {}
    for gauge_id in sorted(groups):
        try:
            by_gauge[gauge_id] = finish_gauge(gauge_id, groups[gauge_id], skipped if strictness == LENIENT else None)
        except _RowError as exc:
            raise NonMonotonicTimestampError(f"{path}: gauge {gauge_id}: {exc}") from None
    return ParsedTable(by_gauge=by_gauge, skipped=skipped)


# --- stage -----------------------------------------------------------------

def parse_stage_csv(path, strictness=STRICT) -> ParsedTable:
    """Parse a stage CSV into one StageSeries per gauge.

    Rows are sorted per gauge by timestamp. Duplicate timestamps violate the
    strictly-increasing invariant: strict mode raises
    NonMonotonicTimestampError, lenient mode keeps the first row and skips
    the rest.
    """

    def parse_row(row):
        if len(row) != 3:
            raise _RowError(f"expected 3 fields, got {len(row)}")
        gauge_id, ts, stage = row
        if not gauge_id:
            raise _RowError("empty gauge_id")
        try:
            epoch = iso_to_epoch(ts)
        except ValueError as exc:
            raise _RowError(str(exc)) from None
        if stage == "":
            value = math.nan  # explicit gap, not zero
        else:
            try:
                value = _finite_float(stage)
            except ValueError:
                raise _RowError(f"unparseable stage_ft {stage!r}") from None
            if value < 0:
                raise _RowError(f"negative stage_ft {value}")
        return gauge_id, (epoch, value)

    def finish(gauge_id, rows, lenient_skips):
        rows.sort(key=lambda r: r[0])
        times = np.fromiter((r[0] for r in rows), dtype=np.int64, count=len(rows))
        stages = np.fromiter((r[1] for r in rows), dtype=np.float64, count=len(rows))
        dup = np.nonzero(np.diff(times) == 0)[0]
        if dup.size:
            if lenient_skips is None:
                raise _RowError(f"duplicate timestamp at epoch {int(times[dup[0] + 1])}")
            keep = np.ones(len(times), dtype=bool)
            keep[dup + 1] = False
            for i in dup + 1:
                lenient_skips.append(
                    f"gauge {gauge_id}: duplicate timestamp at epoch {int(times[i])}"
                )
            times, stages = times[keep], stages[keep]
        return StageSeries(gauge_id=gauge_id, times=times, stages=stages)

    return _parse_grouped(path, STAGE_HEADER, strictness, parse_row, finish, UnparseableRowError)


# --- thresholds ------------------------------------------------------------

def parse_thresholds_csv(path) -> ParsedTable:
    """Parse flood thresholds; moderate/major may be empty. Always strict."""
    fh, reader = _open_rows(path, THRESHOLD_HEADER)
    by_gauge = {}
    try:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise UnparseableRowError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            gauge_id, minor_s, moderate_s, major_s = row
            try:
                minor = _finite_float(minor_s)
                moderate = _finite_float(moderate_s) if moderate_s else None
                major = _finite_float(major_s) if major_s else None
            except ValueError as exc:
                raise UnparseableRowError(f"{path}:{lineno}: {exc}") from None
            if minor <= 0:
                raise NonPositiveMinorError(f"{path}:{lineno}: minor_ft {minor} must be > 0")
            ladder = [minor] + [v for v in (moderate, major) if v is not None]
            if any(a > b for a, b in zip(ladder, ladder[1:])):
                raise ThresholdOrderViolationError(
                    f"{path}:{lineno}: thresholds must satisfy minor <= moderate <= major, got {row[1:]}"
                )
            if gauge_id in by_gauge:
                raise UnparseableRowError(f"{path}:{lineno}: duplicate gauge_id {gauge_id}")
            by_gauge[gauge_id] = FloodThresholds(gauge_id, minor, moderate, major)
    finally:
        fh.close()
    return ParsedTable(by_gauge=by_gauge)


# --- precipitation ---------------------------------------------------------

def parse_precip_csv(path, strictness=STRICT) -> ParsedTable:
    """Parse daily precipitation totals into one DailyPrecip per gauge."""

    def parse_row(row):
        if len(row) != 3:
            raise _RowError(f"expected 3 fields, got {len(row)}")
        gauge_id, date_s, mm_s = row
        if not gauge_id:
            raise _RowError("empty gauge_id")
        try:
            day = date_to_days(date_s)
        except ValueError as exc:
            raise _RowError(str(exc)) from None
        try:
            mm = _finite_float(mm_s)
        except ValueError:
            raise _RowError(f"unparseable precip_mm {mm_s!r}") from None
        if mm < 0:
            raise _RowError(f"negative precip_mm {mm}")
        return gauge_id, (day, mm)

    def finish(gauge_id, rows, lenient_skips):
        rows.sort(key=lambda r: r[0])
        days = np.fromiter((r[0] for r in rows), dtype=np.int64, count=len(rows))
        mm = np.fromiter((r[1] for r in rows), dtype=np.float64, count=len(rows))
        dup = np.nonzero(np.diff(days) == 0)[0]
        if dup.size:
            if lenient_skips is None:
                raise _RowError(f"duplicate date at day {int(days[dup[0] + 1])}")
            keep = np.ones(len(days), dtype=bool)
            keep[dup + 1] = False
            for i in dup + 1:
                lenient_skips.append(f"gauge {gauge_id}: duplicate date at day {int(days[i])}")
            days, mm = days[keep], mm[keep]
        return DailyPrecip(gauge_id=gauge_id, days=days, precip_mm=mm)

    return _parse_grouped(path, PRECIP_HEADER, strictness, parse_row, finish, UnparseableRowError)


# --- basin attributes ------------------------------------------------------

def parse_attributes_csv(path, strictness=STRICT) -> ParsedTable:
    """Parse basin attributes; one row per gauge, no missing values allowed.

    The header must contain impervious_pct, elevation_m and
    characteristic_length (any extra numeric columns are kept). A row with
    an empty cell is rejected with a diagnostic naming the column.
    """
    _check_strictness(strictness)
    fh = open(path, "r", encoding="utf-8", newline="")
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        fh.close()
        raise MissingHeaderError(f"{path}: empty file, expected attributes header")
    if not header or header[0] != "gauge_id" or len(header) < 2:
        fh.close()
        raise MissingHeaderError(
            f"{path}: bad header {header!r}, expected gauge_id,<attr1>,..."
        )
    attr_names = header[1:]
    if len(set(attr_names)) != len(attr_names):
        fh.close()
        raise MissingHeaderError(f"{path}: duplicate attribute columns in header")
    missing_required = [c for c in REQUIRED_ATTRIBUTES if c not in attr_names]
    if missing_required:
        fh.close()
        raise MissingHeaderError(f"{path}: header lacks required columns {missing_required}")

    by_gauge = {}
    skipped = []
    try:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                if len(row) != len(header):
                    raise _RowError(f"expected {len(header)} fields, got {len(row)}")
                gauge_id = row[0]
                if not gauge_id:
                    raise _RowError("empty gauge_id")
                if gauge_id in by_gauge:
                    raise _RowError(f"duplicate gauge_id {gauge_id}")
                attrs = {}
                for name, cell in zip(attr_names, row[1:]):
                    if cell == "":
                        raise _RowError(f"missing value in column {name!r}")
                    try:
                        attrs[name] = _finite_float(cell)
                    except ValueError:
                        raise _RowError(f"unparseable value {cell!r} in column {name!r}") from None
                pct = attrs["impervious_pct"]
                if not 0.0 <= pct <= 100.0:
                    raise _RowError(f"impervious_pct {pct} outside [0, 100]")
            except _RowError as exc:
                if strictness == STRICT:
                    raise UnparseableRowError(f"{path}:{lineno}: {exc}") from None
                skipped.append(f"{path}:{lineno}: {exc}")
                continue
            by_gauge[gauge_id] = BasinAttributes(gauge_id=gauge_id, attributes=attrs)
    finally:
        fh.close()
    return ParsedTable(by_gauge=by_gauge, skipped=skipped)


# --- forecasts -------------------------------------------------------------

def parse_forecast_csv(path, strictness=STRICT) -> ParsedTable:
    """Parse NOAA-style forecasts; horizon above 72 h raises HorizonExceededError."""

    def parse_row(row):
        if len(row) != 4:
            raise _RowError(f"expected 4 fields, got {len(row)}")
        gauge_id, issued_s, valid_s, stage_s = row
        if not gauge_id:
            raise _RowError("empty gauge_id")
        try:
            issued = iso_to_epoch(issued_s)
            valid = iso_to_epoch(valid_s)
        except ValueError as exc:
            raise _RowError(str(exc)) from None
        try:
            stage = _finite_float(stage_s)
        except ValueError:
            raise _RowError(f"unparseable forecast_stage_ft {stage_s!r}") from None
        if valid < issued:
            raise _RowError(f"valid_at precedes issued_at ({valid_s} < {issued_s})")
        if valid - issued > FORECAST_MAX_HORIZON_S:
            raise _HorizonError(
                f"forecast horizon {(valid - issued) / 3600:.1f} h exceeds 72 h"
            )
        return gauge_id, (issued, valid, stage)

    def finish(gauge_id, rows, lenient_skips):
        rows.sort(key=lambda r: (r[0], r[1]))
        issued = np.fromiter((r[0] for r in rows), dtype=np.int64, count=len(rows))
        valid = np.fromiter((r[1] for r in rows), dtype=np.int64, count=len(rows))
        stage = np.fromiter((r[2] for r in rows), dtype=np.float64, count=len(rows))
        return ForecastSeries(gauge_id, issued, valid, stage)

    _check_strictness(strictness)
    fh, reader = _open_rows(path, FORECAST_HEADER)
    groups: dict[str, list] = {}
    skipped: list[str] = []
    try:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                gauge_id, payload = parse_row(row)
            except _HorizonError as exc:
                if strictness == STRICT:
                    raise HorizonExceededError(f"{path}:{lineno}: {exc}") from None
                skipped.append(f"{path}:{lineno}: {exc}")
                continue
            except _RowError as exc:
                if strictness == STRICT:
                    raise UnparseableRowError(f"{path}:{lineno}: {exc}") from None
                skipped.append(f"{path}:{lineno}: {exc}")
                continue
            groups.setdefault(gauge_id, []).append(payload)
    finally:
        fh.close()
    by_gauge = {g: finish(g, rows, None) for g, rows in sorted(groups.items())}
    return ParsedTable(by_gauge=by_gauge, skipped=skipped)


class _HorizonError(_RowError):
    pass


# --- join ------------------------------------------------------------------

def join_gauges(series: ParsedTable, thresholds: ParsedTable, precip: ParsedTable,
                attributes: ParsedTable) -> JoinResult:
    """Inner-join the four tables on gauge_id.

    Gauges missing any component are reported in ``missing`` rather than
    silently dropped. Raises EmptyJoinError when no gauge carries all four
    components.
    """
    tables = {
        "stage": series,
        "thresholds": thresholds,
        "precip": precip,
        "attributes": attributes,
    }
    all_ids = set()
    for table in tables.values():
        all_ids.update(table.by_gauge)

    records = []
    missing = {}
    for gauge_id in sorted(all_ids):
        absent = [name for name, table in tables.items() if gauge_id not in table]
        if absent:
            missing[gauge_id] = absent
            continue
        records.append(
            GaugeRecord(
                gauge_id=gauge_id,
                series=series[gauge_id],
                thresholds=thresholds[gauge_id],
                precip=precip[gauge_id],
                attributes=attributes[gauge_id],
            )
        )
    if not records:
        raise EmptyJoinError(
            f"no gauge has all four components (saw {len(all_ids)} gauge ids)"
        )
    return JoinResult(records=records, missing=missing)
