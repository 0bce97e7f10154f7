"""Label derivation from raw series.

Two label families come out of this module: monthly flood occurrence
(stage reaching the minor threshold anywhere in the calendar month) and
time-to-peak after precipitation events, binned at 3.12 / 7.44 / 18 hours.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveTtpError, UnknownGaugeError
from .ingest import DailyPrecip, FloodThresholds, StageSeries
from .timeutil import (
    CADENCE_SECONDS,
    SECONDS_PER_DAY,
    month_bounds,
    month_slot_count,
)

FLOOD = "flood"
NO_FLOOD = "no_flood"
INSUFFICIENT_DATA = "insufficient_data"

# Fraction of a month's expected 15-minute slots that must carry readings
# before the flood label is trusted.
MIN_MONTH_COVERAGE = 0.5

# Bin edges in hours; bin 0 is ttp < 3.12, the upper bins are left-closed:
# [3.12, 7.44), [7.44, 18), [18, inf).
TTP_BIN_EDGES = (3.12, 7.44, 18.0)

DEFAULT_ONSET_MM = 10.0
DEFAULT_DRY_GAP_DAYS = 1
DEFAULT_SEARCH_HOURS = 168.0


@dataclass(frozen=True)
class PrecipEvent:
    """A wet spell in the daily precipitation record.

    start/end are epoch seconds delimiting a half-open interval: start is
    midnight of the first event day, end is midnight after the last.
    """

    gauge_id: str
    start: int
    end: int
    total_precip_mm: float


@dataclass(frozen=True)
class TimeToPeak:
    event: PrecipEvent
    peak_time: int
    ttp_hours: float
    bin: int


def month_flood_label(series: StageSeries, thresholds: FloodThresholds, month: str) -> str:
    """Label one calendar month as flood / no_flood / insufficient_data.

    Flood iff any reading in the month reaches the minor threshold (>=,
    NOAA thresholds are defined as reached). Months covering fewer than
    half of their expected 15-minute slots are labeled insufficient_data.
    """
    if series.gauge_id != thresholds.gauge_id:
        raise UnknownGaugeError(
            f"series gauge {series.gauge_id!r} != thresholds gauge {thresholds.gauge_id!r}"
        )
    start, end = month_bounds(month)
    lo = np.searchsorted(series.times, start, side="left")
    hi = np.searchsorted(series.times, end, side="left")
    stages = series.stages[lo:hi]
    valid = stages[~np.isnan(stages)]
    if len(valid) < MIN_MONTH_COVERAGE * month_slot_count(month):
        return INSUFFICIENT_DATA
    return FLOOD if np.any(valid >= thresholds.minor) else NO_FLOOD


def detect_precip_events(precip: DailyPrecip, onset_mm: float = DEFAULT_ONSET_MM,
                         dry_gap_days: int = DEFAULT_DRY_GAP_DAYS) -> list[PrecipEvent]:
    """Segment the daily record into disjoint precipitation events.

    An event starts on the first day with precip >= onset_mm after at least
    dry_gap_days consecutive days each below onset_mm (the start of the
    record counts as an arbitrarily long dry spell), and ends on the last
    day >= onset_mm before the next such dry gap. Days missing from the
    record count as dry. The event total sums every recorded day inside the
    span, sub-onset days included.
    """
    if onset_mm <= 0:
        raise ValueError(f"onset_mm must be > 0, got {onset_mm}")
    if dry_gap_days < 1:
        raise ValueError(f"dry_gap_days must be >= 1, got {dry_gap_days}")

    days = precip.days
    mm = precip.precip_mm
    wet_idx = np.nonzero(mm >= onset_mm)[0]
    if wet_idx.size == 0:
        return []

    events = []
    span_first = wet_idx[0]
    span_last = wet_idx[0]
    for i in wet_idx[1:]:
        # calendar days between consecutive wet days, counting record gaps
        dry_run = days[i] - days[span_last] - 1
        if dry_run >= dry_gap_days:
            events.append(_make_event(precip, span_first, span_last))
            span_first = i
        span_last = i
    events.append(_make_event(precip, span_first, span_last))
    return events


def _make_event(precip: DailyPrecip, first_idx: int, last_idx: int) -> PrecipEvent:
    start = int(precip.days[first_idx]) * SECONDS_PER_DAY
    end = (int(precip.days[last_idx]) + 1) * SECONDS_PER_DAY
    total = float(np.sum(precip.precip_mm[first_idx:last_idx + 1]))
    return PrecipEvent(gauge_id=precip.gauge_id, start=start, end=end, total_precip_mm=total)


def time_to_peak(series: StageSeries, event: PrecipEvent,
                 search_hours: float = DEFAULT_SEARCH_HOURS) -> TimeToPeak | None:
    """Locate the stage peak in the window (event.start, start + search_hours].

    Returns None (no peak) when the window holds fewer than 4 valid
    readings, or when the maximum sits on the window's last reading, i.e.
    the rise had not crested by the end of the window. Ties on the maximum
    resolve to the earliest timestamp.
    """
    if search_hours <= 0:
        raise ValueError(f"search_hours must be > 0, got {search_hours}")
    if series.gauge_id != event.gauge_id:
        raise UnknownGaugeError(
            f"series gauge {series.gauge_id!r} != event gauge {event.gauge_id!r}"
        )
    window_end = event.start + int(round(search_hours * 3600))
    lo = np.searchsorted(series.times, event.start, side="right")
    hi = np.searchsorted(series.times, window_end, side="right")
    times = series.times[lo:hi]
    stages = series.stages[lo:hi]
    ok = ~np.isnan(stages)
    times, stages = times[ok], stages[ok]
    if len(times) < 4:
        return None
    peak_idx = int(np.argmax(stages))  # argmax returns the first maximum
    if peak_idx == len(times) - 1:
        return None
    peak_time = int(times[peak_idx])
    ttp_hours = (peak_time - event.start) / 3600.0
    return TimeToPeak(event=event, peak_time=peak_time, ttp_hours=ttp_hours,
                      bin=bin_ttp(ttp_hours))


def bin_ttp(ttp_hours: float) -> int:
    """Map a positive time-to-peak in hours onto bins 0..3."""
    if not ttp_hours > 0:
        raise NonPositiveTtpError(f"ttp_hours must be > 0, got {ttp_hours}")
    for i, edge in enumerate(TTP_BIN_EDGES):
        if ttp_hours < edge:
            return i
    return 3
