"""UTC time helpers shared across the toolkit.

Timestamps are handled as integer epoch seconds everywhere inside the
package; ISO-8601 strings with a trailing ``Z`` appear only at file
boundaries. Months are identified by ``"YYYY-MM"`` keys. All arithmetic is
pure integer civil-calendar math, so results are identical on every
platform and never touch the local timezone.
"""

from __future__ import annotations

SECONDS_PER_DAY = 86400
CADENCE_SECONDS = 900  # nominal 15-minute gauge cadence

_DAYS_IN_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)


def is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def days_in_month(year: int, month: int) -> int:
    if month == 2 and is_leap(year):
        return 29
    return _DAYS_IN_MONTH[month - 1]


def days_from_civil(year: int, month: int, day: int) -> int:
    """Days since 1970-01-01 for a proleptic Gregorian date."""
    year -= month <= 2
    era = (year if year >= 0 else year - 399) // 400
    yoe = year - era * 400
    doy = (153 * (month + (-3 if month > 2 else 9)) + 2) // 5 + day - 1
    doe = yoe * 365 + yoe // 4 - yoe // 100 + doy
    return era * 146097 + doe - 719468


def civil_from_days(days: int) -> tuple[int, int, int]:
    """Inverse of :func:`days_from_civil`."""
    days += 719468
    era = (days if days >= 0 else days - 146096) // 146097
    doe = days - era * 146097
    yoe = (doe - doe // 1460 + doe // 36524 - doe // 146096) // 365
    year = yoe + era * 400
    doy = doe - (365 * yoe + yoe // 4 - yoe // 100)
    mp = (5 * doy + 2) // 153
    day = doy - (153 * mp + 2) // 5 + 1
    month = mp + (3 if mp < 10 else -9)
    return year + (month <= 2), month, day


def epoch_from_civil(year, month, day, hour=0, minute=0, second=0) -> int:
    return (
        days_from_civil(year, month, day) * SECONDS_PER_DAY
        + hour * 3600
        + minute * 60
        + second
    )


def civil_from_epoch(epoch: int) -> tuple[int, int, int, int, int, int]:
    days, rem = divmod(epoch, SECONDS_PER_DAY)
    year, month, day = civil_from_days(days)
    hour, rem = divmod(rem, 3600)
    minute, second = divmod(rem, 60)
    return year, month, day, hour, minute, second


def iso_to_epoch(text: str) -> int:
    """Parse ``YYYY-MM-DDTHH:MM:SSZ`` into epoch seconds.

    Fixed-width slicing instead of datetime: roughly 4x faster over the
    multi-million-row stage files, and free of tz/DST edge cases.
    """
    if (len(text) != 20 or text[4] != "-" or text[7] != "-" or text[10] != "T"
            or text[13] != ":" or text[16] != ":" or text[19] != "Z"):
        raise ValueError(f"bad UTC timestamp: {text!r}")
    try:
        year, month, day = int(text[0:4]), int(text[5:7]), int(text[8:10])
        hour, minute, second = int(text[11:13]), int(text[14:16]), int(text[17:19])
    except ValueError:
        raise ValueError(f"bad UTC timestamp: {text!r}") from None
    if (not 1 <= month <= 12 or not 1 <= day <= days_in_month(year, month)
            or hour > 23 or minute > 59 or second > 59):
        raise ValueError(f"bad UTC timestamp: {text!r}")
    return epoch_from_civil(year, month, day, hour, minute, second)


def epoch_to_iso(epoch: int) -> str:
    y, mo, d, h, mi, s = civil_from_epoch(int(epoch))
    return f"{y:04d}-{mo:02d}-{d:02d}T{h:02d}:{mi:02d}:{s:02d}Z"


def date_to_days(text: str) -> int:
    """Parse ``YYYY-MM-DD`` into days since the epoch."""
    if len(text) != 10 or text[4] != "-" or text[7] != "-":
        raise ValueError(f"bad date: {text!r}")
    try:
        return days_from_civil(int(text[0:4]), int(text[5:7]), int(text[8:10]))
    except ValueError:
        raise ValueError(f"bad date: {text!r}") from None


def days_to_date(days: int) -> str:
    y, m, d = civil_from_days(int(days))
    return f"{y:04d}-{m:02d}-{d:02d}"


def month_key(year: int, month: int) -> str:
    return f"{year:04d}-{month:02d}"


def parse_month_key(key: str) -> tuple[int, int]:
    if len(key) != 7 or key[4] != "-":
        raise ValueError(f"bad month key: {key!r}")
    year, month = int(key[0:4]), int(key[5:7])
    if not 1 <= month <= 12:
        raise ValueError(f"bad month key: {key!r}")
    return year, month


def month_key_of_epoch(epoch: int) -> str:
    y, m, _, _, _, _ = civil_from_epoch(epoch)
    return month_key(y, m)


def month_bounds(key: str) -> tuple[int, int]:
    """Half-open epoch-second interval [start, end) of a calendar month."""
    year, month = parse_month_key(key)
    start = epoch_from_civil(year, month, 1)
    end = start + days_in_month(year, month) * SECONDS_PER_DAY
    return start, end


def month_slot_count(key: str) -> int:
    """Expected number of 15-minute readings in a calendar month."""
    year, month = parse_month_key(key)
    return days_in_month(year, month) * (SECONDS_PER_DAY // CADENCE_SECONDS)


def prev_month_key(key: str) -> str:
    year, month = parse_month_key(key)
    if month == 1:
        return month_key(year - 1, 12)
    return month_key(year, month - 1)


def next_month_key(key: str) -> str:
    year, month = parse_month_key(key)
    if month == 12:
        return month_key(year + 1, 1)
    return month_key(year, month + 1)
