from datetime import datetime, timezone

from hypothesis import given
from hypothesis import strategies as st

from floodcast import timeutil


def test_epoch_iso_round_trip_known_values():
    assert timeutil.iso_to_epoch("1970-01-01T00:00:00Z") == 0
    assert timeutil.iso_to_epoch("2015-03-01T12:30:15Z") == int(
        datetime(2015, 3, 1, 12, 30, 15, tzinfo=timezone.utc).timestamp()
    )
    assert timeutil.epoch_to_iso(0) == "1970-01-01T00:00:00Z"


@given(st.integers(min_value=-30_000_000_000, max_value=30_000_000_000))
def test_epoch_iso_round_trip_property(epoch):
    assert timeutil.iso_to_epoch(timeutil.epoch_to_iso(epoch)) == epoch


@given(st.integers(min_value=0, max_value=20_000_000_000))
def test_matches_stdlib_datetime(epoch):
    expected = datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    assert timeutil.epoch_to_iso(epoch) == expected


def test_month_helpers():
    assert timeutil.month_key_of_epoch(timeutil.iso_to_epoch("2015-02-28T23:59:59Z")) == "2015-02"
    assert timeutil.prev_month_key("2015-01") == "2014-12"
    assert timeutil.next_month_key("2015-12") == "2016-01"
    start, end = timeutil.month_bounds("2016-02")
    assert (end - start) == 29 * 86400  # leap year
    assert timeutil.month_slot_count("2015-01") == 31 * 96


def test_bad_timestamps_rejected():
    for bad in ("2015-01-01 00:00:00Z", "2015-01-01T00:00:00", "20150101T000000Z",
                "2015-13-01T00:00:00Z", ""):
        try:
            timeutil.iso_to_epoch(bad)
            raise AssertionError(f"{bad!r} should not parse")
        except ValueError:
            pass
