"""Synthetic multi-basin bundles with exact ground truth.

Rainfall-runoff model: each day's rain enters an upstream runoff store
that drains at rate k_in into the channel store, which drains at rate k
(both 1/hours). Stepping uses the exact solution of the two-store cascade,
so sampled stages equal the continuous response at every grid instant and
a single impulse peaks at the closed-form time

    t* = ln(k_in / k) / (k_in - k)    hours after injection.

Stage = baseflow + response; thresholds are calibrated by bisection over a
global exceedance quantile of per-gauge monthly maxima until the realized
flood-month rate approximates the requested one. A planted-signal variant
instead draws flood labels from an explicit monotone function of
imperviousness x monthly rainfall and rescales each month's response so
the threshold crossings realize exactly those labels.

Side-car truth (flood months, per-storm time to peak, planted
probabilities) is computed from the generator's own arrays with code
independent of the hydrology module, so the two can cross-check each
other.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import InfeasibleRateError, TooFewGaugesError
from .ingest import StageSeries
from .timeutil import (
    CADENCE_SECONDS,
    SECONDS_PER_DAY,
    days_from_civil,
    days_in_month,
    days_to_date,
    month_key,
    parse_month_key,
)

STEPS_PER_DAY = SECONDS_PER_DAY // CADENCE_SECONDS
SEARCH_WINDOW_HOURS = 168.0
EVENT_ONSET_MM = 10.0  # sidecar events use the default segmentation parameters

DEFAULT_POSITIVE_RATE = 0.055
DEFAULT_START_MONTH = "2015-01"

STAGE_DECIMALS = 4
FORECAST_DECIMALS = 2

_WET_DAY_PROB = 0.25
_LOGNORMAL_MEAN = math.log(8.0)
_LOGNORMAL_SIGMA = 1.0

_CALIBRATION_ITERS = 50


@dataclass(frozen=True)
class SyntheticBasin:
    gauge_id: str
    impervious_pct: float
    elevation_m: float
    characteristic_length: float
    drainage_km2: float
    k: float        # channel drainage rate, 1/h
    k_in: float     # runoff delivery rate, 1/h (> k)
    gain: float     # response feet per mm of rain
    baseflow: float


@dataclass
class Bundle:
    """Paths and parameters of one generated dataset."""

    directory: str
    stage_csv: str
    thresholds_csv: str
    precip_csv: str
    attributes_csv: str
    forecast_csv: str
    months_truth_csv: str
    events_truth_csv: str
    planted_csv: str | None
    meta_path: str
    params: dict


def closed_form_peak_hours(k: float, k_in: float) -> float:
    """Continuous argmax of the cascade impulse response, in hours."""
    if not 0 < k < k_in:
        raise ValueError(f"need 0 < k < k_in, got k={k}, k_in={k_in}")
    return math.log(k_in / k) / (k_in - k)


def simulate_response(k: float, k_in: float, step_inputs) -> np.ndarray:
    """Channel response to per-step inputs, sampled exactly on the grid."""
    dt = CADENCE_SECONDS / 3600.0
    a = math.exp(-k * dt)
    a_in = math.exp(-k_in * dt)
    runoff = lfilter([1.0], [1.0, -a_in], np.asarray(step_inputs, dtype=np.float64))
    transfer = k_in / (k_in - k) * (a - a_in)
    lagged = np.concatenate([[0.0], runoff[:-1]])
    return lfilter([1.0], [1.0, -a], transfer * lagged)


def simulate_stage(k, k_in, gain, baseflow, daily_mm) -> np.ndarray:
    """Stage series at 15-minute cadence; each day's rain lands at midnight."""
    daily_mm = np.asarray(daily_mm, dtype=np.float64)
    inputs = np.zeros(len(daily_mm) * STEPS_PER_DAY)
    inputs[::STEPS_PER_DAY] = gain * daily_mm
    return baseflow + simulate_response(k, k_in, inputs)


def impulse_response_series(gauge_id, k, k_in, gain, impulse_mm, n_days=14,
                            start_epoch=0) -> tuple[StageSeries, float]:
    """A single-impulse gauge series plus the closed-form peak delay.

    The impulse lands at start_epoch (day 0, midnight); full precision, no
    rounding, for use as an analytic oracle.
    """
    daily = np.zeros(n_days)
    daily[0] = impulse_mm
    stages = simulate_stage(k, k_in, gain, 0.0, daily)
    times = start_epoch + CADENCE_SECONDS * np.arange(len(stages), dtype=np.int64)
    series = StageSeries(gauge_id=gauge_id, times=times, stages=stages)
    return series, closed_form_peak_hours(k, k_in)


# --- basin and storm draws ---------------------------------------------------


def _draw_basin(gauge_id: str, rng) -> SyntheticBasin:
    k = float(rng.uniform(0.03, 0.6))
    ratio = float(rng.uniform(1.5, 6.0))
    return SyntheticBasin(
        gauge_id=gauge_id,
        impervious_pct=float(rng.uniform(1.0, 60.0)),
        elevation_m=float(rng.uniform(5.0, 1500.0)),
        characteristic_length=float(rng.lognormal(1.0, 0.6)),
        drainage_km2=float(rng.lognormal(5.0, 1.0)),
        k=k,
        k_in=k * ratio,
        gain=float(rng.uniform(0.01, 0.05)),
        baseflow=float(rng.uniform(0.5, 4.0)),
    )


def _draw_daily_rain(n_days: int, rng) -> np.ndarray:
    wet = rng.random(n_days) < _WET_DAY_PROB
    amounts = rng.lognormal(_LOGNORMAL_MEAN, _LOGNORMAL_SIGMA, size=n_days)
    return np.where(wet, amounts, 0.0)


# --- ground-truth bookkeeping (independent of the hydrology module) ----------


def _monthly_max(stages: np.ndarray, month_lengths) -> np.ndarray:
    bounds = np.concatenate([[0], np.cumsum(month_lengths)[:-1]]) * STEPS_PER_DAY
    return np.maximum.reduceat(stages, bounds)


def _wet_runs(daily_mm: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of consecutive days with rain >= the onset threshold."""
    wet = daily_mm >= EVENT_ONSET_MM
    runs = []
    start = None
    for i, flag in enumerate(wet):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(wet) - 1))
    return runs


def _true_peak_hours(stages: np.ndarray, start_day: int) -> float | None:
    """Argmax scan over (event start, start + 168 h]; None when uncrested."""
    first = start_day * STEPS_PER_DAY + 1  # strictly after midnight onset
    last = min(start_day * STEPS_PER_DAY + int(SEARCH_WINDOW_HOURS * 3600 / CADENCE_SECONDS),
               len(stages) - 1)
    if last - first + 1 < 4:
        return None
    window = stages[first:last + 1]
    peak = int(np.argmax(window))
    if peak == len(window) - 1:
        return None
    return (first + peak - start_day * STEPS_PER_DAY) * CADENCE_SECONDS / 3600.0


# --- threshold calibration ---------------------------------------------------


def _calibrate_thresholds(monthly_maxima, baseflows, target_rate):
    """Bisection over a global scale on per-gauge exceedance quantiles.

    Each gauge's anchor is the (1 - target) quantile of its own monthly
    maxima; a shared multiplier (which, unlike a raw quantile level, can
    push thresholds above every observed maximum) is bisected until the
    realized flood-month fraction approximates the target.
    """
    n_gauges = len(monthly_maxima)
    n_months = len(monthly_maxima[0])
    anchors = [
        max(float(np.quantile(mx, 1.0 - target_rate)), bf + 0.05)
        for mx, bf in zip(monthly_maxima, baseflows)
    ]

    def realized(scale):
        thresholds = []
        hits = 0
        for anchor, mx, bf in zip(anchors, monthly_maxima, baseflows):
            t = max(bf + 0.05 + (anchor - bf - 0.05) * scale, bf + 0.05)
            thresholds.append(t)
            hits += int(np.count_nonzero(mx >= t))
        return hits / (n_gauges * n_months), thresholds

    lo, hi = 0.0, 4.0  # realized rate is nonincreasing in the scale
    best_err, best_thresholds = math.inf, None
    for _ in range(_CALIBRATION_ITERS):
        scale = (lo + hi) / 2.0
        rate, thresholds = realized(scale)
        err = abs(rate - target_rate)
        if err < best_err:
            best_err, best_thresholds = err, thresholds
        if rate > target_rate:
            lo = scale
        else:
            hi = scale
    tolerance = max(0.015, 2.0 / (n_gauges * n_months))
    if best_err > tolerance:
        raise InfeasibleRateError(
            f"calibrated flood rate misses target {target_rate} by {best_err:.4f} "
            f"(tolerance {tolerance:.4f})"
        )
    return best_thresholds


# --- planted signal ----------------------------------------------------------


def planted_flood_probability(u, signal_strength, target_rate):
    """Conditional flood probability as a function of the driver rank u.

    (1-s)*t + s*ramp(u) with the ramp centered at the (1-t) rank quantile
    and half-width 0.25*(1-s): at s=0 the probability is constant t, at
    s=1 it is the deterministic indicator u > 1-t. The expected positive
    rate is t for every s.
    """
    s, t = signal_strength, target_rate
    cut = 1.0 - t
    width = 0.25 * (1.0 - s)
    u = np.asarray(u, dtype=np.float64)
    if width == 0.0:
        ramp = (u > cut).astype(np.float64)
    else:
        ramp = np.clip((u - (cut - width)) / (2.0 * width), 0.0, 1.0)
    return (1.0 - s) * t + s * ramp


def _plant_labels(basins, daily_mm_all, month_lengths, target_rate,
                  signal_strength, rng):
    """Draw planted flood labels and the sidecar rule record."""
    n_months = len(month_lengths)
    month_day_bounds = np.concatenate([[0], np.cumsum(month_lengths)])
    drivers = np.empty((len(basins), n_months))
    for gi, (basin, daily) in enumerate(zip(basins, daily_mm_all)):
        for mi in range(n_months):
            total = float(np.sum(daily[month_day_bounds[mi]:month_day_bounds[mi + 1]]))
            drivers[gi, mi] = basin.impervious_pct / 100.0 * total
    flat = drivers.reshape(-1)
    ranks = np.empty(len(flat))
    ranks[np.argsort(flat, kind="stable")] = np.arange(len(flat))
    u = ((ranks + 0.5) / len(flat)).reshape(drivers.shape)
    probs = planted_flood_probability(u, signal_strength, target_rate)
    labels = (rng.random(probs.shape) < probs).astype(np.int64)
    return drivers, u, probs, labels


def _force_crossings(stages, baseflow, threshold, month_lengths, labels_row):
    """Rescale each month's response so threshold crossings match the labels."""
    margin_hi = baseflow + 1.05 * (threshold - baseflow)
    margin_lo = baseflow + 0.95 * (threshold - baseflow)
    bounds = np.concatenate([[0], np.cumsum(month_lengths)]) * STEPS_PER_DAY
    for mi, want in enumerate(labels_row):
        sl = slice(bounds[mi], bounds[mi + 1])
        excess = stages[sl] - baseflow
        peak = float(np.max(excess))
        if want:
            if peak < margin_hi - baseflow:
                if peak <= 1e-9:
                    # bone-dry month: inject a two-day triangular pulse
                    steps = bounds[mi + 1] - bounds[mi]
                    apex = steps // 2
                    half = STEPS_PER_DAY
                    lo = max(0, apex - half)
                    hi = min(steps, apex + half)
                    profile = 1.0 - np.abs(np.arange(lo, hi) - apex) / half
                    excess[lo:hi] = np.maximum(excess[lo:hi],
                                               (margin_hi - baseflow) * profile)
                else:
                    excess *= (margin_hi - baseflow) / peak
        else:
            if peak > margin_lo - baseflow:
                excess *= (margin_lo - baseflow) / peak
        stages[sl] = baseflow + excess


# --- CSV writers -------------------------------------------------------------


_TOD_STRINGS = [
    f"T{(s // 3600):02d}:{(s % 3600 // 60):02d}:00Z"
    for s in range(0, SECONDS_PER_DAY, CADENCE_SECONDS)
]


def _write_stage(path, gauge_order, stage_arrays, first_day):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("gauge_id,timestamp,stage_ft\n")
        for gauge_id in gauge_order:
            values = stage_arrays[gauge_id].tolist()  # Python floats: exact reprs
            lines = []
            n_days = len(values) // STEPS_PER_DAY
            for day in range(n_days):
                date = days_to_date(first_day + day)
                base = day * STEPS_PER_DAY
                for slot in range(STEPS_PER_DAY):
                    lines.append(f"{gauge_id},{date}{_TOD_STRINGS[slot]},{values[base + slot]!r}")
            fh.write("\n".join(lines))
            fh.write("\n")


def _write_precip(path, gauge_order, daily_arrays, first_day):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("gauge_id,date,precip_mm\n")
        for gauge_id in gauge_order:
            daily = daily_arrays[gauge_id]
            for day, mm in enumerate(daily):
                fh.write(f"{gauge_id},{days_to_date(first_day + day)},{float(mm)!r}\n")


def _write_thresholds(path, basins, thresholds):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("gauge_id,minor_ft,moderate_ft,major_ft\n")
        for i, (basin, minor) in enumerate(zip(basins, thresholds)):
            if i % 2 == 0:
                fh.write(f"{basin.gauge_id},{minor!r},{round(minor * 1.3, 4)!r},"
                         f"{round(minor * 1.7, 4)!r}\n")
            else:
                fh.write(f"{basin.gauge_id},{minor!r},,\n")


_ATTR_COLUMNS = ("impervious_pct", "elevation_m", "characteristic_length",
                 "drainage_km2", "drainage_coef", "runoff_delay_ratio",
                 "response_gain", "baseflow_ft")


def _write_attributes(path, basins):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("gauge_id," + ",".join(_ATTR_COLUMNS) + "\n")
        for b in basins:
            values = (b.impervious_pct, b.elevation_m, b.characteristic_length,
                      b.drainage_km2, b.k, b.k_in / b.k, b.gain, b.baseflow)
            fh.write(b.gauge_id + "," + ",".join(repr(v) for v in values) + "\n")


def _write_forecasts(path, gauge_order, stage_arrays, first_day, rngs):
    """Daily 00Z issues, valid every 6 h out to 72 h, noisy truth."""
    lead_steps = [(j * 6 * 3600) // CADENCE_SECONDS for j in range(1, 13)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("gauge_id,issued_at,valid_at,forecast_stage_ft\n")
        for gauge_id in gauge_order:
            stages = stage_arrays[gauge_id]
            rng = rngs[gauge_id]
            n_days = len(stages) // STEPS_PER_DAY
            noise = rng.normal(0.0, 1.0, size=(n_days, len(lead_steps)))
            for day in range(n_days):
                issued = f"{days_to_date(first_day + day)}T00:00:00Z"
                base = day * STEPS_PER_DAY
                for j, lead in enumerate(lead_steps):
                    target = base + lead
                    if target >= len(stages):
                        continue
                    valid_day, valid_slot = divmod(target, STEPS_PER_DAY)
                    valid = f"{days_to_date(first_day + valid_day)}{_TOD_STRINGS[valid_slot]}"
                    spread = 0.05 + 0.25 * (j + 1) / len(lead_steps)
                    value = max(0.0, float(stages[target]) + spread * float(noise[day, j]))
                    fh.write(f"{gauge_id},{issued},{valid},{round(value, FORECAST_DECIMALS)!r}\n")


# --- bundle generation -------------------------------------------------------


def _month_plan(start_month: str, n_months: int):
    year, month = parse_month_key(start_month)
    keys, lengths = [], []
    for _ in range(n_months):
        keys.append(month_key(year, month))
        lengths.append(days_in_month(year, month))
        month += 1
        if month == 13:
            year, month = year + 1, 1
    return keys, lengths


def generate_bundle(n_gauges, n_months, seed, target_positive_rate=DEFAULT_POSITIVE_RATE,
                    out_dir=".", signal_strength=None,
                    start_month=DEFAULT_START_MONTH) -> Bundle:
    """Write a complete synthetic dataset plus ground truth into out_dir.

    Emits stage.csv, thresholds.csv, precip.csv, attributes.csv,
    forecast.csv, ground_truth_months.csv, ground_truth_events.csv, and
    bundle_meta.json; planted bundles (signal_strength not None) add
    planted_probabilities.csv recording the generating rule. Same
    arguments, same bytes.
    """
    if n_gauges < 5:
        raise TooFewGaugesError(f"need >= 5 gauges, got {n_gauges}")
    if n_months < 2:
        raise ValueError(f"need >= 2 months, got {n_months}")
    if not 0.0 < target_positive_rate < 1.0:
        raise ValueError(f"target_positive_rate must be in (0,1), got {target_positive_rate}")
    if signal_strength is not None and not 0.0 <= signal_strength <= 1.0:
        raise ValueError(f"signal_strength must be in [0,1], got {signal_strength}")

    month_keys, month_lengths = _month_plan(start_month, n_months)
    n_days = sum(month_lengths)
    year, month = parse_month_key(start_month)
    first_day = days_from_civil(year, month, 1)

    root = np.random.SeedSequence(seed)
    children = root.spawn(n_gauges + 1)
    plant_rng = np.random.default_rng(children[-1])

    basins = []
    daily_all = []
    stage_all = []
    gauge_rngs = {}
    for i in range(n_gauges):
        rng = np.random.default_rng(children[i])
        basin = _draw_basin(f"G{i + 1:04d}", rng)
        daily = _draw_daily_rain(n_days, rng)
        stages = simulate_stage(basin.k, basin.k_in, basin.gain, basin.baseflow, daily)
        basins.append(basin)
        daily_all.append(daily)
        stage_all.append(stages)
        gauge_rngs[basin.gauge_id] = rng

    planted = None
    if signal_strength is None:
        maxima = [_monthly_max(s, month_lengths) for s in stage_all]
        thresholds = _calibrate_thresholds(maxima, [b.baseflow for b in basins],
                                           target_positive_rate)
    else:
        thresholds = []
        for basin, stages in zip(basins, stage_all):
            mx = _monthly_max(stages, month_lengths)
            t = float(np.quantile(mx, 1.0 - target_positive_rate))
            thresholds.append(max(t, basin.baseflow + 0.05))
        drivers, u, probs, labels = _plant_labels(
            basins, daily_all, month_lengths, target_positive_rate,
            signal_strength, plant_rng)
        for gi, (basin, stages) in enumerate(zip(basins, stage_all)):
            _force_crossings(stages, basin.baseflow, thresholds[gi],
                             month_lengths, labels[gi])
        planted = (drivers, u, probs, labels)

    # 4-decimal stage grid becomes the authoritative truth before bookkeeping
    for stages in stage_all:
        np.round(stages, STAGE_DECIMALS, out=stages)

    flood_truth = []
    event_truth = []
    for gi, (basin, stages, daily) in enumerate(zip(basins, stage_all, daily_all)):
        mx = _monthly_max(stages, month_lengths)
        flags = (mx >= thresholds[gi]).astype(np.int64)
        if planted is not None and not np.array_equal(flags, planted[3][gi]):
            raise AssertionError(
                f"planted labels not realized for {basin.gauge_id}; "
                "crossing margins too small"
            )
        flood_truth.append(flags)
        rows = []
        for run_start, _ in _wet_runs(daily):
            ttp = _true_peak_hours(stages, run_start)
            if ttp is not None:
                rows.append((run_start, ttp))
        event_truth.append(rows)

    os.makedirs(out_dir, exist_ok=True)
    paths = Bundle(
        directory=out_dir,
        stage_csv=os.path.join(out_dir, "stage.csv"),
        thresholds_csv=os.path.join(out_dir, "thresholds.csv"),
        precip_csv=os.path.join(out_dir, "precip.csv"),
        attributes_csv=os.path.join(out_dir, "attributes.csv"),
        forecast_csv=os.path.join(out_dir, "forecast.csv"),
        months_truth_csv=os.path.join(out_dir, "ground_truth_months.csv"),
        events_truth_csv=os.path.join(out_dir, "ground_truth_events.csv"),
        planted_csv=os.path.join(out_dir, "planted_probabilities.csv")
        if planted is not None else None,
        meta_path=os.path.join(out_dir, "bundle_meta.json"),
        params={
            "n_gauges": n_gauges,
            "n_months": n_months,
            "seed": seed,
            "target_positive_rate": target_positive_rate,
            "signal_strength": signal_strength,
            "start_month": start_month,
        },
    )

    gauge_order = [b.gauge_id for b in basins]
    stage_map = dict(zip(gauge_order, stage_all))
    daily_map = dict(zip(gauge_order, daily_all))
    _write_stage(paths.stage_csv, gauge_order, stage_map, first_day)
    _write_precip(paths.precip_csv, gauge_order, daily_map, first_day)
    _write_thresholds(paths.thresholds_csv, basins, thresholds)
    _write_attributes(paths.attributes_csv, basins)
    _write_forecasts(paths.forecast_csv, gauge_order, stage_map, first_day, gauge_rngs)

    with open(paths.months_truth_csv, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("gauge_id,month,true_flood\n")
        for basin, flags in zip(basins, flood_truth):
            for key, flag in zip(month_keys, flags):
                fh.write(f"{basin.gauge_id},{key},{int(flag)}\n")

    with open(paths.events_truth_csv, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("gauge_id,event_start,true_ttp_hours\n")
        for basin, rows in zip(basins, event_truth):
            for run_start, ttp in rows:
                start_iso = f"{days_to_date(first_day + run_start)}T00:00:00Z"
                fh.write(f"{basin.gauge_id},{start_iso},{ttp!r}\n")

    if planted is not None:
        drivers, u, probs, labels = planted
        with open(paths.planted_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("gauge_id,month,driver,rank_u,flood_prob,true_flood\n")
            for gi, basin in enumerate(basins):
                for mi, key in enumerate(month_keys):
                    fh.write(f"{basin.gauge_id},{key},{float(drivers[gi, mi])!r},"
                             f"{float(u[gi, mi])!r},{float(probs[gi, mi])!r},"
                             f"{int(labels[gi, mi])}\n")

    with open(paths.meta_path, "w", encoding="utf-8") as fh:
        json.dump(paths.params, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def planted_signal(bundle: Bundle, signal_strength: float, out_dir=None) -> Bundle:
    """Regenerate a bundle variant whose flood labels follow a planted rule.

    Generation is seed-deterministic, so re-deriving from the source
    bundle's parameters and planting on top yields the documented variant
    semantics without mutating the original files.
    """
    params = dict(bundle.params)
    if out_dir is None:
        out_dir = bundle.directory.rstrip("/\\") + f"_planted{signal_strength:g}"
    return generate_bundle(
        n_gauges=params["n_gauges"],
        n_months=params["n_months"],
        seed=params["seed"],
        target_positive_rate=params["target_positive_rate"],
        out_dir=out_dir,
        signal_strength=signal_strength,
        start_month=params["start_month"],
    )
