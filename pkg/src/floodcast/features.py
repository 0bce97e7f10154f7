"""Feature engineering and dataset assembly.

Gauge records become (gauge, month) examples for the flood-occurrence
target and per-event examples for the time-to-peak target. Three feature
groups mirror the experiment ladder:

    e1  basin attributes + prior-month precipitation stats
        (no river-height information; the ungauged setting)
    e2  e1 + stage stats from the prior month (gauge-month target) or the
        30 days before event start (time-to-peak targets)
    e3  e2 + the labeled month's own precipitation stats (rainfall oracle)

Features for month m always come from month m-1 plus static attributes, so
every e1/e2 feature is computable strictly before the labeled month.
Normalization is min-max fitted on the training split only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientCoverageError,
    NoPriorMonthError,
    TooFewGaugesError,
    UnfittedNormalizerError,
)
from .hydrology import FLOOD, INSUFFICIENT_DATA, NO_FLOOD, TimeToPeak
from .ingest import DailyPrecip, GaugeRecord, StageSeries
from .timeutil import (
    CADENCE_SECONDS,
    SECONDS_PER_DAY,
    epoch_to_iso,
    month_bounds,
    month_key_of_epoch,
    month_slot_count,
    prev_month_key,
)

EXPERIMENTS = ("e1", "e2", "e3")
MIN_WINDOW_COVERAGE = 0.5

STAGE_STAT_NAMES = ("stage_mean", "stage_max", "stage_min", "stage_std",
                    "stage_p90", "frac_above_half_minor")
PRECIP_STAT_NAMES = ("precip_total", "precip_max_day", "precip_wet_days")
WET_DAY_MM = 1.0

TRAIN, VAL, TEST = "train", "val", "test"
SPLIT_FRACTIONS = (0.6, 0.2, 0.2)


@dataclass
class ExampleSet:
    """Assembled examples in columnar form.

    keys hold the labeled month ("YYYY-MM") for gauge-month examples and
    the event-start timestamp for time-to-peak examples. Feature order is
    identical for every row.
    """

    feature_names: list[str]
    features: np.ndarray
    labels: np.ndarray
    gauge_ids: list[str]
    keys: list[str]

    def __len__(self):
        return len(self.labels)

    def subset(self, mask) -> "ExampleSet":
        idx = np.nonzero(mask)[0]
        return ExampleSet(
            feature_names=list(self.feature_names),
            features=self.features[idx],
            labels=self.labels[idx],
            gauge_ids=[self.gauge_ids[i] for i in idx],
            keys=[self.keys[i] for i in idx],
        )


# --- window statistics -------------------------------------------------------


def _stage_window_stats(series: StageSeries, start: int, end: int,
                        expected_slots: int, minor_ft: float) -> dict:
    lo = np.searchsorted(series.times, start, side="left")
    hi = np.searchsorted(series.times, end, side="left")
    vals = series.stages[lo:hi]
    vals = vals[~np.isnan(vals)]
    if len(vals) < MIN_WINDOW_COVERAGE * expected_slots:
        raise InsufficientCoverageError(
            f"gauge {series.gauge_id}: {len(vals)}/{expected_slots} readings in window"
        )
    return {
        "stage_mean": float(np.mean(vals)),
        "stage_max": float(np.max(vals)),
        "stage_min": float(np.min(vals)),
        "stage_std": float(np.std(vals)),
        "stage_p90": float(np.percentile(vals, 90)),
        "frac_above_half_minor": float(np.mean(vals >= 0.5 * minor_ft)),
    }


def monthly_stats(series: StageSeries, month: str, minor_ft: float) -> dict:
    """Six stage statistics over one calendar month.

    Raises InsufficientCoverageError below 50% of the month's expected
    15-minute slots.
    """
    start, end = month_bounds(month)
    return _stage_window_stats(series, start, end, month_slot_count(month), minor_ft)


def monthly_precip_stats(precip: DailyPrecip, month: str) -> dict:
    """Total, max daily, and wet-day count (>= 1 mm) for one month.

    Days absent from the record contribute nothing; a month with no
    records at all yields (0, 0, 0).
    """
    start, end = month_bounds(month)
    lo = np.searchsorted(precip.days, start // SECONDS_PER_DAY, side="left")
    hi = np.searchsorted(precip.days, end // SECONDS_PER_DAY, side="left")
    mm = precip.precip_mm[lo:hi]
    if len(mm) == 0:
        return {"precip_total": 0.0, "precip_max_day": 0.0, "precip_wet_days": 0.0}
    return {
        "precip_total": float(np.sum(mm)),
        "precip_max_day": float(np.max(mm)),
        "precip_wet_days": float(np.count_nonzero(mm >= WET_DAY_MM)),
    }


# --- normalization -----------------------------------------------------------


@dataclass
class Normalizer:
    """Per-feature min-max scaler; fit on the training split only.

    Transformed training values span [0, 1] per non-constant feature;
    validation/test values may land outside that range. Constant features
    map to 0.0.
    """

    feature_names: list[str] | None = None
    mins: np.ndarray | None = None
    maxs: np.ndarray | None = None

    @property
    def fitted(self) -> bool:
        return self.mins is not None


def fit_normalizer(train: ExampleSet) -> Normalizer:
    if len(train) == 0:
        raise ValueError("cannot fit a normalizer on an empty example set")
    return Normalizer(
        feature_names=list(train.feature_names),
        mins=train.features.min(axis=0),
        maxs=train.features.max(axis=0),
    )


def apply_normalizer(norm: Normalizer, examples: ExampleSet) -> ExampleSet:
    if not norm.fitted:
        raise UnfittedNormalizerError("apply_normalizer called before fit")
    if norm.feature_names != examples.feature_names:
        raise ValueError("normalizer feature names do not match example set")
    span = norm.maxs - norm.mins
    scaled = np.where(span > 0, (examples.features - norm.mins) / np.where(span > 0, span, 1.0), 0.0)
    return ExampleSet(
        feature_names=list(examples.feature_names),
        features=scaled,
        labels=examples.labels.copy(),
        gauge_ids=list(examples.gauge_ids),
        keys=list(examples.keys),
    )


# --- assembly ----------------------------------------------------------------


def _check_experiment(experiment: str):
    if experiment not in EXPERIMENTS:
        raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")


def _attr_block(record: GaugeRecord, names) -> list[float]:
    return [record.attributes.attributes[n] for n in names]


def _suffixed(stats: dict, names, suffix: str) -> tuple[list[str], list[float]]:
    return [f"{n}_{suffix}" for n in names], [stats[n] for n in names]


def assemble_gauge_month(records: list[GaugeRecord], month_labels: dict,
                         experiment: str) -> ExampleSet:
    """Build gauge-month examples for one experiment.

    month_labels maps gauge_id -> {month: flood/no_flood/insufficient_data}
    (see floodcast.pipeline.collect_month_labels). A month m is included
    iff its own label is defined and the prior month m-1 has sufficient
    stage coverage; the row set is therefore identical across e1/e2/e3 so
    the experiments stay comparable. The first month of every series drops
    out by construction.
    """
    _check_experiment(experiment)
    attr_names = list(records[0].attributes.attributes) if records else []
    feature_names = None
    rows, labels, gauge_ids, keys = [], [], [], []

    for record in records:
        gauge_labels = month_labels.get(record.gauge_id, {})
        for month in sorted(gauge_labels):
            status = gauge_labels[month]
            if status == INSUFFICIENT_DATA:
                continue
            prior = prev_month_key(month)
            if gauge_labels.get(prior, INSUFFICIENT_DATA) == INSUFFICIENT_DATA:
                continue
            try:
                stage_stats = monthly_stats(record.series, prior, record.thresholds.minor)
            except InsufficientCoverageError:
                continue
            names = list(attr_names)
            values = _attr_block(record, attr_names)
            n, v = _suffixed(monthly_precip_stats(record.precip, prior), PRECIP_STAT_NAMES, "prev")
            names += n
            values += v
            if experiment in ("e2", "e3"):
                n, v = _suffixed(stage_stats, STAGE_STAT_NAMES, "prev")
                names += n
                values += v
            if experiment == "e3":
                n, v = _suffixed(monthly_precip_stats(record.precip, month), PRECIP_STAT_NAMES, "cur")
                names += n
                values += v
            if feature_names is None:
                feature_names = names
            rows.append(values)
            labels.append(1 if status == FLOOD else 0)
            gauge_ids.append(record.gauge_id)
            keys.append(month)

    if not rows:
        raise NoPriorMonthError(
            "no gauge-month examples could be assembled (every month lacks a usable prior month)"
        )
    return ExampleSet(
        feature_names=feature_names,
        features=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        gauge_ids=gauge_ids,
        keys=keys,
    )


def assemble_ttp(records: list[GaugeRecord], ttp_map: dict, experiment: str,
                 target_bin: int) -> ExampleSet:
    """Build one-vs-rest time-to-peak examples for bin ``target_bin``.

    ttp_map maps gauge_id -> list[TimeToPeak] (no-peak events already
    excluded). The reference month is the one containing the event start;
    e1 uses the prior month's precip stats, e2 adds stage stats over the 30
    days before event start, e3 adds the reference month's own precip.
    """
    _check_experiment(experiment)
    if target_bin not in (0, 1, 2, 3):
        raise ValueError(f"target_bin must be in 0..3, got {target_bin}")
    attr_names = list(records[0].attributes.attributes) if records else []
    window_slots = 30 * SECONDS_PER_DAY // CADENCE_SECONDS
    feature_names = None
    rows, labels, gauge_ids, keys = [], [], [], []

    for record in records:
        for ttp in ttp_map.get(record.gauge_id, []):
            event = ttp.event
            event_month = month_key_of_epoch(event.start)
            prior = prev_month_key(event_month)
            try:
                stage_stats = _stage_window_stats(
                    record.series, event.start - 30 * SECONDS_PER_DAY, event.start,
                    window_slots, record.thresholds.minor,
                )
            except InsufficientCoverageError:
                continue
            names = list(attr_names)
            values = _attr_block(record, attr_names)
            n, v = _suffixed(monthly_precip_stats(record.precip, prior), PRECIP_STAT_NAMES, "prev")
            names += n
            values += v
            if experiment in ("e2", "e3"):
                n, v = _suffixed(stage_stats, STAGE_STAT_NAMES, "prev")
                names += n
                values += v
            if experiment == "e3":
                n, v = _suffixed(monthly_precip_stats(record.precip, event_month), PRECIP_STAT_NAMES, "cur")
                names += n
                values += v
            if feature_names is None:
                feature_names = names
            rows.append(values)
            labels.append(1 if ttp.bin == target_bin else 0)
            gauge_ids.append(record.gauge_id)
            keys.append(epoch_to_iso(event.start))

    if not rows:
        raise NoPriorMonthError(
            "no time-to-peak examples could be assembled (no event has a usable history window)"
        )
    return ExampleSet(
        feature_names=feature_names,
        features=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        gauge_ids=gauge_ids,
        keys=keys,
    )


def assemble_experiment(records, labels, experiment: str, target: str) -> ExampleSet:
    """Dispatch on target: ``gauge-month`` or ``ttp-bin:K`` (K in 0..3)."""
    if target == "gauge-month":
        return assemble_gauge_month(records, labels, experiment)
    if target.startswith("ttp-bin:"):
        return assemble_ttp(records, labels, experiment, int(target.split(":", 1)[1]))
    raise ValueError(f"unknown target {target!r}")


# --- splitting ---------------------------------------------------------------


@dataclass(frozen=True)
class SplitAssignment:
    assignment: dict[str, str]
    seed: int

    def of(self, gauge_id: str) -> str:
        return self.assignment[gauge_id]

    def gauges(self, split: str) -> list[str]:
        return sorted(g for g, s in self.assignment.items() if s == split)


def split_by_gauge(gauge_ids, seed: int) -> SplitAssignment:
    """Randomly assign each gauge's entire record to train/val/test.

    Deterministic for a given seed. Counts are floor(0.6n)/floor(0.2n)/
    floor(0.2n) with leftover gauges going to train first, then val:
    10 gauges -> 6/2/2, 5 -> 3/1/1.
    """
    ids = sorted(set(gauge_ids))
    n = len(ids)
    if n < 5:
        raise TooFewGaugesError(f"need >= 5 gauges to split 60-20-20, got {n}")
    counts = [int(frac * n) for frac in SPLIT_FRACTIONS]
    for i in range(n - sum(counts)):
        counts[i % 3] += 1
    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(n)]
    assignment = {}
    cursor = 0
    for split, count in zip((TRAIN, VAL, TEST), counts):
        for gauge_id in order[cursor:cursor + count]:
            assignment[gauge_id] = split
        cursor += count
    return SplitAssignment(assignment=assignment, seed=seed)


def split_examples(examples: ExampleSet, split: SplitAssignment, which: str) -> ExampleSet:
    mask = np.array([split.of(g) == which for g in examples.gauge_ids], dtype=bool)
    return examples.subset(mask)


def class_balance(examples: ExampleSet) -> float:
    """Fraction of positive labels; also the random-baseline precision."""
    if len(examples) == 0:
        return 0.0
    return float(np.mean(examples.labels))


# --- dataset CSV -------------------------------------------------------------


def write_examples_csv(examples: ExampleSet, path):
    """Serialize to ``gauge_id,month,label,<feature...>`` for inspection."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["gauge_id", "month", "label"] + examples.feature_names) + "\n")
        for i in range(len(examples)):
            cells = [examples.gauge_ids[i], examples.keys[i], str(int(examples.labels[i]))]
            cells += [repr(float(v)) for v in examples.features[i]]
            fh.write(",".join(cells) + "\n")


def read_examples_csv(path) -> ExampleSet:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if header[:3] != ["gauge_id", "month", "label"]:
            raise ValueError(f"{path}: not an examples CSV")
        feature_names = header[3:]
        gauge_ids, keys, labels, rows = [], [], [], []
        for line in fh:
            cells = line.rstrip("\n").split(",")
            gauge_ids.append(cells[0])
            keys.append(cells[1])
            labels.append(int(cells[2]))
            rows.append([float(c) for c in cells[3:]])
    return ExampleSet(
        feature_names=feature_names,
        features=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        gauge_ids=gauge_ids,
        keys=keys,
    )
