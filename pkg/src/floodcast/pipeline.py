"""End-to-end orchestration: ingest -> labels -> features -> models -> PR.

The CLI is a thin wrapper around this module; tests drive it directly.
Every run is fully determined by (data directory, config, seed): model
seeds derive from the master seed, grid evaluation order is fixed, and
report files are written with sorted keys and repr floats, so reruns are
byte-identical apart from the generated_at timestamp.
"""

from __future__ import annotations

import json
import os
import time

from . import evaluation, features, hydrology, models
from .errors import NoPositivesError
from .ingest import (
    join_gauges,
    parse_attributes_csv,
    parse_forecast_csv,
    parse_precip_csv,
    parse_stage_csv,
    parse_thresholds_csv,
)
from .timeutil import month_key_of_epoch, next_month_key

BUNDLE_FILES = {
    "stage": "stage.csv",
    "thresholds": "thresholds.csv",
    "precip": "precip.csv",
    "attributes": "attributes.csv",
    "forecast": "forecast.csv",
}

ALL_MODELS = list(models.MODEL_FAMILIES)
REPORT_PRECISION_TARGET = 0.5


def load_bundle(data_dir, strictness="strict"):
    """Parse the four core files of a bundle directory and join them."""
    stage = parse_stage_csv(os.path.join(data_dir, BUNDLE_FILES["stage"]), strictness)
    thresholds = parse_thresholds_csv(os.path.join(data_dir, BUNDLE_FILES["thresholds"]))
    precip = parse_precip_csv(os.path.join(data_dir, BUNDLE_FILES["precip"]), strictness)
    attributes = parse_attributes_csv(
        os.path.join(data_dir, BUNDLE_FILES["attributes"]), strictness)
    return join_gauges(stage, thresholds, precip, attributes)


def series_months(series) -> list[str]:
    """Calendar months touched by a series, first to last reading."""
    if len(series) == 0:
        return []
    first = month_key_of_epoch(int(series.times[0]))
    last = month_key_of_epoch(int(series.times[-1]))
    months = [first]
    while months[-1] != last:
        months.append(next_month_key(months[-1]))
    return months


def collect_month_labels(records) -> dict:
    """gauge_id -> {month: flood|no_flood|insufficient_data} over coverage."""
    labels = {}
    for record in records:
        labels[record.gauge_id] = {
            month: hydrology.month_flood_label(record.series, record.thresholds, month)
            for month in series_months(record.series)
        }
    return labels


def collect_ttp(records, onset_mm=hydrology.DEFAULT_ONSET_MM,
                dry_gap_days=hydrology.DEFAULT_DRY_GAP_DAYS,
                search_hours=hydrology.DEFAULT_SEARCH_HOURS) -> dict:
    """gauge_id -> list[TimeToPeak]; events without an observed peak drop out."""
    out = {}
    for record in records:
        events = hydrology.detect_precip_events(record.precip, onset_mm, dry_gap_days)
        peaks = []
        for event in events:
            ttp = hydrology.time_to_peak(record.series, event, search_hours)
            if ttp is not None:
                peaks.append(ttp)
        out[record.gauge_id] = peaks
    return out


def assemble_for_target(records, experiment, target):
    if target == "gauge-month":
        labels = collect_month_labels(records)
    elif target.startswith("ttp-bin:"):
        labels = collect_ttp(records)
    else:
        raise ValueError(f"unknown target {target!r}")
    return features.assemble_experiment(records, labels, experiment, target)


def run_experiment(data_dir, experiment, target, model_names, seed, out_dir,
                   grids=None, jobs=1, strictness="strict"):
    """Split, featurize, tune, and evaluate; write report + PR artifacts.

    Returns the report dict. On failure every file written so far is
    removed so a run directory is never left half-populated.
    """
    if experiment not in features.EXPERIMENTS:
        raise ValueError(f"experiment must be one of {features.EXPERIMENTS}")
    names = ALL_MODELS if model_names == "all" else list(model_names)
    for name in names:
        if name not in models.MODEL_FAMILIES:
            raise ValueError(f"unknown model {name!r}")
    grids = grids or {}

    join = load_bundle(data_dir, strictness)
    examples = assemble_for_target(join.records, experiment, target)
    split = features.split_by_gauge(join.gauge_ids, seed)
    train = features.split_examples(examples, split, features.TRAIN)
    val = features.split_examples(examples, split, features.VAL)
    test = features.split_examples(examples, split, features.TEST)
    for which, part in (("train", train), ("val", val), ("test", test)):
        if len(part) == 0 or int(part.labels.sum()) == 0:
            raise NoPositivesError(
                f"{which} split has {len(part)} examples and no positives; "
                "use more gauges/months or a different seed"
            )

    normalizer = features.fit_normalizer(train)
    train_n = features.apply_normalizer(normalizer, train)
    val_n = features.apply_normalizer(normalizer, val)
    test_n = features.apply_normalizer(normalizer, test)

    baseline = evaluation.random_baseline(test.labels)
    # jobs is deliberately not echoed: outputs must not depend on parallelism
    resolved = {
        "data_dir": os.path.abspath(data_dir),
        "experiment": experiment,
        "target": target,
        "models": names,
        "seed": seed,
        "strictness": strictness,
        "grids": {name: grids.get(name, models.DEFAULT_GRIDS[name]) for name in names},
    }

    os.makedirs(out_dir, exist_ok=True)
    written = []
    try:
        report = {
            "seed": seed,
            "experiment": experiment,
            "target": target,
            "config": _jsonable(resolved),
            "dataset": {
                "examples": len(examples),
                "features": len(examples.feature_names),
                "train": len(train),
                "val": len(val),
                "test": len(test),
                "gauges": {s: len(split.gauges(s)) for s in ("train", "val", "test")},
                "positive_rate_overall": features.class_balance(examples),
                "positive_rate_test": features.class_balance(test),
            },
            "baseline": {
                "average_precision": baseline.average_precision,
                "precision_level": baseline.precision_level,
            },
            # juxtaposed with recall_at_precision_0.5 below; never recomputed
            "reference_noaa": {
                "precision": evaluation.REFERENCE_NOAA_PRECISION,
                "recall": evaluation.REFERENCE_NOAA_RECALL,
                "label": evaluation.REFERENCE_NOAA_LABEL,
            },
            "models": {},
        }

        curves = {}
        for name in names:
            grid_axes = grids.get(name, models.DEFAULT_GRIDS[name])
            grid = models.expand_grid(grid_axes) if isinstance(grid_axes, dict) else list(grid_axes)
            result = models.tune(name, grid, train_n.features, train_n.labels,
                                 val_n.features, val_n.labels, seed=seed, jobs=jobs)
            scores = result.best_model.score(test_n.features)
            curve = evaluation.pr_curve(scores, test_n.labels)
            curves[name] = curve
            csv_path = os.path.join(out_dir, f"pr_{name}.csv")
            evaluation.emit_pr_csv(curve, csv_path)
            written.append(csv_path)
            report["models"][name] = {
                "best_params": _jsonable(result.best_params),
                "validation_ap": result.best_val_ap,
                "test_ap": curve.average_precision,
                "recall_at_precision_0.5": evaluation.recall_at_precision(
                    curve, REPORT_PRECISION_TARGET),
                "trials": [
                    {"params": _jsonable(p), "validation_ap": ap}
                    for p, ap in result.trials
                ],
            }

        curves["baseline"] = baseline
        svg_path = os.path.join(out_dir, "pr_all.svg")
        evaluation.emit_pr_svg(curves, svg_path)
        written.append(svg_path)

        config_path = os.path.join(out_dir, "config_resolved.json")
        _write_json(resolved, config_path)
        written.append(config_path)

        report["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        report_path = os.path.join(out_dir, "report.json")
        _write_json(report, report_path)
        written.append(report_path)
    except BaseException:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise
    return report


def run_noaa_eval(forecast_csv, data_dir, strictness="strict"):
    """Monthly NOAA-style comparison over a bundle's stage + threshold files."""
    forecasts = parse_forecast_csv(forecast_csv, strictness)
    stage = parse_stage_csv(os.path.join(data_dir, BUNDLE_FILES["stage"]), strictness)
    thresholds = parse_thresholds_csv(os.path.join(data_dir, BUNDLE_FILES["thresholds"]))
    comparison = evaluation.noaa_monthly_eval(forecasts, stage, thresholds)
    return {
        "computed": {
            "precision": comparison.precision,
            "recall": comparison.recall,
            "true_positives": comparison.true_positives,
            "false_positives": comparison.false_positives,
            "false_negatives": comparison.false_negatives,
            "true_negatives": comparison.true_negatives,
            "evaluated_gauge_months": comparison.evaluated_gauge_months,
        },
        "reference": {
            "precision": comparison.reference_precision,
            "recall": comparison.reference_recall,
            "label": comparison.reference_label,
        },
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
