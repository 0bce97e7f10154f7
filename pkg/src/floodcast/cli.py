"""Command-line front end.

Commands: synth, ingest, featurize, experiment, eval-noaa, report.
Exit codes: 0 success, 1 runtime/data error, 2 usage or configuration
error. A flat key=value config file can preset any long option
(dashes become underscores); explicit flags win over the config file,
and FLOODCAST_SEED is the last-resort seed source. Seeds are mandatory
where randomness is involved; there is no wall-clock default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import pipeline, synth
from .errors import FloodcastError
from .features import EXPERIMENTS

TARGET_BINS = ("0", "1", "2", "3")


def _load_config(path) -> dict:
    config = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            config[key.strip().replace("-", "_")] = value.strip()
    return config


def _merge(args, key, cast=str, default=None):
    """CLI flag > config file > default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in args._config:
        return cast(args._config[key])
    return default


def _resolve_seed(args):
    seed = _merge(args, "seed", int)
    if seed is None and os.environ.get("FLOODCAST_SEED"):
        seed = int(os.environ["FLOODCAST_SEED"])
    return seed


def _usage_error(message: str) -> int:
    print(f"usage error: {message}", file=sys.stderr)
    return 2


def _validate_target(target: str) -> str | None:
    if target == "gauge-month":
        return target
    if target.startswith("ttp-bin:") and target.split(":", 1)[1] in TARGET_BINS:
        return target
    return None


# --- commands ----------------------------------------------------------------


def cmd_synth(args) -> int:
    gauges = _merge(args, "gauges", int)
    months = _merge(args, "months", int)
    seed = _resolve_seed(args)
    rate = _merge(args, "positive_rate", float, synth.DEFAULT_POSITIVE_RATE)
    strength = _merge(args, "signal_strength", float)
    start_month = _merge(args, "start_month", str, synth.DEFAULT_START_MONTH)
    out = _merge(args, "out")
    if gauges is None or months is None or out is None:
        return _usage_error("synth requires --gauges, --months and --out")
    if seed is None:
        return _usage_error("a seed is mandatory (use --seed or FLOODCAST_SEED)")
    if gauges < 5:
        return _usage_error(f"TooFewGauges: need at least 5 gauges, got {gauges}")
    if months < 2:
        return _usage_error(f"need at least 2 months, got {months}")
    bundle = synth.generate_bundle(
        n_gauges=gauges, n_months=months, seed=seed, target_positive_rate=rate,
        out_dir=out, signal_strength=strength, start_month=start_month)
    print(f"bundle written to {bundle.directory}")
    return 0


def cmd_ingest(args) -> int:
    data = _merge(args, "data")
    strictness = _merge(args, "strictness", str, "strict")
    if data is None:
        return _usage_error("ingest requires --data")
    join = pipeline.load_bundle(data, strictness)
    summary = {
        "gauges_joined": len(join.records),
        "gauge_ids": join.gauge_ids,
        "missing_components": join.missing,
    }
    out = _merge(args, "out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"joined {len(join.records)} gauges"
          + (f"; {len(join.missing)} dropped: {sorted(join.missing)}" if join.missing else ""))
    return 0


def cmd_featurize(args) -> int:
    data = _merge(args, "data")
    experiment = _merge(args, "experiment")
    target = _merge(args, "target", str, "gauge-month")
    out = _merge(args, "out")
    strictness = _merge(args, "strictness", str, "strict")
    if data is None or experiment is None or out is None:
        return _usage_error("featurize requires --data, --experiment and --out")
    if experiment not in EXPERIMENTS:
        return _usage_error(f"experiment must be one of {', '.join(EXPERIMENTS)}")
    if _validate_target(target) is None:
        return _usage_error(f"target must be gauge-month or ttp-bin:K (K in 0..3), got {target!r}")
    from .features import write_examples_csv

    join = pipeline.load_bundle(data, strictness)
    examples = pipeline.assemble_for_target(join.records, experiment, target)
    write_examples_csv(examples, out)
    print(f"wrote {len(examples)} examples x {len(examples.feature_names)} features to {out}")
    return 0


def cmd_experiment(args) -> int:
    data = _merge(args, "data")
    experiment = _merge(args, "experiment")
    target = _merge(args, "target", str, "gauge-month")
    model = _merge(args, "model", str, "all")
    out = _merge(args, "out")
    jobs = _merge(args, "jobs", int, 1)
    seed = _resolve_seed(args)
    if data is None or experiment is None or out is None:
        return _usage_error("experiment requires --data, --experiment and --out")
    if experiment not in EXPERIMENTS:
        return _usage_error(f"experiment must be one of {', '.join(EXPERIMENTS)}")
    if _validate_target(target) is None:
        return _usage_error(f"target must be gauge-month or ttp-bin:K (K in 0..3), got {target!r}")
    if model not in ("forest", "gbdt", "mlp", "all"):
        return _usage_error(f"model must be forest, gbdt, mlp or all, got {model!r}")
    if seed is None:
        return _usage_error("a seed is mandatory (use --seed or FLOODCAST_SEED)")
    grids = None
    grid_file = _merge(args, "grid_file")
    if grid_file:
        with open(grid_file, "r", encoding="utf-8") as fh:
            grids = json.load(fh)
    report = pipeline.run_experiment(
        data_dir=data, experiment=experiment, target=target,
        model_names="all" if model == "all" else [model],
        seed=seed, out_dir=out, grids=grids, jobs=jobs)
    for name, entry in report["models"].items():
        print(f"{name}: test AP {entry['test_ap']:.4f} "
              f"(baseline {report['baseline']['average_precision']:.4f})")
    print(f"report written to {os.path.join(out, 'report.json')}")
    return 0


def cmd_eval_noaa(args) -> int:
    forecasts = _merge(args, "forecasts")
    data = _merge(args, "data")
    if forecasts is None or data is None:
        return _usage_error("eval-noaa requires --forecasts and --data")
    result = pipeline.run_noaa_eval(forecasts, data, _merge(args, "strictness", str, "strict"))
    out = _merge(args, "out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
            fh.write("\n")
    c, r = result["computed"], result["reference"]
    print(f"computed: precision {c['precision']:.4f}, recall {c['recall']:.4f} "
          f"over {c['evaluated_gauge_months']} gauge-months")
    print(f"reference ({r['label']}): precision {r['precision']}, recall {r['recall']}")
    return 0


def cmd_report(args) -> int:
    run_dir = _merge(args, "run")
    if run_dir is None:
        return _usage_error("report requires --run")
    path = os.path.join(run_dir, "report.json")
    with open(path, "r", encoding="utf-8") as fh:
        report = json.load(fh)
    ds = report["dataset"]
    print(f"experiment {report['experiment']} | target {report['target']} "
          f"| seed {report['seed']}")
    print(f"examples {ds['examples']} (train {ds['train']} / val {ds['val']} "
          f"/ test {ds['test']}), test positive rate {ds['positive_rate_test']:.4f}")
    print(f"{'model':<10}{'test AP':>10}{'val AP':>10}{'recall@P=0.5':>14}")
    for name, entry in report["models"].items():
        print(f"{name:<10}{entry['test_ap']:>10.4f}{entry['validation_ap']:>10.4f}"
              f"{entry['recall_at_precision_0.5']:>14.4f}")
    print(f"{'baseline':<10}{report['baseline']['average_precision']:>10.4f}")
    ref = report["reference_noaa"]
    print(f"NOAA reference ({ref['label']}): precision {ref['precision']}, "
          f"recall {ref['recall']}")
    return 0


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floodcast",
                                     description="multi-basin flood susceptibility toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--strictness", choices=["strict", "lenient"])

    p = sub.add_parser("synth", help="generate a synthetic bundle")
    common(p)
    p.add_argument("--gauges", type=int)
    p.add_argument("--months", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--positive-rate", dest="positive_rate", type=float)
    p.add_argument("--signal-strength", dest="signal_strength", type=float)
    p.add_argument("--start-month", dest="start_month")
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse and join a bundle directory")
    common(p)
    p.add_argument("--data")
    p.add_argument("--out", help="optional coverage report JSON")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("featurize", help="assemble an experiment dataset CSV")
    common(p)
    p.add_argument("--data")
    p.add_argument("--experiment")
    p.add_argument("--target")
    p.add_argument("--out")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("experiment", help="train, tune and evaluate models")
    common(p)
    p.add_argument("--data")
    p.add_argument("--experiment")
    p.add_argument("--target")
    p.add_argument("--model")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--grid-file", dest="grid_file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("eval-noaa", help="score forecast files against observations")
    common(p)
    p.add_argument("--forecasts")
    p.add_argument("--data")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_noaa)

    p = sub.add_parser("report", help="print a run report")
    common(p)
    p.add_argument("--run")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._config = {}
    if getattr(args, "config", None):
        try:
            args._config = _load_config(args.config)
        except (OSError, ValueError) as exc:
            return _usage_error(str(exc))
    try:
        return args.func(args)
    except FloodcastError as exc:
        print(f"error: {type(exc).__name__.removesuffix('Error')}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
