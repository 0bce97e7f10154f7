"""Precision-recall evaluation and report artifacts.

Average precision uses step interpolation over distinct score thresholds
(ties collapse into a single point), the standard summary for heavily
imbalanced tasks. The random baseline is a horizontal line at the positive
fraction. Published operational reference values for the NOAA comparison
are stored as constants; this toolkit never recomputes them (that would
require the external forecast archive) and reports always label them as
such.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np

from .errors import (
    LengthMismatchError,
    NoOverlapError,
    NoPositivesError,
)
from .hydrology import FLOOD, INSUFFICIENT_DATA, month_flood_label
from .timeutil import month_key_of_epoch

# Published precision/recall of the operational NOAA Northeast River
# Forecast Center monthly aggregation; reference annotation only.
REFERENCE_NOAA_PRECISION = 0.5
REFERENCE_NOAA_RECALL = 0.245
REFERENCE_NOAA_LABEL = "published reference, not recomputed"


@dataclass(frozen=True)
class PRCurve:
    """Points ordered by descending threshold; recall is nondecreasing."""

    thresholds: np.ndarray
    precisions: np.ndarray
    recalls: np.ndarray
    average_precision: float
    positive_count: int
    total_count: int

    def __len__(self):
        return len(self.thresholds)


@dataclass(frozen=True)
class BaselineCurve:
    """Horizontal PR line of a random scorer: precision == positive fraction."""

    precision_level: float
    positive_count: int
    total_count: int

    @property
    def average_precision(self) -> float:
        return self.precision_level


@dataclass(frozen=True)
class NoaaComparison:
    precision: float
    recall: float
    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int
    evaluated_gauge_months: int
    reference_precision: float = REFERENCE_NOAA_PRECISION
    reference_recall: float = REFERENCE_NOAA_RECALL
    reference_label: str = REFERENCE_NOAA_LABEL


def pr_curve(scores, labels) -> PRCurve:
    """Precision-recall curve with one point per distinct score.

    AP = sum over points of (R_k - R_{k-1}) * P_k, walking thresholds from
    high to low. Requires at least one positive label.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise LengthMismatchError(
            f"scores and labels must be equal-length 1-D, got {scores.shape} vs {labels.shape}"
        )
    positives = int(np.sum(labels == 1))
    if positives == 0:
        raise NoPositivesError("PR curve needs at least one positive label")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = (labels[order] == 1).astype(np.int64)

    # indices where a tie group of equal scores ends
    last_in_group = np.nonzero(np.diff(sorted_scores))[0]
    group_ends = np.concatenate([last_in_group, [len(sorted_scores) - 1]])

    tp = np.cumsum(sorted_labels)[group_ends]
    predicted = group_ends + 1
    precisions = tp / predicted
    recalls = tp / positives
    thresholds = sorted_scores[group_ends]

    prev_recall = np.concatenate([[0.0], recalls[:-1]])
    ap = float(np.sum((recalls - prev_recall) * precisions))
    return PRCurve(
        thresholds=thresholds,
        precisions=precisions,
        recalls=recalls,
        average_precision=ap,
        positive_count=positives,
        total_count=len(scores),
    )


def random_baseline(labels) -> BaselineCurve:
    labels = np.asarray(labels)
    positives = int(np.sum(labels == 1))
    total = len(labels)
    level = positives / total if total else 0.0
    return BaselineCurve(precision_level=level, positive_count=positives, total_count=total)


def recall_at_precision(curve: PRCurve, precision_target: float) -> float:
    """Best recall among curve points with precision >= target; 0.0 if none."""
    if not 0.0 < precision_target <= 1.0:
        raise ValueError(f"precision_target must be in (0, 1], got {precision_target}")
    ok = curve.precisions >= precision_target
    if not np.any(ok):
        return 0.0
    return float(np.max(curve.recalls[ok]))


# --- NOAA-style forecast aggregation ----------------------------------------


def noaa_monthly_eval(forecasts, observed, thresholds) -> NoaaComparison:
    """Score forecast-derived monthly flood occurrence against observations.

    A (gauge, month) is predicted flooding iff any forecast valid inside
    the month (by valid time, not issue time) reaches the minor threshold.
    Evaluable gauge-months need at least one valid forecast and an observed
    label that is not insufficient_data. Precision/recall fall back to 0.0
    on empty denominators.
    """
    tp = fp = fn = tn = 0
    evaluated = 0
    for gauge_id in sorted(forecasts.by_gauge):
        if gauge_id not in observed or gauge_id not in thresholds:
            continue
        fc = forecasts[gauge_id]
        series = observed[gauge_id]
        thr = thresholds[gauge_id]
        months = {}
        for valid, stage in zip(fc.valid_at, fc.forecast_stage):
            key = month_key_of_epoch(int(valid))
            months[key] = months.get(key, False) or stage >= thr.minor
        for month in sorted(months):
            status = month_flood_label(series, thr, month)
            if status == INSUFFICIENT_DATA:
                continue
            evaluated += 1
            predicted = months[month]
            actual = status == FLOOD
            if predicted and actual:
                tp += 1
            elif predicted:
                fp += 1
            elif actual:
                fn += 1
            else:
                tn += 1
    if evaluated == 0:
        raise NoOverlapError("no gauge-month overlaps between forecasts and observations")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return NoaaComparison(
        precision=precision,
        recall=recall,
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
        true_negatives=tn,
        evaluated_gauge_months=evaluated,
    )


# --- artifacts ---------------------------------------------------------------


def emit_pr_csv(curve: PRCurve, path):
    """Write ``threshold,precision,recall`` rows behind an AP comment line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"# ap={curve.average_precision!r},positives={curve.positive_count},"
            f"total={curve.total_count}\n"
        )
        fh.write("threshold,precision,recall\n")
        for t, p, r in zip(curve.thresholds, curve.precisions, curve.recalls):
            fh.write(f"{float(t)!r},{float(p)!r},{float(r)!r}\n")


def read_pr_csv(path) -> PRCurve:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        meta = fh.readline().strip()
        if not meta.startswith("# ap="):
            raise ValueError(f"{path}: missing AP comment header")
        fields = dict(part.split("=", 1) for part in meta[2:].split(","))
        header = fh.readline().strip()
        if header != "threshold,precision,recall":
            raise ValueError(f"{path}: bad PR header {header!r}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    data = np.array([[float(c) for c in row] for row in rows], dtype=np.float64)
    data = data.reshape(-1, 3)
    return PRCurve(
        thresholds=data[:, 0],
        precisions=data[:, 1],
        recalls=data[:, 2],
        average_precision=float(fields["ap"]),
        positive_count=int(fields["positives"]),
        total_count=int(fields["total"]),
    )


_SVG_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")
_MARGIN, _PLOT = 60.0, 480.0


def _svg_x(recall: float) -> float:
    return _MARGIN + recall * _PLOT


def _svg_y(precision: float) -> float:
    return _MARGIN + (1.0 - precision) * _PLOT


def emit_pr_svg(curves: dict, path):
    """Render PR curves (and BaselineCurve horizontals) to a static SVG.

    curves maps legend label -> PRCurve or BaselineCurve. Axes span
    [0,1] x [0,1]; one polyline per curve; no scripts, self-contained.
    """
    width = _MARGIN * 2 + _PLOT + 220  # room for the legend column
    height = _MARGIN * 2 + _PLOT
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=str(int(width)), height=str(int(height)),
                     viewBox=f"0 0 {int(width)} {int(height)}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(int(width)),
                  height=str(int(height)), fill="white")
    ET.SubElement(svg, "rect", x=str(_MARGIN), y=str(_MARGIN), width=str(_PLOT),
                  height=str(_PLOT), fill="none", stroke="black")
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        x, y = _svg_x(tick), _svg_y(tick)
        ET.SubElement(svg, "line", x1=str(x), y1=str(_MARGIN + _PLOT),
                      x2=str(x), y2=str(_MARGIN + _PLOT + 6), stroke="black")
        label = ET.SubElement(svg, "text", {"text-anchor": "middle", "font-size": "12"},
                              x=str(x), y=str(_MARGIN + _PLOT + 20))
        label.text = f"{tick:g}"
        ET.SubElement(svg, "line", x1=str(_MARGIN - 6), y1=str(y),
                      x2=str(_MARGIN), y2=str(y), stroke="black")
        label = ET.SubElement(svg, "text", {"text-anchor": "end", "font-size": "12"},
                              x=str(_MARGIN - 10), y=str(y + 4))
        label.text = f"{tick:g}"
    xlabel = ET.SubElement(svg, "text", {"text-anchor": "middle", "font-size": "14"},
                           x=str(_MARGIN + _PLOT / 2), y=str(height - 12))
    xlabel.text = "Recall"
    ylabel = ET.SubElement(svg, "text",
                           {"text-anchor": "middle", "font-size": "14",
                            "transform": f"rotate(-90 16 {_MARGIN + _PLOT / 2})"},
                           x="16", y=str(_MARGIN + _PLOT / 2))
    ylabel.text = "Precision"

    legend_x = _MARGIN + _PLOT + 20
    legend_y = _MARGIN + 10
    for i, (name, curve) in enumerate(curves.items()):
        color = _SVG_PALETTE[i % len(_SVG_PALETTE)]
        if isinstance(curve, BaselineCurve):
            pts = [(0.0, curve.precision_level), (1.0, curve.precision_level)]
            ap = curve.precision_level
        else:
            # extend the step curve to recall 0 at its starting precision
            pts = [(0.0, float(curve.precisions[0]))]
            pts += [(float(r), float(p)) for r, p in zip(curve.recalls, curve.precisions)]
            ap = curve.average_precision
        points = " ".join(f"{_svg_x(r):.2f},{_svg_y(p):.2f}" for r, p in pts)
        ET.SubElement(svg, "polyline", points=points, fill="none",
                      stroke=color, **{"stroke-width": "2"})
        ET.SubElement(svg, "line", x1=str(legend_x), y1=str(legend_y + 22 * i - 4),
                      x2=str(legend_x + 24), y2=str(legend_y + 22 * i - 4),
                      stroke=color, **{"stroke-width": "2"})
        entry = ET.SubElement(svg, "text", {"font-size": "13"},
                              x=str(legend_x + 30), y=str(legend_y + 22 * i))
        entry.text = f"{name} (AP={ap:.3f})"

    ET.ElementTree(svg).write(path, encoding="unicode", xml_declaration=True)
