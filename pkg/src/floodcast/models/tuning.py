"""Hyper-parameter grid search on held-out validation average precision."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

from ..errors import EmptyGridError
from ..evaluation import pr_curve
from .forest import fit_forest
from .gbdt import fit_gbdt
from .mlp import fit_mlp

MODEL_FAMILIES = ("forest", "gbdt", "mlp")

# Config-overridable defaults; values are lists over which the grid expands.
DEFAULT_GRIDS = {
    "forest": {"n_trees": [100, 300], "max_depth": [6, 10]},
    "gbdt": {"n_rounds": [100, 300], "learning_rate": [0.05, 0.1], "max_depth": [3, 5]},
    "mlp": {"hidden_sizes": [(32,), (64, 32)], "learning_rate": [1e-3], "epochs": [50]},
}


def expand_grid(axes: dict) -> list[dict]:
    """Cartesian product of {param: [values]} in key order, first axis slowest."""
    keys = list(axes)
    return [dict(zip(keys, combo)) for combo in product(*(axes[k] for k in keys))]


def fit_model(family: str, X, y, params: dict, seed: int):
    if family == "forest":
        return fit_forest(X, y, seed=seed, **params)
    if family == "gbdt":
        return fit_gbdt(X, y, seed=seed, **params)
    if family == "mlp":
        return fit_mlp(X, y, seed=seed, **params)
    raise ValueError(f"unknown model family {family!r}; expected one of {MODEL_FAMILIES}")


@dataclass
class TuneResult:
    family: str
    best_params: dict
    best_model: object
    best_val_ap: float
    # (params, validation AP) per grid point, in grid order
    trials: list = field(default_factory=list)


def _evaluate_point(args):
    family, params, train_X, train_y, val_X, val_y, seed = args
    model = fit_model(family, train_X, train_y, params, seed)
    ap = pr_curve(model.score(val_X), val_y).average_precision
    return model, ap


def tune(family: str, grid: list[dict], train_X, train_y, val_X, val_y,
         seed: int = 0, jobs: int = 1) -> TuneResult:
    """Exhaustive grid evaluation; ties keep the earliest grid point.

    Each grid point is fit with the same seed, so the result is identical
    at any ``jobs`` level; the winning model (already fit on the training
    split) is returned as is, since a reseeded refit would be bit-identical.
    """
    if not grid:
        raise EmptyGridError(f"empty hyper-parameter grid for {family}")
    tasks = [(family, params, train_X, train_y, val_X, val_y, seed) for params in grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_evaluate_point, tasks))
    else:
        outcomes = [_evaluate_point(t) for t in tasks]

    best_idx = 0
    best_ap = -1.0
    trials = []
    for i, (params, (model, ap)) in enumerate(zip(grid, outcomes)):
        trials.append((params, ap))
        if ap > best_ap:
            best_idx, best_ap = i, ap
    return TuneResult(
        family=family,
        best_params=grid[best_idx],
        best_model=outcomes[best_idx][0],
        best_val_ap=best_ap,
        trials=trials,
    )
