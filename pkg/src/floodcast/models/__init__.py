"""From-scratch classifiers behind a common fit/score interface."""

import numpy as np

from .forest import ForestModel, fit_forest, resolve_feature_subset
from .gbdt import GbdtModel, fit_gbdt, logistic_loss, sigmoid
from .io import load_model, save_model
from .mlp import AdamState, NetworkModel, adam_step, fit_mlp, loss_and_grads
from .tree import TreeNode, fit_tree, predict_tree, tree_depth
from .tuning import DEFAULT_GRIDS, MODEL_FAMILIES, TuneResult, expand_grid, fit_model, tune


def score(model, x) -> np.ndarray:
    """Uniform scoring entry point: probability in [0, 1] per row."""
    if isinstance(model, TreeNode):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        return predict_tree(model, x)
    return model.score(x)


__all__ = [
    "AdamState", "DEFAULT_GRIDS", "ForestModel", "GbdtModel", "MODEL_FAMILIES",
    "NetworkModel", "TreeNode", "TuneResult", "adam_step", "expand_grid",
    "fit_forest", "fit_gbdt", "fit_mlp", "fit_model", "fit_tree", "load_model",
    "logistic_loss", "loss_and_grads", "predict_tree", "resolve_feature_subset",
    "save_model", "score", "sigmoid", "tree_depth", "tune",
]
