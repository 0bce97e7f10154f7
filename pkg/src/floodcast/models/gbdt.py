"""Gradient-boosted trees with logistic loss.

Each round fits a CART tree to the negative gradient of the logistic loss
(residual y - p) and adds its output, damped by the learning rate, to the
running log-odds. Leaf values take the second-order Newton step
sum(residual) / sum(p (1 - p)), clipped to +-4 so pure leaves cannot
saturate the margin in one jump.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyDatasetError, SingleClassLabelsError
from .forest import _check_matrix
from .tree import fit_tree, predict_tree

LEAF_CLIP = 4.0


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(labels, probs) -> float:
    p = np.clip(probs, 1e-12, 1.0 - 1e-12)
    y = np.asarray(labels, dtype=np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass
class GbdtModel:
    base_score: float = 0.0
    trees: list = field(default_factory=list)
    learning_rate: float = 0.1
    n_features: int = 0
    # training logistic loss after 0, 1, ... rounds
    loss_history: list = field(default_factory=list)

    def margins(self, X) -> np.ndarray:
        X = _check_matrix(X, self.n_features)
        f = np.full(len(X), self.base_score, dtype=np.float64)
        for tree in self.trees:
            f += self.learning_rate * predict_tree(tree, X)
        return f

    def score(self, X) -> np.ndarray:
        return sigmoid(self.margins(X))


def fit_gbdt(X, y, n_rounds=100, learning_rate=0.1, max_depth=3, min_leaf=1,
             seed=0) -> GbdtModel:
    """Boost ``n_rounds`` trees; records training loss per round.

    Requires both classes in y (otherwise the base log-odds diverges).
    With 0 rounds every score equals the training positive rate.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise EmptyDatasetError("cannot fit GBDT on zero examples")
    pos_rate = float(np.mean(y))
    if pos_rate == 0.0 or pos_rate == 1.0:
        raise SingleClassLabelsError(
            f"labels are a single class (positive rate {pos_rate}); base log-odds undefined"
        )
    if not 0.0 < learning_rate <= 1.0:
        raise ValueError(f"learning_rate must be in (0, 1], got {learning_rate}")

    model = GbdtModel(
        base_score=float(np.log(pos_rate / (1.0 - pos_rate))),
        learning_rate=learning_rate,
        n_features=X.shape[1],
    )
    margins = np.full(len(y), model.base_score, dtype=np.float64)
    probs = sigmoid(margins)
    model.loss_history.append(logistic_loss(y, probs))

    step = np.empty(len(y), dtype=np.float64)
    for _ in range(n_rounds):
        residual = y - probs
        hess = probs * (1.0 - probs)
        tree = fit_tree(X, residual, max_depth=max_depth, min_leaf=min_leaf,
                        seed=seed, hess=hess, leaf_clip=LEAF_CLIP,
                        train_pred_out=step)
        model.trees.append(tree)
        margins += learning_rate * step
        probs = sigmoid(margins)
        model.loss_history.append(logistic_loss(y, probs))
    return model
