"""Random forest of CART trees with bootstrap resampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatchError, EmptyDatasetError
from .tree import TreeNode, fit_tree, predict_tree


@dataclass
class ForestModel:
    trees: list = field(default_factory=list)
    n_features: int = 0
    tree_seeds: list = field(default_factory=list)
    feature_subset: int | None = None

    def score(self, X) -> np.ndarray:
        """Mean of tree outputs; in [0, 1] because leaves average 0/1 labels."""
        X = _check_matrix(X, self.n_features)
        total = np.zeros(len(X), dtype=np.float64)
        for tree in self.trees:
            total += predict_tree(tree, X)
        return total / len(self.trees)


def resolve_feature_subset(spec, n_features: int) -> int | None:
    """Map 'sqrt' / 'all' / int / None onto a concrete subset size."""
    if spec is None or spec == "all":
        return None
    if spec == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    size = int(spec)
    if not 1 <= size <= n_features:
        raise ValueError(f"feature subset {size} outside [1, {n_features}]")
    return size


def fit_forest(X, y, n_trees=100, max_depth=10, min_leaf=1, bootstrap=True,
               feature_subset="sqrt", seed=0) -> ForestModel:
    """Fit ``n_trees`` CART trees on bootstrap resamples (size n, with
    replacement) over per-node random feature subsets.

    Tree seeds derive from the master seed, so refits are bit-identical and
    independent of any parallel scheduling of the tree loop.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise EmptyDatasetError("cannot fit a forest on zero examples")
    if n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {n_trees}")
    subset = resolve_feature_subset(feature_subset, X.shape[1])

    children = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    tree_seeds = []
    for child in children:
        rng = np.random.default_rng(child)
        if bootstrap:
            rows = rng.integers(0, len(y), size=len(y))
            Xb, yb = X[rows], y[rows]
        else:
            Xb, yb = X, y
        node_seed = int(rng.integers(0, 2**63 - 1))
        tree_seeds.append(node_seed)
        trees.append(fit_tree(Xb, yb, max_depth=max_depth, min_leaf=min_leaf,
                              feature_subset=subset, seed=node_seed))
    return ForestModel(trees=trees, n_features=X.shape[1], tree_seeds=tree_seeds,
                       feature_subset=subset)


def _check_matrix(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != n_features:
        raise DimensionMismatchError(
            f"model expects {n_features} features, got {X.shape[1]}"
        )
    return X
