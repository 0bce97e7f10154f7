"""CART regression tree on variance-reduction splits.

One builder serves both ensemble families: forest trees regress on the
0/1 class labels (leaf value = positive fraction), boosted trees regress
on logistic-loss residuals and, when per-example curvatures are supplied,
use a clipped Newton step for the leaf value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyDatasetError


@dataclass
class TreeNode:
    """Internal split (feature/threshold/left/right) or leaf (value)."""

    value: float = 0.0
    feature: int | None = None
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def fit_tree(X, y, max_depth, min_leaf=1, feature_subset=None, seed=0,
             hess=None, leaf_clip=None, train_pred_out=None) -> TreeNode:
    """Greedy best-first CART fit.

    Each node samples ``feature_subset`` features (all when None), scans
    every midpoint between consecutive distinct sorted values, and keeps
    the split with the largest variance reduction of the target; ties keep
    the first candidate in (feature, threshold) order, so the fit is
    deterministic for a given seed. Leaf values are mean targets, or the
    Newton step sum(y)/sum(hess) clipped to +-leaf_clip when ``hess`` is
    given.

    ``train_pred_out``, when provided, is filled with the tree's
    predictions for the training rows as a byproduct of the fit.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError(f"X must be 2-D and aligned with y, got {X.shape} vs {y.shape}")
    if len(y) == 0:
        raise EmptyDatasetError("cannot fit a tree on zero examples")
    if min_leaf < 1:
        raise ValueError(f"min_leaf must be >= 1, got {min_leaf}")
    n_features = X.shape[1]
    if feature_subset is not None and not 1 <= feature_subset <= n_features:
        raise ValueError(
            f"feature_subset must be in [1, {n_features}], got {feature_subset}"
        )
    rng = np.random.default_rng(seed)
    root = _grow(X, y, hess, np.arange(len(y)), 0, max_depth, min_leaf,
                 feature_subset, rng, leaf_clip, train_pred_out)
    return root


def _leaf(y, hess, idx, leaf_clip, train_pred_out) -> TreeNode:
    if hess is None:
        value = float(np.mean(y[idx]))
    else:
        h = float(np.sum(hess[idx]))
        value = float(np.sum(y[idx]) / h) if h > 1e-12 else 0.0
    if leaf_clip is not None:
        value = float(np.clip(value, -leaf_clip, leaf_clip))
    if train_pred_out is not None:
        train_pred_out[idx] = value
    return TreeNode(value=value)


def _grow(X, y, hess, idx, depth, max_depth, min_leaf, feature_subset, rng,
          leaf_clip, train_pred_out) -> TreeNode:
    n = len(idx)
    targets = y[idx]
    if depth >= max_depth or n < 2 * min_leaf or np.all(targets == targets[0]):
        return _leaf(y, hess, idx, leaf_clip, train_pred_out)

    n_features = X.shape[1]
    if feature_subset is None or feature_subset >= n_features:
        candidates = np.arange(n_features)
    else:
        candidates = np.sort(rng.choice(n_features, size=feature_subset, replace=False))

    total = float(np.sum(targets))
    best_gain = 0.0
    best = None  # (feature, threshold, left_local_idx, right_local_idx)
    for f in candidates:
        col = X[idx, f]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        left_sum = np.cumsum(targets[order])[:-1]
        counts = np.arange(1, n)
        # valid split after position i: distinct neighbor values + min_leaf
        valid = xs[:-1] < xs[1:]
        valid[: min_leaf - 1] = False
        if min_leaf > 1:
            valid[n - min_leaf:] = False
        if not np.any(valid):
            continue
        right_sum = total - left_sum
        # maximizing sum of per-side (sum^2 / count) minimizes weighted SSE
        gain = left_sum**2 / counts + right_sum**2 / (n - counts)
        gain[~valid] = -np.inf
        pos = int(np.argmax(gain))
        g = float(gain[pos]) - total**2 / n
        if g > best_gain + 1e-12:
            best_gain = g
            threshold = (xs[pos] + xs[pos + 1]) / 2.0
            best = (int(f), float(threshold), order[: pos + 1], order[pos + 1:])

    if best is None:
        return _leaf(y, hess, idx, leaf_clip, train_pred_out)
    feature, threshold, left_local, right_local = best
    node = TreeNode(feature=feature, threshold=threshold)
    node.left = _grow(X, y, hess, idx[left_local], depth + 1, max_depth, min_leaf,
                      feature_subset, rng, leaf_clip, train_pred_out)
    node.right = _grow(X, y, hess, idx[right_local], depth + 1, max_depth, min_leaf,
                       feature_subset, rng, leaf_clip, train_pred_out)
    node.value = float(np.mean(y[idx]))  # kept for diagnostics on internal nodes
    return node


def predict_tree(node: TreeNode, X) -> np.ndarray:
    """Vectorized tree traversal; rows with x[feature] < threshold go left."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(len(X), dtype=np.float64)
    _predict_into(node, X, np.arange(len(X)), out)
    return out


def _predict_into(node, X, idx, out):
    if node.is_leaf:
        out[idx] = node.value
        return
    go_left = X[idx, node.feature] < node.threshold
    _predict_into(node.left, X, idx[go_left], out)
    _predict_into(node.right, X, idx[~go_left], out)


def tree_depth(node: TreeNode) -> int:
    if node.is_leaf:
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))
