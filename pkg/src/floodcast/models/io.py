"""Versioned JSON serialization for trained models.

repr-based float round-tripping in the json module keeps every parameter
bit-exact, so a reloaded model scores identically to the original.
"""

from __future__ import annotations

import json

import numpy as np

from .forest import ForestModel
from .gbdt import GbdtModel
from .mlp import NetworkModel
from .tree import TreeNode

FORMAT_NAME = "floodcast-model"
FORMAT_VERSION = 1


def _tree_to_obj(node: TreeNode):
    if node.is_leaf:
        return {"v": node.value}
    return {
        "f": node.feature,
        "t": node.threshold,
        "l": _tree_to_obj(node.left),
        "r": _tree_to_obj(node.right),
    }


def _tree_from_obj(obj) -> TreeNode:
    if "v" in obj:
        return TreeNode(value=obj["v"])
    return TreeNode(
        feature=obj["f"],
        threshold=obj["t"],
        left=_tree_from_obj(obj["l"]),
        right=_tree_from_obj(obj["r"]),
    )


def save_model(model, path):
    if isinstance(model, ForestModel):
        body = {
            "kind": "forest",
            "n_features": model.n_features,
            "feature_subset": model.feature_subset,
            "tree_seeds": model.tree_seeds,
            "trees": [_tree_to_obj(t) for t in model.trees],
        }
    elif isinstance(model, GbdtModel):
        body = {
            "kind": "gbdt",
            "n_features": model.n_features,
            "base_score": model.base_score,
            "learning_rate": model.learning_rate,
            "loss_history": model.loss_history,
            "trees": [_tree_to_obj(t) for t in model.trees],
        }
    elif isinstance(model, NetworkModel):
        body = {
            "kind": "mlp",
            "layer_sizes": list(model.layer_sizes),
            "params": [[W.tolist(), b.tolist()] for W, b in model.params],
        }
    elif isinstance(model, TreeNode):
        body = {"kind": "tree", "tree": _tree_to_obj(model)}
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    body["format"] = FORMAT_NAME
    body["version"] = FORMAT_VERSION
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh)
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        body = json.load(fh)
    if body.get("format") != FORMAT_NAME:
        raise ValueError(f"{path}: not a {FORMAT_NAME} file")
    if body.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {body.get('version')}")
    kind = body["kind"]
    if kind == "forest":
        return ForestModel(
            trees=[_tree_from_obj(t) for t in body["trees"]],
            n_features=body["n_features"],
            tree_seeds=body["tree_seeds"],
            feature_subset=body["feature_subset"],
        )
    if kind == "gbdt":
        model = GbdtModel(
            base_score=body["base_score"],
            learning_rate=body["learning_rate"],
            n_features=body["n_features"],
            loss_history=body["loss_history"],
        )
        model.trees = [_tree_from_obj(t) for t in body["trees"]]
        return model
    if kind == "mlp":
        return NetworkModel(
            layer_sizes=body["layer_sizes"],
            params=[[np.array(W, dtype=np.float64), np.array(b, dtype=np.float64)]
                    for W, b in body["params"]],
        )
    if kind == "tree":
        return _tree_from_obj(body["tree"])
    raise ValueError(f"{path}: unknown model kind {kind!r}")
