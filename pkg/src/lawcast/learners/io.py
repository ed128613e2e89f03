"""Versioned JSON persistence for fitted learners.

Trees serialize as nested {feature, threshold, left, right} / {value}
objects; linear models as coefficient lists. Floats are written with full
precision, so a save/load round trip reproduces predictions exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .boosting import GbmModel, GbmParams
from .elastic_net import ElasticNetModel
from .forest import ForestModel, ForestParams
from .tree import Tree, TreeParams

FORMAT = "LAWCAST-MODEL v1"


def _tree_params_dict(params: TreeParams) -> dict[str, Any]:
    return {
        "max_depth": params.max_depth,
        "min_leaf": params.min_leaf,
        "mtry": params.mtry,
        "criterion": params.criterion,
        "seed": params.seed,
    }


def _to_dict(model) -> dict[str, Any]:
    if isinstance(model, Tree):
        return {
            "kind": "tree",
            "params": _tree_params_dict(model.params),
            "n_features": model.n_features,
            "feature_names": model.feature_names,
            "root": model.to_nested(),
        }
    if isinstance(model, ForestModel):
        return {
            "kind": "forest",
            "mtry": model.mtry,
            "n_features": model.n_features,
            "feature_names": model.feature_names,
            "tree_seeds": model.tree_seeds,
            "params": {
                "n_trees": model.params.n_trees,
                "mtry": model.params.mtry,
                "sample_fraction": model.params.sample_fraction,
                "seed": model.params.seed,
                "max_depth": model.params.max_depth,
                "min_leaf": model.params.min_leaf,
            },
            "trees": [t.to_nested() for t in model.trees],
        }
    if isinstance(model, GbmModel):
        return {
            "kind": "gbm",
            "init_score": model.init_score,
            "shrinkage": model.shrinkage,
            "n_features": model.n_features,
            "feature_names": model.feature_names,
            "params": {
                "n_stages": model.params.n_stages,
                "shrinkage": model.params.shrinkage,
                "max_depth": model.params.max_depth,
                "min_leaf": model.params.min_leaf,
                "seed": model.params.seed,
            },
            "trees": [t.to_nested() for t in model.trees],
        }
    if isinstance(model, ElasticNetModel):
        return {
            "kind": "elastic_net",
            "coefficients": [float(c) for c in model.coefficients],
            "intercept": model.intercept,
            "alpha": model.alpha,
            "lambda": model.lam,
            "nonnegative": model.nonnegative,
            "converged": model.converged,
            "n_sweeps": model.n_sweeps,
            "n_features": model.n_features,
            "feature_names": model.feature_names,
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def save_learner(model, path: str | Path) -> None:
    obj = {"format": FORMAT}
    obj.update(_to_dict(model))
    Path(path).write_text(json.dumps(obj), encoding="utf-8")


def _from_dict(obj: dict[str, Any]):
    kind = obj["kind"]
    if kind == "tree":
        params = TreeParams(**obj["params"])
        tree = Tree.from_nested(obj["root"], params)
        tree.n_features = obj.get("n_features")
        tree.feature_names = obj.get("feature_names")
        return tree
    if kind == "forest":
        params = ForestParams(**obj["params"])
        trees = [Tree.from_nested(t) for t in obj["trees"]]
        return ForestModel(
            trees=trees,
            tree_seeds=list(obj["tree_seeds"]),
            mtry=obj["mtry"],
            params=params,
            n_features=obj["n_features"],
            feature_names=obj.get("feature_names"),
        )
    if kind == "gbm":
        params = GbmParams(**obj["params"])
        trees = [Tree.from_nested(t) for t in obj["trees"]]
        return GbmModel(
            init_score=obj["init_score"],
            trees=trees,
            shrinkage=obj["shrinkage"],
            params=params,
            n_features=obj["n_features"],
            feature_names=obj.get("feature_names"),
        )
    if kind == "elastic_net":
        return ElasticNetModel(
            coefficients=np.array(obj["coefficients"], dtype=np.float64),
            intercept=obj["intercept"],
            alpha=obj["alpha"],
            lam=obj["lambda"],
            nonnegative=obj["nonnegative"],
            converged=obj["converged"],
            n_sweeps=obj["n_sweeps"],
            n_features=obj.get("n_features"),
            feature_names=obj.get("feature_names"),
        )
    raise ValueError(f"unknown learner kind {kind!r}")


def load_learner(path: str | Path):
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != FORMAT:
        raise ValueError(f"unexpected model format {obj.get('format')!r}")
    return _from_dict(obj)
