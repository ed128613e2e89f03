"""Random forest: bootstrap-aggregated classification trees with per-split
feature subsampling. The class probability is the mean of the trees' leaf
class frequencies, so it always lands in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..seeding import derive_seed
from .tree import Tree, TreeParams, fit_tree


@dataclass
class ForestParams:
    n_trees: int = 300
    mtry: int | None = None  # None = ceil(sqrt(p))
    sample_fraction: float | None = 1.0  # None = grow each tree on the full data
    seed: int = 0
    max_depth: int | None = None
    min_leaf: int = 1


@dataclass
class ForestModel:
    trees: list[Tree]
    tree_seeds: list[int]
    mtry: int
    params: ForestParams
    n_features: int
    feature_names: list[str] | None = field(default=None)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)


def fit_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams | None = None,
    feature_names: list[str] | None = None,
) -> ForestModel:
    """Grow ``n_trees`` on with-replacement row samples.

    ``sample_fraction=None`` disables resampling (each tree sees the full
    data once), which with ``mtry = p`` reduces a one-tree forest to a
    plain fitted tree.
    """
    params = params or ForestParams()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    if params.n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    mtry = params.mtry if params.mtry is not None else math.ceil(math.sqrt(p))
    if mtry > p:
        raise ValueError(f"mtry={mtry} exceeds {p} features")

    trees: list[Tree] = []
    seeds: list[int] = []
    for t in range(params.n_trees):
        tree_seed = derive_seed(params.seed, f"forest/tree/{t}")
        seeds.append(tree_seed)
        if params.sample_fraction is None:
            rows = None
        else:
            size = max(1, int(round(params.sample_fraction * n)))
            rng = np.random.default_rng(tree_seed)
            rows = rng.integers(0, n, size=size)
        tree_params = TreeParams(
            max_depth=params.max_depth,
            min_leaf=params.min_leaf,
            mtry=mtry,
            criterion="gini",
            seed=tree_seed,
        )
        trees.append(fit_tree(X, y, tree_params, row_indices=rows))
    return ForestModel(
        trees=trees,
        tree_seeds=seeds,
        mtry=mtry,
        params=params,
        n_features=p,
        feature_names=list(feature_names) if feature_names else None,
    )
