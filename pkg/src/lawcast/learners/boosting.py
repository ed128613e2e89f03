"""Gradient boosted trees under logistic loss.

Each stage fits a regression tree to the negative gradient of the loss,
r = y - sigmoid(F), then replaces leaf values with a one-step Newton
correction (sum of residuals over sum of p(1-p), clipped to [-4, 4]) and
advances the score by ``shrinkage`` times the correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tree import Tree, TreeParams, fit_tree

LEAF_CLIP = 4.0


@dataclass
class GbmParams:
    n_stages: int = 200
    shrinkage: float = 0.05
    max_depth: int = 3
    min_leaf: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must be in (0, 1]")
        if self.n_stages < 0:
            raise ValueError("n_stages must be >= 0")


@dataclass
class GbmModel:
    init_score: float
    trees: list[Tree]
    shrinkage: float
    params: GbmParams
    n_features: int
    feature_names: list[str] | None = field(default=None)
    train_loss_path: list[float] = field(default_factory=list)

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        score = np.full(X.shape[0], self.init_score)
        for tree in self.trees:
            score += self.shrinkage * tree.predict(X)
        return score

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision_scores(X))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def negative_gradient(y: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """-d(logistic loss)/d(score): the residual y - sigmoid(score)."""
    return y - _sigmoid(scores)


def logistic_loss(y: np.ndarray, scores: np.ndarray) -> float:
    """Mean logistic loss of raw scores; stable for large |score|."""
    return float(np.mean(np.logaddexp(0.0, scores) - y * scores))


def fit_gbm(
    X: np.ndarray,
    y: np.ndarray,
    params: GbmParams | None = None,
    feature_names: list[str] | None = None,
) -> GbmModel:
    """Stagewise additive boosting; an all-one or all-zero target yields an
    intercept-only model."""
    params = params or GbmParams()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if set(np.unique(y)) - {0.0, 1.0}:
        raise ValueError("y must be binary")
    n, p = X.shape
    base = float(np.mean(y))
    clip = 1.0 / (2.0 * n)
    base = min(max(base, clip), 1.0 - clip)
    init = math.log(base / (1.0 - base))
    model = GbmModel(
        init_score=init,
        trees=[],
        shrinkage=params.shrinkage,
        params=params,
        n_features=p,
        feature_names=list(feature_names) if feature_names else None,
    )
    if params.n_stages == 0 or np.all(y == y[0]):
        return model

    scores = np.full(n, init)
    tree_params = TreeParams(
        max_depth=params.max_depth,
        min_leaf=params.min_leaf,
        criterion="variance",
        seed=params.seed,
    )
    for _ in range(params.n_stages):
        prob = _sigmoid(scores)
        residual = y - prob
        tree = fit_tree(X, residual, tree_params)
        leaves = tree.apply(X)
        hess = prob * (1.0 - prob)
        num = np.bincount(leaves, weights=residual, minlength=tree.n_nodes)
        den = np.bincount(leaves, weights=hess, minlength=tree.n_nodes)
        newton = num / np.maximum(den, 1e-12)
        np.clip(newton, -LEAF_CLIP, LEAF_CLIP, out=newton)
        is_leaf = tree.feature < 0
        tree.value[is_leaf] = newton[is_leaf]
        scores += params.shrinkage * newton[leaves]
        model.trees.append(tree)
        model.train_loss_path.append(logistic_loss(y, scores))
    return model
