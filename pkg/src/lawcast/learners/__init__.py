"""Base learners: CART trees, random forests, gradient boosting, elastic net.

All four share a numpy design-matrix interface and a uniform
``predict_proba`` surface so the stacking layer can treat them
interchangeably. Fitted models are immutable and export to versioned JSON
(see :mod:`lawcast.learners.io`).
"""

from .tree import Tree, TreeParams, fit_tree
from .forest import ForestModel, ForestParams, fit_random_forest
from .boosting import GbmModel, GbmParams, fit_gbm
from .elastic_net import ElasticNetModel, fit_elastic_net_logistic
from .io import load_learner, save_learner

import numpy as np

__all__ = [
    "Tree",
    "TreeParams",
    "fit_tree",
    "ForestModel",
    "ForestParams",
    "fit_random_forest",
    "GbmModel",
    "GbmParams",
    "fit_gbm",
    "ElasticNetModel",
    "fit_elastic_net_logistic",
    "predict_proba",
    "check_schema",
    "save_learner",
    "load_learner",
]


def check_schema(model, X: np.ndarray, feature_names: list[str] | None = None) -> None:
    """Raise with the offending columns when X does not match training schema."""
    expected = getattr(model, "n_features", None)
    if expected is not None and X.shape[1] != expected:
        names = getattr(model, "feature_names", None)
        if names is not None and feature_names is not None:
            missing = [n for n in names if n not in feature_names]
            extra = [n for n in feature_names if n not in names]
            raise ValueError(
                f"design matrix has {X.shape[1]} columns, model expects {expected}; "
                f"missing={missing} extra={extra}"
            )
        raise ValueError(
            f"design matrix has {X.shape[1]} columns, model expects {expected}"
        )
    if feature_names is not None:
        names = getattr(model, "feature_names", None)
        if names is not None and list(feature_names) != list(names):
            missing = [n for n in names if n not in feature_names]
            extra = [n for n in feature_names if n not in names]
            raise ValueError(f"column name mismatch; missing={missing} extra={extra}")


def predict_proba(model, X: np.ndarray, feature_names: list[str] | None = None) -> np.ndarray:
    """Probabilities in [0, 1] from any fitted learner; checks the schema first."""
    X = np.asarray(X, dtype=np.float64)
    check_schema(model, X, feature_names)
    return model.predict_proba(X)
