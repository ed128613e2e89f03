"""Stacked generalization: three base learners combined by a non-negative
regularized logistic meta-learner.

Out-of-fold predictions from stratified k-fold splits of the training data
form the meta-learner's design matrix (never in-fold predictions, so the
meta-learner sees honest scores). The base learners are then refit on the
full training data for deployment. Non-negative meta weights plus the
monotone link make the stacked score monotone in every base score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .learners import (
    ElasticNetModel,
    ForestParams,
    GbmParams,
    fit_elastic_net_logistic,
    fit_gbm,
    fit_random_forest,
    load_learner,
    save_learner,
)
from .seeding import derive_seed

BaseFitter = Callable[[np.ndarray, np.ndarray, int], object]


@dataclass
class StackingConfig:
    k_folds: int = 5
    seed: int = 0
    gbm: GbmParams = field(default_factory=GbmParams)
    forest: ForestParams = field(default_factory=ForestParams)
    enet_alpha: float = 0.5
    enet_lambda: float = 1e-5
    meta_alpha: float = 0.5
    meta_lambda: float = 1e-5
    # Injection point for tests and experiments; None = the standard three.
    base_learners: Mapping[str, BaseFitter] | None = None

    def fitters(self) -> dict[str, BaseFitter]:
        if self.base_learners is not None:
            return dict(self.base_learners)
        return {
            "gbm": lambda X, y, seed: fit_gbm(X, y, replace(self.gbm, seed=seed)),
            "forest": lambda X, y, seed: fit_random_forest(
                X, y, replace(self.forest, seed=seed)
            ),
            "elastic_net": lambda X, y, seed: fit_elastic_net_logistic(
                X, y, self.enet_alpha, self.enet_lambda
            ),
        }


def stratified_folds(y: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold id per row; each fold receives both classes.

    Rows of each class are shuffled and dealt round-robin, so class
    proportions per fold are as even as integer counts allow. A class with
    fewer members than folds cannot stratify and is an error.
    """
    if k < 2:
        raise ValueError("k_folds must be >= 2")
    y = np.asarray(y)
    folds = np.empty(y.shape[0], dtype=np.int64)
    rng = np.random.default_rng(seed)
    for cls in np.unique(y):
        rows = np.flatnonzero(y == cls)
        if rows.size < k:
            raise ValueError(
                f"class {cls} has {rows.size} rows, cannot stratify into {k} folds"
            )
        rng.shuffle(rows)
        folds[rows] = np.arange(rows.size) % k
    return folds


@dataclass
class StackedEnsemble:
    base_names: list[str]
    base_models: dict[str, object]
    meta: ElasticNetModel
    k_folds: int
    fold_seed: int
    fold_assignment: np.ndarray = field(repr=False)
    oof_predictions: np.ndarray = field(repr=False)

    @property
    def meta_weights(self) -> dict[str, float]:
        return {n: float(w) for n, w in zip(self.base_names, self.meta.coefficients)}

    def base_matrix(self, X: np.ndarray) -> np.ndarray:
        cols = [self.base_models[name].predict_proba(X) for name in self.base_names]
        return np.column_stack(cols)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.meta.predict_proba(self.base_matrix(X))

    # -- persistence ---------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name in self.base_names:
            save_learner(self.base_models[name], directory / f"base_{name}.json")
        save_learner(self.meta, directory / "meta.json")
        manifest = {
            "base_names": self.base_names,
            "k_folds": self.k_folds,
            "fold_seed": self.fold_seed,
        }
        (directory / "stack.json").write_text(json.dumps(manifest, indent=1))

    @classmethod
    def load(cls, directory: str | Path) -> "StackedEnsemble":
        directory = Path(directory)
        manifest = json.loads((directory / "stack.json").read_text())
        names = manifest["base_names"]
        bases = {n: load_learner(directory / f"base_{n}.json") for n in names}
        meta = load_learner(directory / "meta.json")
        return cls(
            base_names=names,
            base_models=bases,
            meta=meta,
            k_folds=manifest["k_folds"],
            fold_seed=manifest["fold_seed"],
            fold_assignment=np.empty(0, dtype=np.int64),
            oof_predictions=np.empty((0, len(names))),
        )


def stacked_fit(X: np.ndarray, y: np.ndarray, config: StackingConfig | None = None) -> StackedEnsemble:
    """Fit base learners out-of-fold, train the non-negative meta-learner on
    the assembled predictions, then refit the bases on all rows."""
    config = config or StackingConfig()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    fitters = config.fitters()
    names = list(fitters)
    fold_seed = derive_seed(config.seed, "stack/folds")
    folds = stratified_folds(y, config.k_folds, fold_seed)

    oof = np.zeros((X.shape[0], len(names)))
    for f in range(config.k_folds):
        test_rows = folds == f
        train_rows = ~test_rows
        for b, name in enumerate(names):
            model = fitters[name](
                X[train_rows], y[train_rows], derive_seed(config.seed, f"stack/fold{f}/{name}")
            )
            oof[test_rows, b] = model.predict_proba(X[test_rows])

    meta = fit_elastic_net_logistic(
        oof,
        y,
        alpha=config.meta_alpha,
        lam=config.meta_lambda,
        nonnegative=True,
        feature_names=names,
    )
    full_models = {
        name: fitters[name](X, y, derive_seed(config.seed, f"stack/full/{name}"))
        for name in names
    }
    return StackedEnsemble(
        base_names=names,
        base_models=full_models,
        meta=meta,
        k_folds=config.k_folds,
        fold_seed=fold_seed,
        fold_assignment=folds,
        oof_predictions=oof,
    )


def stacked_predict(ensemble: StackedEnsemble, X: np.ndarray) -> np.ndarray:
    """Base predictions on X fed through the meta-learner."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    for name in ensemble.base_names:
        model = ensemble.base_models[name]
        expected = getattr(model, "n_features", None)
        if expected is not None and X.shape[1] != expected:
            raise ValueError(
                f"design matrix has {X.shape[1]} columns, base {name!r} expects {expected}"
            )
    return ensemble.predict_proba(X)
