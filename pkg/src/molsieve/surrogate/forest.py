"""Tree-ensemble surrogates.

Both families train on squared error regardless of the acquisition mode;
their uncertainty comes from the ensemble itself:

* random forest: population variance of the individual tree predictions;
* gradient boosting: population variance of the staged cumulative
  predictions F_1(x)..F_M(x), the closest well-defined analogue for
  residual-fitting trees.

scikit-learn provides the estimators; this module owns the contract
(seeding, per-split feature-subset size ceil(sqrt(d)), and the
deterministic mean/variance reductions over per-member predictions, which
make results independent of the worker-thread count).
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.ensemble import HistGradientBoostingRegressor, RandomForestRegressor

from molsieve.surrogate.base import (
    Predictions,
    SurrogateModel,
    TrainConfig,
    check_training_inputs,
)

_CHUNK_ROWS = 16384


def _as_float32(X: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(X, dtype=np.float32)


class RandomForestModel(SurrogateModel):
    """100 bagged depth-8 trees; variance across the trees."""

    name = "rf"

    def __init__(self) -> None:
        super().__init__()
        self._forest: RandomForestRegressor | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> "RandomForestModel":
        check_training_inputs(X, y)
        d = X.shape[1]
        self._forest = RandomForestRegressor(
            n_estimators=cfg.n_trees,
            max_depth=cfg.rf_max_depth,
            min_samples_leaf=cfg.rf_min_samples_leaf,
            max_features=min(d, math.ceil(math.sqrt(d))),
            bootstrap=cfg.rf_bootstrap,
            random_state=cfg.seed,
            n_jobs=cfg.jobs,
        )
        self._forest.fit(_as_float32(X), np.asarray(y, dtype=np.float64))
        self.n_features_ = d
        return self

    def _member_stats(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        assert self._forest is not None
        n = X.shape[0]
        mean = np.empty(n, dtype=np.float64)
        var = np.empty(n, dtype=np.float64)
        trees = self._forest.estimators_
        for start in range(0, n, _CHUNK_ROWS):
            chunk = _as_float32(X[start : start + _CHUNK_ROWS])
            members = np.empty((len(trees), chunk.shape[0]), dtype=np.float64)
            for t, tree in enumerate(trees):
                members[t] = tree.predict(chunk, check_input=False)
            mean[start : start + chunk.shape[0]] = members.mean(axis=0)
            var[start : start + chunk.shape[0]] = members.var(axis=0)
        return mean, np.maximum(var, 0.0)

    def predict(self, X: np.ndarray) -> Predictions:
        self._check_predict_input(X)
        mean, var = self._member_stats(X)
        return Predictions(mean, var)

    def predict_mean(self, X: np.ndarray) -> np.ndarray:
        self._check_predict_input(X)
        return self._member_stats(X)[0]


class GradientBoostedModel(SurrogateModel):
    """Histogram gradient boosting, 100 trees, leaf cap instead of a depth cap."""

    name = "gbt"

    def __init__(self) -> None:
        super().__init__()
        self._booster: HistGradientBoostingRegressor | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> "GradientBoostedModel":
        check_training_inputs(X, y)
        self._booster = HistGradientBoostingRegressor(
            max_iter=cfg.n_trees,
            max_leaf_nodes=cfg.gbt_max_leaves,
            max_depth=None,
            learning_rate=cfg.gbt_learning_rate,
            early_stopping=False,
            random_state=cfg.seed,
        )
        self._booster.fit(_as_float32(X), np.asarray(y, dtype=np.float64))
        self.n_features_ = X.shape[1]
        return self

    def predict(self, X: np.ndarray) -> Predictions:
        self._check_predict_input(X)
        assert self._booster is not None
        n = X.shape[0]
        mean = np.empty(n, dtype=np.float64)
        var = np.empty(n, dtype=np.float64)
        for start in range(0, n, _CHUNK_ROWS):
            chunk = _as_float32(X[start : start + _CHUNK_ROWS])
            # online population variance over the staged cumulative predictions
            count = 0
            running_mean = np.zeros(chunk.shape[0])
            running_m2 = np.zeros(chunk.shape[0])
            stage = None
            for stage in self._booster.staged_predict(chunk):
                count += 1
                delta = stage - running_mean
                running_mean += delta / count
                running_m2 += delta * (stage - running_mean)
            assert stage is not None
            mean[start : start + chunk.shape[0]] = stage
            var[start : start + chunk.shape[0]] = np.maximum(running_m2 / count, 0.0)
        return Predictions(mean, var)

    def predict_mean(self, X: np.ndarray) -> np.ndarray:
        self._check_predict_input(X)
        assert self._booster is not None
        n = X.shape[0]
        out = np.empty(n, dtype=np.float64)
        for start in range(0, n, _CHUNK_ROWS):
            chunk = _as_float32(X[start : start + _CHUNK_ROWS])
            out[start : start + chunk.shape[0]] = self._booster.predict(chunk)
        return out
