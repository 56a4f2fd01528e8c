"""Surrogate-model interface and the shared training math.

Every surrogate maps a feature matrix to per-row (predicted utility mean,
predicted variance). Models are retrained from scratch on the full
accumulated acquisition set at every call to :meth:`SurrogateModel.fit`;
there is no warm starting, so a campaign's results depend only on the data
and the seed.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from molsieve.errors import (
    DimensionMismatch,
    NonFiniteTarget,
    TooFewMembers,
    TooFewSamples,
    Untrained,
)

VARIANCE_FLOOR = 1e-5

MODE_MSE = "mse"
MODE_NLL = "nll"


@dataclass(frozen=True)
class Prediction:
    """Mean and variance of the predicted utility for one molecule."""

    mean: float
    variance: float


class Predictions:
    """Column view over a batch of predictions."""

    def __init__(self, mean: np.ndarray, variance: np.ndarray) -> None:
        if mean.shape != variance.shape:
            raise DimensionMismatch("mean and variance must have identical shapes")
        if variance.size and float(variance.min()) < 0:
            raise ValueError("negative predicted variance")
        self.mean = mean
        self.variance = variance

    def __len__(self) -> int:
        return len(self.mean)

    def __getitem__(self, i: int) -> Prediction:
        return Prediction(float(self.mean[i]), float(self.variance[i]))


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by all surrogate families.

    `mode` selects the neural training loss: "mse" pairs with greedy
    acquisition, "nll" with UCB. Tree models ignore it (they always train
    on squared error and get their variance from the ensemble).
    """

    mode: str = MODE_MSE
    split_fraction: float = 0.8
    patience: int = 10
    max_epochs: int = 50
    n_trees: int = 100
    seed: int = 0
    jobs: int = 1
    # neural
    learning_rate: float = 5e-4
    batch_size: int = 32
    hidden_sizes: tuple[int, int] = (256, 128)
    # random forest
    rf_max_depth: int | None = 8
    rf_min_samples_leaf: int = 1
    rf_bootstrap: bool = True
    # gradient boosting; max_leaves=None lifts the cap entirely
    gbt_max_leaves: int | None = 31
    gbt_learning_rate: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split_fraction must be in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.mode not in (MODE_MSE, MODE_NLL):
            raise ValueError(f"unknown training mode {self.mode!r}")


def nll_loss(y: Any, mean: Any, var: Any) -> Any:
    """Gaussian negative log-likelihood, 0.5*(log v + (mean-y)^2/v).

    The variance is clamped to 1e-5 in both terms for stability. Accepts
    scalars or numpy arrays and broadcasts like numpy.
    """
    v = np.maximum(var, VARIANCE_FLOOR)
    out = 0.5 * (np.log(v) + (np.asarray(mean) - np.asarray(y)) ** 2 / v)
    return float(out) if np.isscalar(y) and np.isscalar(mean) and np.isscalar(var) else out


def nll_loss_grad(y: Any, mean: Any, var: Any) -> tuple[Any, Any]:
    """Analytic gradients of :func:`nll_loss` w.r.t. mean and log-variance.

    In the clamped region (var < 1e-5) the log-variance gradient is zero
    and the mean gradient uses the floor value, matching what automatic
    differentiation of the clamped loss produces.
    """
    y = np.asarray(y, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    v = np.maximum(var, VARIANCE_FLOOR)
    d_mean = (mean - y) / v
    # log-variance acts through v = exp(log v) only where the clamp is inactive
    d_logvar = np.where(var >= VARIANCE_FLOOR, 0.5 * (1.0 - (mean - y) ** 2 / v), 0.0)
    return d_mean, d_logvar


def ensemble_variance(member_predictions: Sequence[float] | np.ndarray) -> float:
    """Population variance (divide by M) of ensemble member predictions."""
    members = np.asarray(member_predictions, dtype=np.float64)
    if members.ndim != 1 or len(members) < 2:
        raise TooFewMembers("ensemble variance needs at least two member predictions")
    return float(members.var())


class EarlyStopper:
    """Stop after `patience` consecutive epochs without improvement.

    Tracks the best (lowest) validation loss; `update` returns True when
    training should stop. The snapshot passed alongside the best loss is
    kept for restoring the best-epoch parameters.
    """

    def __init__(self, patience: int) -> None:
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = 0
        self.best_state: Any = None
        self.failures = 0

    def update(self, epoch: int, loss: float, state: Any = None) -> bool:
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self.best_state = state
            self.failures = 0
        else:
            self.failures += 1
        return self.failures >= self.patience


def run_early_stopped_loop(
    max_epochs: int,
    patience: int,
    train_epoch: Callable[[int], None],
    validation_loss: Callable[[], float],
    snapshot: Callable[[], Any],
    restore: Callable[[Any], None],
) -> dict[str, Any]:
    """Drive an epoch loop with early stopping and best-state restore.

    Epochs are numbered from 1. Returns a history dict with the epochs
    actually trained, the best epoch, and the per-epoch validation losses.
    """
    stopper = EarlyStopper(patience)
    losses: list[float] = []
    epochs_trained = 0
    for epoch in range(1, max_epochs + 1):
        train_epoch(epoch)
        loss = validation_loss()
        losses.append(loss)
        epochs_trained = epoch
        if stopper.update(epoch, loss, snapshot()):
            break
    if stopper.best_state is not None:
        restore(stopper.best_state)
    return {
        "epochs_trained": epochs_trained,
        "best_epoch": stopper.best_epoch,
        "best_loss": stopper.best_loss,
        "val_losses": losses,
    }


def check_training_inputs(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2:
        raise DimensionMismatch("feature matrix must be 2-D")
    if len(y) != X.shape[0]:
        raise DimensionMismatch(f"{len(y)} targets for {X.shape[0]} feature rows")
    if X.shape[0] < 5:
        raise TooFewSamples(f"need at least 5 labeled rows, got {X.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise NonFiniteTarget("targets contain NaN or infinity")


class SurrogateModel:
    """fit/predict interface every surrogate family implements."""

    name = "base"

    def __init__(self) -> None:
        self.n_features_: int | None = None

    @property
    def is_trained(self) -> bool:
        return self.n_features_ is not None

    def fit(self, X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> "SurrogateModel":
        raise NotImplementedError

    def predict(self, X: np.ndarray) -> Predictions:
        raise NotImplementedError

    def predict_mean(self, X: np.ndarray) -> np.ndarray:
        """Mean-only fast path; default delegates to :meth:`predict`."""
        return self.predict(X).mean

    def _check_predict_input(self, X: np.ndarray) -> None:
        if not self.is_trained:
            raise Untrained(f"{self.name}: predict() before fit()")
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise DimensionMismatch(
                f"{self.name}: expected {self.n_features_} features, got shape {X.shape}"
            )


CHECKPOINT_VERSION = 1


def save_model(model: SurrogateModel, path: str | Path) -> None:
    """Dump a trained model to a versioned checkpoint file."""
    payload = {
        "format": "molsieve-model",
        "version": CHECKPOINT_VERSION,
        "name": model.name,
        "model": model,
    }
    with Path(path).open("wb") as handle:
        pickle.dump(payload, handle)


def load_model(path: str | Path) -> SurrogateModel:
    with Path(path).open("rb") as handle:
        payload = pickle.load(handle)
    if not isinstance(payload, dict) or payload.get("format") != "molsieve-model":
        raise ValueError(f"{path}: not a molsieve model checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    return payload["model"]
