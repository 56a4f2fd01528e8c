"""Two-hidden-layer neural surrogates over fingerprint bits or embeddings.

Greedy campaigns train the single-output head on mean squared error; UCB
campaigns train the two-output head (mean, log-variance) on the Gaussian
negative log-likelihood with the variance clamped to 1e-5. The two heads
share the identical trunk and differ only in output width.

Training details: Adam, constant learning rate, seeded minibatch order,
80/20 train/validation split redrawn from the config seed, early stopping
after `patience` epochs without validation improvement, best-epoch weights
restored. Targets are standardized internally and predictions mapped back
to the utility scale. A constant-target training set short-circuits to the
exact optimum, the constant predictor.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from molsieve.surrogate.base import (
    MODE_NLL,
    VARIANCE_FLOOR,
    Predictions,
    SurrogateModel,
    TrainConfig,
    check_training_inputs,
    run_early_stopped_loop,
)

_PREDICT_BATCH = 8192


def _build_net(n_in: int, hidden: tuple[int, int], n_out: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Linear(n_in, hidden[0]),
        nn.ReLU(),
        nn.Linear(hidden[0], hidden[1]),
        nn.ReLU(),
        nn.Linear(hidden[1], n_out),
    )


class _TorchMLP(SurrogateModel):
    name = "mlp"

    def __init__(self) -> None:
        super().__init__()
        self._net: nn.Sequential | None = None
        self._mode = "mse"
        self._y_mean = 0.0
        self._y_scale = 1.0
        self._constant: float | None = None
        self.history_: dict | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> "_TorchMLP":
        check_training_inputs(X, y)
        y = np.asarray(y, dtype=np.float64)
        self._mode = cfg.mode
        self.n_features_ = X.shape[1]
        self._net = None
        self.history_ = None

        if float(y.std()) == 0.0:
            self._constant = float(y[0])
            return self

        self._constant = None
        rng = np.random.default_rng(cfg.seed)
        torch.manual_seed(cfg.seed)

        n = X.shape[0]
        n_train = min(n - 1, max(1, int(cfg.split_fraction * n)))
        order = rng.permutation(n)
        train_idx, val_idx = order[:n_train], order[n_train:]

        self._y_mean = float(y[train_idx].mean())
        self._y_scale = max(float(y[train_idx].std()), 1e-8)
        y_std = (y - self._y_mean) / self._y_scale

        x_train = torch.as_tensor(np.ascontiguousarray(X[train_idx], dtype=np.float32))
        y_train = torch.as_tensor(y_std[train_idx].astype(np.float32))
        x_val = torch.as_tensor(np.ascontiguousarray(X[val_idx], dtype=np.float32))
        y_val = torch.as_tensor(y_std[val_idx].astype(np.float32))

        net = _build_net(self.n_features_, cfg.hidden_sizes, 2 if cfg.mode == MODE_NLL else 1)
        optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)

        def batch_loss(out: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
            if cfg.mode == MODE_NLL:
                mean, logvar = out[:, 0], out[:, 1]
                v = torch.clamp(torch.exp(logvar), min=VARIANCE_FLOOR)
                return 0.5 * (torch.log(v) + (mean - target) ** 2 / v).mean()
            return ((out[:, 0] - target) ** 2).mean()

        def train_epoch(_epoch: int) -> None:
            net.train()
            # seeded minibatch order, one permutation per epoch
            perm = rng.permutation(n_train)
            for start in range(0, n_train, cfg.batch_size):
                idx = torch.as_tensor(perm[start : start + cfg.batch_size])
                optimizer.zero_grad()
                loss = batch_loss(net(x_train[idx]), y_train[idx])
                loss.backward()
                optimizer.step()

        def validation_loss() -> float:
            net.eval()
            with torch.no_grad():
                return float(batch_loss(net(x_val), y_val))

        def snapshot() -> dict:
            return {k: v.detach().clone() for k, v in net.state_dict().items()}

        self.history_ = run_early_stopped_loop(
            cfg.max_epochs, cfg.patience, train_epoch, validation_loss, snapshot, net.load_state_dict
        )
        self.history_["n_train"] = int(n_train)
        self.history_["n_val"] = int(n - n_train)
        net.eval()
        self._net = net
        return self

    def _forward(self, X: np.ndarray) -> np.ndarray:
        assert self._net is not None
        outs = []
        with torch.no_grad():
            for start in range(0, X.shape[0], _PREDICT_BATCH):
                chunk = np.ascontiguousarray(X[start : start + _PREDICT_BATCH], dtype=np.float32)
                outs.append(self._net(torch.as_tensor(chunk)).numpy())
        return np.concatenate(outs, axis=0) if outs else np.zeros((0, 1))

    def predict(self, X: np.ndarray) -> Predictions:
        self._check_predict_input(X)
        n = X.shape[0]
        if self._constant is not None:
            mean = np.full(n, self._constant)
            var = np.full(n, VARIANCE_FLOOR if self._mode == MODE_NLL else 0.0)
            return Predictions(mean, var)
        out = self._forward(X).astype(np.float64)
        mean = out[:, 0] * self._y_scale + self._y_mean
        if self._mode == MODE_NLL:
            var = np.exp(out[:, 1]) * self._y_scale**2
            var = np.maximum(var, VARIANCE_FLOOR)
        else:
            var = np.zeros(n)
        return Predictions(mean, var)


class FingerprintMLP(_TorchMLP):
    """Neural head over binary fingerprint features."""

    name = "mlp"


class EmbeddingMLP(_TorchMLP):
    """Identical head over externally supplied embedding vectors."""

    name = "embed-mlp"
