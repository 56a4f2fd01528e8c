from molsieve.surrogate.base import (
    MODE_MSE,
    MODE_NLL,
    EarlyStopper,
    Prediction,
    Predictions,
    SurrogateModel,
    TrainConfig,
    ensemble_variance,
    load_model,
    nll_loss,
    nll_loss_grad,
    save_model,
)
from molsieve.surrogate.forest import GradientBoostedModel, RandomForestModel
from molsieve.surrogate.mlp import EmbeddingMLP, FingerprintMLP

SURROGATES = {
    "rf": RandomForestModel,
    "gbt": GradientBoostedModel,
    "mlp": FingerprintMLP,
    "embed-mlp": EmbeddingMLP,
}


def build_surrogate(name: str) -> SurrogateModel:
    try:
        return SURROGATES[name]()
    except KeyError:
        raise ValueError(f"unknown surrogate {name!r}; choose from {sorted(SURROGATES)}") from None


__all__ = [
    "MODE_MSE",
    "MODE_NLL",
    "EarlyStopper",
    "EmbeddingMLP",
    "FingerprintMLP",
    "GradientBoostedModel",
    "Prediction",
    "Predictions",
    "RandomForestModel",
    "SURROGATES",
    "SurrogateModel",
    "TrainConfig",
    "build_surrogate",
    "ensemble_variance",
    "load_model",
    "nll_loss",
    "nll_loss_grad",
    "save_model",
]
