"""Acquisition scoring and batch selection.

Scores are on the utility scale (docking scores already negated by the
library), so greedy is a plain argmax of the predicted mean and UCB adds
``beta`` predicted standard deviations. Selection is a deterministic
top-B: a partial partition finds the score threshold and boundary ties are
resolved by ascending index, so no full pool sort happens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from molsieve.errors import ConfigInvalid, PoolExhausted
from molsieve.surrogate.base import Prediction, Predictions

GREEDY = "greedy"
UCB = "ucb"
RANDOM = "random"

STRATEGIES = (GREEDY, UCB, RANDOM)


@dataclass(frozen=True)
class AcquisitionConfig:
    strategy: str = GREEDY
    beta: float = 2.0
    batch_size: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigInvalid(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.beta < 0:
            raise ConfigInvalid("beta must be >= 0")
        if self.batch_size < 1:
            raise ConfigInvalid("batch_size must be >= 1")


def acquisition_score(
    p: Prediction, cfg: AcquisitionConfig, rng: np.random.Generator | None = None
) -> float:
    """Score a single prediction under the configured strategy."""
    if cfg.strategy == GREEDY:
        return p.mean
    if cfg.strategy == UCB:
        return p.mean + cfg.beta * float(np.sqrt(p.variance))
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    return float(rng.random())


def pool_scores(predictions: Predictions, cfg: AcquisitionConfig) -> np.ndarray:
    """Vectorized acquisition scores for a candidate pool.

    For the random strategy the scores are i.i.d. seeded uniforms drawn in
    pool order, independent of the predictions.
    """
    if cfg.strategy == GREEDY:
        return np.asarray(predictions.mean, dtype=np.float64)
    if cfg.strategy == UCB:
        return predictions.mean + cfg.beta * np.sqrt(predictions.variance)
    return np.random.default_rng(cfg.seed).random(len(predictions))


def select_batch(
    pool: np.ndarray,
    acquired: set[int] | np.ndarray,
    scores: np.ndarray,
    cfg: AcquisitionConfig,
) -> np.ndarray:
    """Pick the `batch_size` best unacquired pool members, sorted ascending.

    `scores` aligns with `pool`; members of `acquired` are never returned.
    Boundary ties break toward the lower library index.
    """
    pool = np.asarray(pool, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if pool.shape != scores.shape:
        raise ConfigInvalid("pool and scores must align")

    acquired_arr = np.fromiter(acquired, dtype=np.int64, count=len(acquired)) if isinstance(acquired, set) else np.asarray(acquired, dtype=np.int64)
    candidate_mask = ~np.isin(pool, acquired_arr)
    candidates = pool[candidate_mask]
    cand_scores = scores[candidate_mask]

    b = cfg.batch_size
    if len(candidates) < b:
        raise PoolExhausted(f"{len(candidates)} unacquired candidates for batch of {b}")
    if len(candidates) == b:
        return np.sort(candidates)

    # Partition once to find the B-th best score, then fill strictly-better
    # rows and resolve ties at the threshold by ascending index.
    threshold = np.partition(cand_scores, len(cand_scores) - b)[len(cand_scores) - b]
    better = candidates[cand_scores > threshold]
    remaining = b - len(better)
    at_threshold = candidates[cand_scores == threshold]
    chosen = np.concatenate([better, np.sort(at_threshold)[:remaining]])
    return np.sort(chosen)


def initial_batch(n_library: int, frac: float, seed: int) -> np.ndarray:
    """ceil(frac*N) indices drawn uniformly without replacement, sorted."""
    if not 0.0 < frac < 1.0:
        raise ConfigInvalid("initial fraction must be in (0, 1)")
    size = int(np.ceil(frac * n_library))
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_library, size=size, replace=False)).astype(np.int64)
