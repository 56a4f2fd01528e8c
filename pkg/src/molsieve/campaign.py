"""Retrospective batched Bayesian-optimization campaign.

One campaign: draw a random initial batch, label it through the oracle,
fit the surrogate, then for n iterations score the unacquired pool, acquire
the top batch, relabel, refit from scratch, and record metrics. Metrics are
computed on the cumulative acquired set after each refit, with iteration 0
being the post-initialization state.

Determinism: every random draw comes from a stream derived from the single
campaign seed (see :mod:`molsieve.seeds`), and serialized traces contain no
timing data, so two runs of the same config produce byte-identical trace
files. Wall-clock timings are recorded on the in-memory records and belong
in the run manifest.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from molsieve import seeds
from molsieve.acquisition import (
    GREEDY,
    RANDOM,
    AcquisitionConfig,
    initial_batch,
    pool_scores,
    select_batch,
)
from molsieve.chem.fingerprints import FingerprintSpec, mean_pairwise_dice
from molsieve.chem.smiles import parse_smiles
from molsieve.errors import ConfigInvalid, DivisionByZero
from molsieve.features import FeatureConfig, build_feature_matrix
from molsieve.library import Library
from molsieve.surrogate import build_surrogate
from molsieve.surrogate.base import Predictions, SurrogateModel, TrainConfig

DIVERSITY_OFF = "off"
DIVERSITY_EXACT = "exact"
DIVERSITY_SUBSAMPLE = "subsample"

# subsample mode falls back to exact below this many molecules
_DIVERSITY_EXACT_LIMIT = 5000
_DIVERSITY_PAIR_BUDGET = 100_000
_DIVERSITY_FP = FingerprintSpec(kind="morgan", width=2048, radius=3)


def topk_retrieval(acquired: Iterable[int] | np.ndarray, truth: Iterable[int] | np.ndarray) -> float:
    """Fraction of the true top-k set present in the acquired set."""
    truth_arr = np.asarray(list(truth) if not isinstance(truth, np.ndarray) else truth, dtype=np.int64)
    acquired_arr = np.asarray(
        list(acquired) if not isinstance(acquired, np.ndarray) else acquired, dtype=np.int64
    )
    if truth_arr.size < 1:
        raise ConfigInvalid("truth set must contain at least one index")
    hits = np.isin(truth_arr, acquired_arr).sum()
    return float(hits) / float(truth_arr.size)


def enrichment_factor(retrieval: float, explored_fraction: float) -> float:
    """Retrieval rate over the explored fraction (random selection ~= 1)."""
    if explored_fraction <= 0.0:
        raise DivisionByZero("explored fraction must be positive")
    if explored_fraction > 1.0:
        raise ConfigInvalid("explored fraction cannot exceed 1")
    return retrieval / explored_fraction


@dataclass(frozen=True)
class CampaignConfig:
    feature: FeatureConfig = FeatureConfig()
    surrogate: str = "rf"
    train: TrainConfig = TrainConfig()
    strategy: str = GREEDY
    beta: float = 2.0
    init_frac: float = 0.01
    batch_frac: float = 0.01
    iterations: int = 5
    top_k: int = 500
    seed: int = 0
    diversity: str = DIVERSITY_OFF

    def validate(self, n_library: int) -> None:
        if not 0.0 < self.init_frac < 1.0 or not 0.0 < self.batch_frac < 1.0:
            raise ConfigInvalid("init_frac and batch_frac must be in (0, 1)")
        if self.init_frac + self.iterations * self.batch_frac > 1.0:
            raise ConfigInvalid("init_frac + iterations*batch_frac must not exceed 1")
        if self.iterations < 1:
            raise ConfigInvalid("iterations must be >= 1")
        if not 1 <= self.top_k <= n_library:
            raise ConfigInvalid(f"top_k must be in 1..{n_library}")
        if self.diversity not in (DIVERSITY_OFF, DIVERSITY_EXACT, DIVERSITY_SUBSAMPLE):
            raise ConfigInvalid(f"unknown diversity mode {self.diversity!r}")

    def to_dict(self) -> dict:
        return {
            "feature": {
                "source": self.feature.source,
                "width": self.feature.width,
                "morgan_radius": self.feature.morgan_radius,
                "pair_min_radius": self.feature.pair_min_radius,
                "pair_max_radius": self.feature.pair_max_radius,
            },
            "surrogate": self.surrogate,
            "train": {
                "mode": self.train.mode,
                "split_fraction": self.train.split_fraction,
                "patience": self.train.patience,
                "max_epochs": self.train.max_epochs,
                "n_trees": self.train.n_trees,
                "learning_rate": self.train.learning_rate,
                "batch_size": self.train.batch_size,
                "hidden_sizes": list(self.train.hidden_sizes),
                "rf_max_depth": self.train.rf_max_depth,
                "rf_min_samples_leaf": self.train.rf_min_samples_leaf,
                "rf_bootstrap": self.train.rf_bootstrap,
                "gbt_max_leaves": self.train.gbt_max_leaves,
                "gbt_learning_rate": self.train.gbt_learning_rate,
            },
            "strategy": self.strategy,
            "beta": self.beta,
            "init_frac": self.init_frac,
            "batch_frac": self.batch_frac,
            "iterations": self.iterations,
            "top_k": self.top_k,
            "seed": self.seed,
            "diversity": self.diversity,
        }


@dataclass
class IterationRecord:
    iteration: int
    acquired_indices: np.ndarray  # this iteration's batch, sorted
    cumulative_explored_fraction: float
    topk_retrieval: float
    enrichment_factor: float
    mean_dice: float | None
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "acquired_indices": [int(i) for i in self.acquired_indices],
            "cumulative_explored_fraction": self.cumulative_explored_fraction,
            "topk_retrieval": self.topk_retrieval,
            "enrichment_factor": self.enrichment_factor,
            "mean_dice": self.mean_dice,
        }


@dataclass
class CampaignTrace:
    config: dict
    library_checksum: str
    n_library: int
    records: list[IterationRecord] = field(default_factory=list)

    @classmethod
    def from_dict(cls, payload: dict) -> "CampaignTrace":
        """Rebuild a (possibly partial) trace from its serialized form."""
        trace = cls(
            config=payload["config"],
            library_checksum=payload["library_checksum"],
            n_library=payload["n_library"],
        )
        for row in payload["iterations"]:
            trace.records.append(
                IterationRecord(
                    iteration=row["iteration"],
                    acquired_indices=np.asarray(row["acquired_indices"], dtype=np.int64),
                    cumulative_explored_fraction=row["cumulative_explored_fraction"],
                    topk_retrieval=row["topk_retrieval"],
                    enrichment_factor=row["enrichment_factor"],
                    mean_dice=row["mean_dice"],
                    wall_time=0.0,
                )
            )
        return trace

    @property
    def final_acquired(self) -> np.ndarray:
        if not self.records:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate([r.acquired_indices for r in self.records]))

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "library_checksum": self.library_checksum,
            "n_library": self.n_library,
            "complete": len(self.records) == self.config["iterations"] + 1,
            "iterations": [r.to_dict() for r in self.records],
            "final_acquired": [int(i) for i in self.final_acquired],
            "final_topk_retrieval": self.records[-1].topk_retrieval if self.records else None,
            "final_enrichment_factor": self.records[-1].enrichment_factor if self.records else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def table_rows(self) -> list[tuple]:
        """Flat per-iteration rows: iteration, explored, retrieval, ef, dice."""
        return [
            (
                r.iteration,
                r.cumulative_explored_fraction,
                r.topk_retrieval,
                r.enrichment_factor,
                r.mean_dice,
            )
            for r in self.records
        ]


def run_campaign(
    cfg: CampaignConfig,
    library: Library,
    surrogate_factory: Callable[[], SurrogateModel] | None = None,
    trace_sink: Callable[[CampaignTrace], None] | None = None,
    resume_from: CampaignTrace | None = None,
) -> CampaignTrace:
    """Execute the full loop and return the per-iteration trace.

    `surrogate_factory` overrides the configured surrogate (used by tests
    to inject reference models). `trace_sink` is invoked with the partial
    trace after every completed iteration, so interrupted campaigns keep
    their finished work. Passing such a partial trace as `resume_from`
    continues from its last completed iteration; because every random
    stream is derived from (seed, component, iteration), the resumed run
    finishes with exactly the trace an uninterrupted run would produce.
    """
    n = len(library)
    cfg.validate(n)
    factory = surrogate_factory or (lambda: build_surrogate(cfg.surrogate))
    # the random strategy never consults the surrogate, so skip feature
    # construction and fitting entirely; the trace is unaffected
    needs_model = cfg.strategy != RANDOM

    truth = library.topk_truth(cfg.top_k)
    batch_size = int(math.ceil(cfg.batch_frac * n))

    features = build_feature_matrix(library, cfg.feature).values if needs_model else None
    pool = np.arange(n, dtype=np.int64)
    model: SurrogateModel | None = None

    if resume_from is not None:
        trace = _check_resumable(resume_from, cfg, library)
        cumulative = trace.final_acquired
        last_done = trace.records[-1].iteration
        if needs_model and last_done < cfg.iterations:
            model = _fit(factory, features, library, cumulative, cfg, iteration=last_done)
        start_iteration = last_done + 1
    else:
        trace = CampaignTrace(config=cfg.to_dict(), library_checksum=library.checksum, n_library=n)
        t0 = time.perf_counter()
        acquired = initial_batch(n, cfg.init_frac, seeds.subseed(cfg.seed, seeds.INIT_BATCH))
        if needs_model:
            model = _fit(factory, features, library, acquired, cfg, iteration=0)
        _record(trace, library, cfg, acquired, acquired, truth, time.perf_counter() - t0, iteration=0)
        if trace_sink is not None:
            trace_sink(trace)
        cumulative = acquired
        start_iteration = 1

    for i in range(start_iteration, cfg.iterations + 1):
        t0 = time.perf_counter()
        acq_cfg = AcquisitionConfig(
            strategy=cfg.strategy,
            beta=cfg.beta,
            batch_size=batch_size,
            seed=seeds.subseed(cfg.seed, seeds.ACQUISITION, i),
        )
        candidate_mask = np.ones(n, dtype=bool)
        candidate_mask[cumulative] = False
        candidates = pool[candidate_mask]

        if cfg.strategy == RANDOM:
            scores = np.random.default_rng(acq_cfg.seed).random(len(candidates))
        else:
            assert model is not None and features is not None
            if cfg.strategy == GREEDY:
                mean = model.predict_mean(features[candidates])
                preds = Predictions(mean, np.zeros_like(mean))
            else:
                preds = model.predict(features[candidates])
            scores = pool_scores(preds, acq_cfg)

        batch = select_batch(candidates, set(), scores, acq_cfg)
        cumulative = np.sort(np.concatenate([cumulative, batch]))
        if needs_model:
            model = _fit(factory, features, library, cumulative, cfg, iteration=i)
        _record(trace, library, cfg, batch, cumulative, truth, time.perf_counter() - t0, iteration=i)
        if trace_sink is not None:
            trace_sink(trace)
    return trace


def _check_resumable(partial: CampaignTrace, cfg: CampaignConfig, library: Library) -> CampaignTrace:
    if partial.config != cfg.to_dict():
        raise ConfigInvalid("resume trace was produced by a different configuration")
    if partial.library_checksum != library.checksum or partial.n_library != len(library):
        raise ConfigInvalid("resume trace was produced from a different library")
    if not partial.records:
        raise ConfigInvalid("resume trace has no completed iterations")
    return partial


def _fit(
    factory: Callable[[], SurrogateModel],
    features: np.ndarray,
    library: Library,
    acquired: np.ndarray,
    cfg: CampaignConfig,
    iteration: int,
) -> SurrogateModel:
    labels = np.array([library.oracle(int(i)) for i in acquired])
    train_cfg = replace(cfg.train, seed=seeds.subseed(cfg.seed, seeds.SURROGATE_FIT, iteration))
    return factory().fit(features[acquired], labels, train_cfg)


def _record(
    trace: CampaignTrace,
    library: Library,
    cfg: CampaignConfig,
    batch: np.ndarray,
    cumulative: np.ndarray,
    truth: np.ndarray,
    elapsed: float,
    iteration: int,
) -> None:
    explored = len(cumulative) / len(library)
    retrieval = topk_retrieval(cumulative, truth)
    mean_dice = None
    if cfg.diversity != DIVERSITY_OFF and iteration == cfg.iterations:
        mean_dice = _final_diversity(library, cumulative, cfg)
    trace.records.append(
        IterationRecord(
            iteration=iteration,
            acquired_indices=batch,
            cumulative_explored_fraction=explored,
            topk_retrieval=retrieval,
            enrichment_factor=enrichment_factor(retrieval, explored),
            mean_dice=mean_dice,
            wall_time=elapsed,
        )
    )


def _final_diversity(library: Library, cumulative: np.ndarray, cfg: CampaignConfig) -> float:
    if library.fingerprint_spec == _DIVERSITY_FP:
        fps = [library.fingerprint(int(i)) for i in cumulative]
    else:
        fps = [_DIVERSITY_FP.compute(parse_smiles(library.smiles[int(i)])) for i in cumulative]
    max_pairs = None
    if cfg.diversity == DIVERSITY_SUBSAMPLE and len(cumulative) > _DIVERSITY_EXACT_LIMIT:
        max_pairs = _DIVERSITY_PAIR_BUDGET
    return mean_pairwise_dice(fps, max_pairs=max_pairs, seed=seeds.subseed(cfg.seed, seeds.DIVERSITY))


def aggregate_traces(traces: list[CampaignTrace]) -> list[dict]:
    """Per-iteration mean/stddev of retrieval and EF across seeded runs."""
    if not traces:
        return []
    n_iter = len(traces[0].records)
    rows = []
    for i in range(n_iter):
        retrievals = np.array([t.records[i].topk_retrieval for t in traces])
        efs = np.array([t.records[i].enrichment_factor for t in traces])
        rows.append(
            {
                "iteration": i,
                "explored_fraction": traces[0].records[i].cumulative_explored_fraction,
                "topk_retrieval_mean": float(retrievals.mean()),
                "topk_retrieval_std": float(retrievals.std()),
                "enrichment_factor_mean": float(efs.mean()),
                "enrichment_factor_std": float(efs.std()),
            }
        )
    return rows
