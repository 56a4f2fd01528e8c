"""molsieve: retrospective batched Bayesian-optimization virtual screening."""

__version__ = "0.1.0"

from molsieve.acquisition import AcquisitionConfig, initial_batch, select_batch
from molsieve.campaign import (
    CampaignConfig,
    CampaignTrace,
    IterationRecord,
    enrichment_factor,
    run_campaign,
    topk_retrieval,
)
from molsieve.chem import (
    Fingerprint,
    FingerprintSpec,
    MolGraph,
    atom_pair_fingerprint,
    dice_similarity,
    mean_pairwise_dice,
    morgan_fingerprint,
    parse_smiles,
)
from molsieve.features import FeatureConfig, build_feature_matrix
from molsieve.library import IngestOptions, Library, load_embeddings, load_library
from molsieve.surrogate import TrainConfig, build_surrogate

__all__ = [
    "AcquisitionConfig",
    "CampaignConfig",
    "CampaignTrace",
    "FeatureConfig",
    "Fingerprint",
    "FingerprintSpec",
    "IngestOptions",
    "IterationRecord",
    "Library",
    "MolGraph",
    "TrainConfig",
    "atom_pair_fingerprint",
    "build_feature_matrix",
    "build_surrogate",
    "dice_similarity",
    "enrichment_factor",
    "initial_batch",
    "load_embeddings",
    "load_library",
    "mean_pairwise_dice",
    "morgan_fingerprint",
    "parse_smiles",
    "run_campaign",
    "select_batch",
    "topk_retrieval",
]
