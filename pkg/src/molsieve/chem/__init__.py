from molsieve.chem.fingerprints import (
    Fingerprint,
    FingerprintSpec,
    atom_pair_fingerprint,
    dice_similarity,
    mean_pairwise_dice,
    morgan_fingerprint,
)
from molsieve.chem.smiles import AtomRecord, BondOrder, BondRecord, MolGraph, parse_smiles

__all__ = [
    "AtomRecord",
    "BondOrder",
    "BondRecord",
    "Fingerprint",
    "FingerprintSpec",
    "MolGraph",
    "atom_pair_fingerprint",
    "dice_similarity",
    "mean_pairwise_dice",
    "morgan_fingerprint",
    "parse_smiles",
]
