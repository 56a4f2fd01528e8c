"""Feature matrices fed to surrogates.

Bit-valued sources unpack the library's cached fingerprints into a dense
{0,1} uint8 matrix; the embedding source hands through the vectors attached
by ``load_embeddings``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from molsieve.chem.fingerprints import FingerprintSpec
from molsieve.errors import ConfigInvalid, DimensionMismatch
from molsieve.library import Library

ATOM_PAIR_BITS = "atom_pair_bits"
MORGAN_BITS = "morgan_bits"
EXTERNAL_EMBEDDING = "external_embedding"

SOURCES = (ATOM_PAIR_BITS, MORGAN_BITS, EXTERNAL_EMBEDDING)


@dataclass(frozen=True)
class FeatureConfig:
    source: str = ATOM_PAIR_BITS
    width: int = 2048
    morgan_radius: int = 3
    pair_min_radius: int = 1
    pair_max_radius: int = 3

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ConfigInvalid(f"unknown feature source {self.source!r}; choose from {SOURCES}")

    def fingerprint_spec(self) -> FingerprintSpec:
        if self.source == MORGAN_BITS:
            return FingerprintSpec(kind="morgan", width=self.width, radius=self.morgan_radius)
        return FingerprintSpec(
            kind="atom_pair",
            width=self.width,
            min_radius=self.pair_min_radius,
            max_radius=self.pair_max_radius,
        )


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    source: str

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def build_feature_matrix(library: Library, cfg: FeatureConfig) -> FeatureMatrix:
    """Materialize features for every library record, in index order."""
    if cfg.source == EXTERNAL_EMBEDDING:
        if library.embeddings is None:
            raise ConfigInvalid("feature source external_embedding needs load_embeddings first")
        if not np.all(np.isfinite(library.embeddings)):
            raise DimensionMismatch("embedding features contain non-finite values")
        return FeatureMatrix(values=library.embeddings, source=cfg.source)

    spec = cfg.fingerprint_spec()
    if spec != library.fingerprint_spec:
        raise ConfigInvalid(
            f"library fingerprints are {library.fingerprint_spec}, features ask for {spec}; "
            "load the library with a matching fingerprint spec"
        )
    packed = library.packed_fingerprints()
    bits = np.unpackbits(packed, axis=1, bitorder="little")
    return FeatureMatrix(values=bits, source=cfg.source)
