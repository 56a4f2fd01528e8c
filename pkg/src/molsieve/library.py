"""Scored compound library: ingest, oracle lookup, ground-truth top-k.

The library file is UTF-8 delimited text with a header row and at least a
SMILES column and a score column; extra columns are ignored. Scores are
stored exactly as parsed (full double precision); the maximization-oriented
utility is derived, never stored. Rows with unparseable SMILES or
non-finite scores are skipped and counted (or fail the load in strict
mode), and duplicate SMILES strings keep the best-utility row at the
position of their first occurrence.

A loaded :class:`Library` is immutable. Fingerprints are computed lazily
per record and cached; concurrent readers are safe because a cache slot is
only ever filled with the one deterministic value.
"""

from __future__ import annotations

import csv
import hashlib
import math
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from molsieve.chem.fingerprints import Fingerprint, FingerprintSpec
from molsieve.chem.smiles import parse_smiles
from molsieve.errors import (
    DimensionMismatch,
    EmbeddingFormatError,
    EmptyLibrary,
    IndexOutOfRange,
    KTooLarge,
    MalformedRow,
    MissingColumn,
    MissingEmbedding,
    SmilesError,
)

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

_SFEM_MAGIC = b"SFEM"
_SFEM_VERSION = 1


@dataclass(frozen=True)
class IngestOptions:
    smiles_col: str = "smiles"
    score_col: str = "score"
    delimiter: str = ","
    direction: str = MINIMIZE
    strict: bool = False
    fingerprint: FingerprintSpec = FingerprintSpec()

    def __post_init__(self) -> None:
        if self.direction not in (MINIMIZE, MAXIMIZE):
            raise ValueError(f"direction must be {MINIMIZE!r} or {MAXIMIZE!r}")


@dataclass(frozen=True)
class CompoundRecord:
    index: int
    smiles: str
    score: float
    utility: float
    fingerprint: Fingerprint
    embedding: np.ndarray | None


class Library:
    """Immutable scored compound pool with constant-time oracle lookup."""

    def __init__(
        self,
        smiles: list[str],
        scores: np.ndarray,
        direction: str,
        fingerprint_spec: FingerprintSpec,
        *,
        skipped_rows: int = 0,
        duplicates_removed: int = 0,
        embeddings: np.ndarray | None = None,
        embedding_fill_count: int = 0,
    ) -> None:
        self.smiles = smiles
        self.scores = scores
        self.direction = direction
        self.utilities = -scores if direction == MINIMIZE else scores.copy()
        self.utilities.setflags(write=False)
        self.scores.setflags(write=False)
        self.fingerprint_spec = fingerprint_spec
        self.skipped_rows = skipped_rows
        self.duplicates_removed = duplicates_removed
        self.embeddings = embeddings
        self.embedding_fill_count = embedding_fill_count
        self.checksum = self._compute_checksum()
        self._fp_cache: list[Fingerprint | None] = [None] * len(smiles)
        self._fp_lock = threading.Lock()

    def _compute_checksum(self) -> str:
        digest = hashlib.sha256()
        for smi, score in zip(self.smiles, self.scores):
            digest.update(f"{smi}\t{score!r}\n".encode())
        return digest.hexdigest()

    def __len__(self) -> int:
        return len(self.smiles)

    def oracle(self, index: int) -> float:
        """Precomputed utility of record `index`; never computes anything."""
        if not 0 <= index < len(self.smiles):
            raise IndexOutOfRange(f"index {index} outside 0..{len(self.smiles) - 1}")
        return float(self.utilities[index])

    def rank_order(self, k: int) -> np.ndarray:
        """Indices of the k best records, best first; ties by ascending index."""
        if k < 1 or k > len(self.smiles):
            raise KTooLarge(f"k={k} outside 1..{len(self.smiles)}")
        order = np.lexsort((np.arange(len(self.smiles)), -self.utilities))
        return order[:k].astype(np.int64)

    def topk_truth(self, k: int) -> np.ndarray:
        """Ground-truth top-k index set, returned sorted ascending."""
        return np.sort(self.rank_order(k))

    # -- fingerprints ---------------------------------------------------------

    def fingerprint(self, index: int) -> Fingerprint:
        cached = self._fp_cache[index]
        if cached is not None:
            return cached
        fp = self.fingerprint_spec.compute(parse_smiles(self.smiles[index]))
        with self._fp_lock:
            if self._fp_cache[index] is None:
                self._fp_cache[index] = fp
        return self._fp_cache[index]  # type: ignore[return-value]

    def precompute_fingerprints(self) -> None:
        for i in range(len(self.smiles)):
            self.fingerprint(i)

    def packed_fingerprints(self, indices: np.ndarray | None = None) -> np.ndarray:
        """(n, width/8) uint8 matrix of packed fingerprint bits."""
        if indices is None:
            indices = np.arange(len(self.smiles))
        return np.stack([self.fingerprint(int(i)).packed() for i in indices])

    def _prime_fingerprint_cache(self, fps: list[Fingerprint]) -> None:
        # Cache-warming hook for callers that already computed the identical
        # fingerprints (e.g. benchmark generators); values must match what
        # fingerprint() would produce.
        if len(fps) != len(self.smiles):
            raise DimensionMismatch("fingerprint list length differs from library size")
        with self._fp_lock:
            self._fp_cache = list(fps)

    def record(self, index: int) -> CompoundRecord:
        if not 0 <= index < len(self.smiles):
            raise IndexOutOfRange(f"index {index} outside 0..{len(self.smiles) - 1}")
        return CompoundRecord(
            index=index,
            smiles=self.smiles[index],
            score=float(self.scores[index]),
            utility=float(self.utilities[index]),
            fingerprint=self.fingerprint(index),
            embedding=None if self.embeddings is None else self.embeddings[index],
        )


def load_library(path: str | Path, options: IngestOptions | None = None) -> Library:
    """Parse a delimited scored-compound file into a :class:`Library`."""
    options = options or IngestOptions()
    path = Path(path)
    kept: dict[str, float] = {}
    order: list[str] = []
    skipped = 0
    duplicates = 0
    sign = -1.0 if options.direction == MINIMIZE else 1.0

    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle, delimiter=options.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyLibrary(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        try:
            smiles_idx = header.index(options.smiles_col)
            score_idx = header.index(options.score_col)
        except ValueError:
            missing = [c for c in (options.smiles_col, options.score_col) if c not in header]
            raise MissingColumn(f"{path}: missing column(s) {missing}; header is {header}") from None

        for row_no, row in enumerate(reader, start=2):
            reason = None
            smiles = score = None
            if len(row) <= max(smiles_idx, score_idx):
                reason = "too few columns"
            else:
                smiles = row[smiles_idx].strip()
                try:
                    score = float(row[score_idx])
                except ValueError:
                    reason = f"unparseable score {row[score_idx]!r}"
                else:
                    if not math.isfinite(score):
                        reason = f"non-finite score {score!r}"
                if reason is None:
                    try:
                        parse_smiles(smiles)
                    except SmilesError as exc:
                        reason = f"bad SMILES: {exc}"
            if reason is not None:
                if options.strict:
                    raise MalformedRow(f"{path}:{row_no}: {reason}")
                skipped += 1
                continue
            assert smiles is not None and score is not None
            if smiles in kept:
                duplicates += 1
                if sign * score > sign * kept[smiles]:
                    kept[smiles] = score
            else:
                kept[smiles] = score
                order.append(smiles)

    if not order:
        raise EmptyLibrary(f"{path}: no usable rows")
    scores = np.array([kept[s] for s in order], dtype=np.float64)
    return Library(
        smiles=order,
        scores=scores,
        direction=options.direction,
        fingerprint_spec=options.fingerprint,
        skipped_rows=skipped,
        duplicates_removed=duplicates,
    )


def load_embeddings(library: Library, path: str | Path, *, strict: bool = True) -> Library:
    """Attach per-record embedding vectors from a text or SFEM binary file.

    Returns a new :class:`Library` sharing the records. In lenient mode,
    records without an embedding row get a zero vector and are counted in
    ``embedding_fill_count``.
    """
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] == _SFEM_MAGIC:
        matrix = _read_sfem(raw, len(library), path)
        fill = 0
    else:
        matrix, fill = _read_text_embeddings(path, library, strict)
    return Library(
        smiles=library.smiles,
        scores=np.array(library.scores),
        direction=library.direction,
        fingerprint_spec=library.fingerprint_spec,
        skipped_rows=library.skipped_rows,
        duplicates_removed=library.duplicates_removed,
        embeddings=matrix,
        embedding_fill_count=fill,
    )


def _read_sfem(raw: bytes, n_expected: int, path: Path) -> np.ndarray:
    if len(raw) < 20:
        raise EmbeddingFormatError(f"{path}: truncated SFEM header")
    version, = struct.unpack_from("<I", raw, 4)
    if version != _SFEM_VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported SFEM version {version}")
    n, = struct.unpack_from("<Q", raw, 8)
    d, = struct.unpack_from("<I", raw, 16)
    payload = raw[20:]
    if len(payload) != n * d * 4:
        raise EmbeddingFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {n * d * 4} for {n}x{d} float32"
        )
    if n < n_expected:
        raise MissingEmbedding(f"{path}: {n} embedding rows for {n_expected} library records")
    if n > n_expected:
        raise EmbeddingFormatError(f"{path}: {n} embedding rows exceed {n_expected} library records")
    matrix = np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(np.float32)
    return matrix


def write_sfem(path: str | Path, matrix: np.ndarray) -> None:
    """Write an embedding matrix in the SFEM binary layout."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise DimensionMismatch("embedding matrix must be 2-D")
    n, d = matrix.shape
    with Path(path).open("wb") as handle:
        handle.write(_SFEM_MAGIC)
        handle.write(struct.pack("<IQI", _SFEM_VERSION, n, d))
        handle.write(matrix.tobytes())


def _read_text_embeddings(path: Path, library: Library, strict: bool) -> tuple[np.ndarray, int]:
    rows: list[tuple[str, list[float]]] = []
    with path.open(newline="", encoding="utf-8") as handle:
        sample = handle.readline()
        delimiter = "\t" if "\t" in sample else ","
        handle.seek(0)
        for line_no, row in enumerate(csv.reader(handle, delimiter=delimiter), start=1):
            if not row:
                continue
            key, values = row[0].strip(), row[1:]
            try:
                vector = [float(v) for v in values]
            except ValueError:
                if line_no == 1:
                    continue  # header row
                raise EmbeddingFormatError(f"{path}:{line_no}: non-numeric embedding value") from None
            if not vector:
                raise EmbeddingFormatError(f"{path}:{line_no}: no embedding values")
            rows.append((key, vector))

    if not rows:
        raise EmbeddingFormatError(f"{path}: no embedding rows")
    dims = {len(vec) for _, vec in rows}
    if len(dims) != 1:
        raise DimensionMismatch(f"{path}: inconsistent embedding dimensions {sorted(dims)}")
    d = dims.pop()

    index_keyed = all(_is_int(key) for key, _ in rows)
    by_key: dict[str | int, list[float]] = {}
    for key, vec in rows:
        by_key[int(key) if index_keyed else key] = vec
    if index_keyed:
        bad = [k for k in by_key if not 0 <= k < len(library)]  # type: ignore[operator]
        if bad:
            raise EmbeddingFormatError(f"{path}: embedding index {bad[0]} outside 0..{len(library) - 1}")

    matrix = np.zeros((len(library), d), dtype=np.float32)
    missing = 0
    for i, smi in enumerate(library.smiles):
        key: str | int = i if index_keyed else smi
        vec = by_key.get(key)
        if vec is None:
            if strict:
                raise MissingEmbedding(f"{path}: no embedding for record {i} ({smi!r})")
            missing += 1
        else:
            matrix[i] = vec
    return matrix, missing


def _is_int(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True
