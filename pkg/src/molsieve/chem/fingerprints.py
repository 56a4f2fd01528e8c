"""Hashed circular (Morgan) and atom-pair fingerprints, plus Dice similarity.

Identifiers are 64-bit BLAKE2b digests with a constant key, computed over
little-endian packed tuples, so fingerprints are bit-identical across runs,
platforms, and endianness. Bit-level compatibility with any external
toolkit is a non-goal.

Packing convention: bit ``i`` of a fingerprint lives in byte ``i // 8`` at
bit position ``i % 8`` (LSB first), matching
``numpy.unpackbits(..., bitorder="little")``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from hashlib import blake2b
from typing import Iterable, Sequence

import numpy as np

from molsieve.chem.smiles import MolGraph
from molsieve.chem.topology import cycle_atoms, pair_distances
from molsieve.errors import TooFewItems, WidthMismatch

_HASH_KEY = b"molsieve.fp.v1"


def hash64(payload: bytes) -> int:
    """Keyed 64-bit BLAKE2b digest as an unsigned integer."""
    return int.from_bytes(blake2b(payload, digest_size=8, key=_HASH_KEY).digest(), "little")


def _hash_ints(tag: bytes, values: Iterable[int]) -> int:
    vals = list(values)
    return hash64(tag + struct.pack(f"<{len(vals)}Q", *vals))


def atom_invariant(graph: MolGraph, index: int, in_cycle: bool) -> int:
    """Radius-0 identifier of one atom.

    Hashes (element, degree, formal charge, explicit/implicit H count,
    aromatic flag, cycle membership).
    """
    atom = graph.atoms[index]
    element = atom.element.encode("ascii")
    payload = (
        b"A"
        + struct.pack("<B", len(element))
        + element
        + struct.pack("<iii??", atom.degree, atom.formal_charge, atom.explicit_h, atom.aromatic, in_cycle)
    )
    return hash64(payload)


def _check_width(width: int, minimum: int = 8) -> None:
    if width < minimum or width & (width - 1):
        raise ValueError(f"width must be a power of two >= {minimum}, got {width}")


@dataclass(frozen=True)
class Fingerprint:
    """Fixed-width binary fingerprint with LSB-first packed bits."""

    bits: bytes
    width: int
    kind: str
    radius_params: tuple[int, int]

    @property
    def popcount(self) -> int:
        return int.from_bytes(self.bits, "little").bit_count()

    def indices(self) -> tuple[int, ...]:
        """Sorted positions of the set bits."""
        value = int.from_bytes(self.bits, "little")
        out = []
        while value:
            low = value & -value
            out.append(low.bit_length() - 1)
            value ^= low
        return tuple(out)

    def to_hex(self) -> str:
        return self.bits.hex()

    def packed(self) -> np.ndarray:
        return np.frombuffer(self.bits, dtype=np.uint8)


def _fold(identifiers: Iterable[int], width: int, kind: str, radius_params: tuple[int, int]) -> Fingerprint:
    packed = bytearray(width // 8)
    for ident in identifiers:
        bit = ident % width
        packed[bit >> 3] |= 1 << (bit & 7)
    return Fingerprint(bits=bytes(packed), width=width, kind=kind, radius_params=radius_params)


def morgan_identifiers(graph: MolGraph, radius: int) -> set[int]:
    """All environment identifiers produced at radii 0..radius.

    Identical identifiers arising at the same or different radii collapse;
    the fold is a plain set-membership fingerprint.
    """
    in_cycle = cycle_atoms(graph)
    current = [atom_invariant(graph, i, in_cycle[i]) for i in range(len(graph))]
    seen: set[int] = set(current)
    for _ in range(radius):
        updated = []
        for i in range(len(graph)):
            neighborhood = sorted((int(order), current[j]) for j, order in graph.adjacency[i])
            flat = [current[i]]
            for order, ident in neighborhood:
                flat.extend((order, ident))
            updated.append(_hash_ints(b"M", flat))
        current = updated
        seen.update(current)
    return seen


def morgan_fingerprint(graph: MolGraph, radius: int = 3, width: int = 2048) -> Fingerprint:
    """ECFP-style circular fingerprint over environments of radius 0..radius."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    _check_width(width, minimum=64)
    return _fold(morgan_identifiers(graph, radius), width, "morgan", (0, radius))


def atom_pair_identifiers(graph: MolGraph, min_radius: int, max_radius: int) -> set[int]:
    in_cycle = cycle_atoms(graph)
    invariants = [atom_invariant(graph, i, in_cycle[i]) for i in range(len(graph))]
    identifiers: set[int] = set()
    for i, j, d in pair_distances(graph, max_radius):
        if d < min_radius:
            continue
        lo, hi = sorted((invariants[i], invariants[j]))
        identifiers.add(_hash_ints(b"P", (lo, hi, d)))
    return identifiers


def atom_pair_fingerprint(
    graph: MolGraph, min_radius: int = 1, max_radius: int = 3, width: int = 2048
) -> Fingerprint:
    """Atom-pair fingerprint over (invariant, invariant, distance) triples."""
    if not 1 <= min_radius <= max_radius:
        raise ValueError("need 1 <= min_radius <= max_radius")
    _check_width(width)
    return _fold(
        atom_pair_identifiers(graph, min_radius, max_radius), width, "atom_pair", (min_radius, max_radius)
    )


@dataclass(frozen=True)
class FingerprintSpec:
    """Configuration of one fingerprint family, usable as a dict key."""

    kind: str = "atom_pair"  # "atom_pair" | "morgan"
    width: int = 2048
    radius: int = 3  # morgan only
    min_radius: int = 1  # atom pair only
    max_radius: int = 3  # atom pair only

    def __post_init__(self) -> None:
        if self.kind not in ("atom_pair", "morgan"):
            raise ValueError(f"unknown fingerprint kind {self.kind!r}")

    def compute(self, graph: MolGraph) -> Fingerprint:
        if self.kind == "morgan":
            return morgan_fingerprint(graph, self.radius, self.width)
        return atom_pair_fingerprint(graph, self.min_radius, self.max_radius, self.width)


def dice_similarity(a: Fingerprint, b: Fingerprint) -> float:
    """2|a i b| / (|a|+|b|); defined as 1.0 when both are all-zero."""
    if a.width != b.width:
        raise WidthMismatch(f"fingerprint widths differ: {a.width} vs {b.width}")
    pa, pb = a.popcount, b.popcount
    if pa == 0 and pb == 0:
        return 1.0
    inter = (int.from_bytes(a.bits, "little") & int.from_bytes(b.bits, "little")).bit_count()
    return 2.0 * inter / (pa + pb)


def _packed_matrix(fps: Sequence[Fingerprint]) -> np.ndarray:
    width = fps[0].width
    kind = fps[0].kind
    for fp in fps:
        if fp.width != width:
            raise WidthMismatch(f"fingerprint widths differ: {width} vs {fp.width}")
        if fp.kind != kind:
            raise WidthMismatch(f"fingerprint kinds differ: {kind} vs {fp.kind}")
    return np.stack([fp.packed() for fp in fps])


def mean_pairwise_dice(
    fps: Sequence[Fingerprint],
    max_pairs: int | None = None,
    seed: int = 0,
) -> float:
    """Arithmetic mean of Dice similarity over unordered pairs.

    With `max_pairs` set and fewer than the total number of pairs, that many
    distinct pairs are sampled uniformly without replacement from the seeded
    generator; otherwise every pair is visited.
    """
    n = len(fps)
    if n < 2:
        raise TooFewItems("mean_pairwise_dice needs at least two fingerprints")
    mat = _packed_matrix(fps)
    pops = np.bitwise_count(mat).sum(axis=1).astype(np.int64)

    total_pairs = n * (n - 1) // 2
    if max_pairs is not None and max_pairs < total_pairs:
        rng = np.random.default_rng(seed)
        chosen: set[tuple[int, int]] = set()
        while len(chosen) < max_pairs:
            draw = rng.integers(0, n, size=2 * (max_pairs - len(chosen)) + 8)
            for k in range(0, len(draw) - 1, 2):
                i, j = int(draw[k]), int(draw[k + 1])
                if i == j:
                    continue
                chosen.add((i, j) if i < j else (j, i))
                if len(chosen) == max_pairs:
                    break
        acc = 0.0
        for i, j in sorted(chosen):
            denom = pops[i] + pops[j]
            if denom == 0:
                acc += 1.0
            else:
                inter = int(np.bitwise_count(mat[i] & mat[j]).sum())
                acc += 2.0 * inter / denom
        return acc / max_pairs

    acc = 0.0
    for i in range(n - 1):
        inter = np.bitwise_count(mat[i] & mat[i + 1 :]).sum(axis=1).astype(np.int64)
        denom = pops[i] + pops[i + 1 :]
        row = np.where(denom == 0, 1.0, 2.0 * inter / np.maximum(denom, 1))
        acc += float(row.sum())
    return acc / total_pairs
