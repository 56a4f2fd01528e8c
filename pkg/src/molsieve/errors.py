"""Exception hierarchy shared across the package.

Every error raised on a documented contract path derives from
:class:`MolsieveError`, so callers (and the CLI exit-code mapping) can
distinguish expected failures from bugs.
"""

from __future__ import annotations


class MolsieveError(Exception):
    """Base class for all documented package errors."""


# --- SMILES parsing ---------------------------------------------------------

class SmilesError(MolsieveError):
    """Base class for SMILES parse failures.

    Carries the offending string and the character position where the
    problem was detected.
    """

    def __init__(self, message: str, smiles: str = "", position: int = -1) -> None:
        self.smiles = smiles
        self.position = position
        if position >= 0:
            message = f"{message} (at position {position} in {smiles!r})"
        super().__init__(message)


class UnmatchedRingClosure(SmilesError):
    """Ring-closure digit misuse: opened but never closed, closed onto the
    opening atom, or duplicating an existing bond."""


class UnbalancedParenthesis(SmilesError):
    """Branch parenthesis closed without an opener, or left open at end."""


class UnknownSymbol(SmilesError):
    """Character is not a supported element symbol or grammar token, or a
    known token appears in a position the grammar does not allow."""


class InvalidCharge(SmilesError):
    """Malformed charge specification inside a bracket atom."""


# --- Fingerprints -----------------------------------------------------------

class WidthMismatch(MolsieveError):
    """Fingerprints of different widths cannot be compared."""


class TooFewItems(MolsieveError):
    """Pairwise statistics need at least two fingerprints."""


# --- Library store ----------------------------------------------------------

class LibraryError(MolsieveError):
    """Base class for compound-library ingest and lookup errors."""


class MissingColumn(LibraryError):
    """A declared column is absent from the file header."""


class EmptyLibrary(LibraryError):
    """No usable rows survived ingest."""


class MalformedRow(LibraryError):
    """Strict mode: a row failed SMILES parsing or score conversion."""


class IndexOutOfRange(LibraryError):
    """Oracle lookup with an index outside 0..N-1."""


class KTooLarge(LibraryError):
    """topk_truth(k) requested with k exceeding the library size."""


class DimensionMismatch(MolsieveError):
    """Vector or matrix dimensions are inconsistent."""


class MissingEmbedding(LibraryError):
    """Strict embedding ingest: a library record has no embedding row."""


class EmbeddingFormatError(LibraryError):
    """Embedding file container is corrupt (bad magic, version, or size)."""


# --- Surrogates -------------------------------------------------------------

class SurrogateError(MolsieveError):
    """Base class for surrogate-model errors."""


class TooFewSamples(SurrogateError):
    """fit() needs at least five labeled rows."""


class NonFiniteTarget(SurrogateError):
    """fit() received NaN or infinite target values."""


class Untrained(SurrogateError):
    """predict() called before fit()."""


class TooFewMembers(SurrogateError):
    """Ensemble variance needs at least two member predictions."""


# --- Acquisition / campaign -------------------------------------------------

class PoolExhausted(MolsieveError):
    """Fewer unacquired candidates than the requested batch size."""


class ConfigInvalid(MolsieveError):
    """A configuration value violates its documented constraint."""


class DivisionByZero(MolsieveError):
    """Enrichment factor requested at zero explored fraction."""
