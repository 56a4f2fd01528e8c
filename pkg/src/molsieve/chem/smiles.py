"""SMILES parsing into an immutable molecular graph.

Supported grammar subset (chosen to cover vendor-catalog SMILES):

* organic-subset atoms ``B C N O P S F Cl Br I`` and their aromatic
  lowercase forms ``b c n o p s``;
* bracket atoms ``[<isotope><symbol><chiral><Hcount><charge><:class>]``
  with any alphabetic element symbol (lowercase symbol = aromatic);
* ring closures ``1``-``9`` and two-digit ``%nn``;
* bond symbols ``- = # :`` plus directional ``/ \\`` (read as single);
* branches via parentheses and ``.``-separated components.

Stereo markers (``@``, ``/``, ``\\``), isotopes, and atom-class tags are
parsed and discarded. No aromaticity perception or kekulization happens:
an atom is aromatic exactly when spelt lowercase, and an unannotated bond
between two aromatic atoms is recorded as aromatic. Implicit hydrogens are
never materialized as atoms; for organic-subset atoms the implied count is
derived from the standard valences and stored on the atom record.

Failure on any input is one of the four documented errors
(:class:`UnmatchedRingClosure`, :class:`UnbalancedParenthesis`,
:class:`UnknownSymbol`, :class:`InvalidCharge`); grammar-position misuse of
an otherwise-known token (dangling bond, doubled bond symbol, misplaced
dot) reports as :class:`UnknownSymbol`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from molsieve.errors import (
    InvalidCharge,
    UnbalancedParenthesis,
    UnknownSymbol,
    UnmatchedRingClosure,
)

ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
AROMATIC_ORGANIC = frozenset({"b", "c", "n", "o", "p", "s"})

# Standard valences used for the implicit-hydrogen count of bare
# organic-subset atoms (smallest valence >= bond-order sum wins).
_VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}


class BondOrder(enum.IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence_weight(self) -> float:
        """Contribution to the bond-order sum for implicit-H accounting."""
        return 1.5 if self is BondOrder.AROMATIC else float(self.value)


_BOND_CHARS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}


@dataclass(frozen=True)
class AtomRecord:
    """One heavy (or explicitly bracketed) atom of a parsed molecule."""

    element: str
    aromatic: bool
    formal_charge: int
    explicit_h: int
    degree: int


@dataclass(frozen=True)
class BondRecord:
    """Undirected bond between atom indices `a` and `b` (a < b)."""

    a: int
    b: int
    order: BondOrder


@dataclass(frozen=True)
class MolGraph:
    """Simple undirected molecular graph. Immutable and thread-safe."""

    atoms: tuple[AtomRecord, ...]
    bonds: tuple[BondRecord, ...]
    n_components: int
    # adjacency[i] lists (neighbor index, bond order), in bond insertion order
    adjacency: tuple[tuple[tuple[int, BondOrder], ...], ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.atoms)

    def neighbors(self, i: int) -> tuple[tuple[int, BondOrder], ...]:
        return self.adjacency[i]


@dataclass
class _Atom:
    """Mutable atom while parsing."""

    element: str
    aromatic: bool
    formal_charge: int = 0
    bracket_h: int | None = None  # None = organic subset, derive implicit H


class _Parser:
    def __init__(self, smiles: str) -> None:
        self.s = smiles
        self.pos = 0
        self.atoms: list[_Atom] = []
        self.bonds: dict[tuple[int, int], BondOrder] = {}
        self.prev: int | None = None
        self.pending: BondOrder | None = None
        self.branch_stack: list[int | None] = []
        # ring digit -> (atom index, bond order annotated at the opening)
        self.open_rings: dict[int, tuple[int, BondOrder | None]] = {}

    # -- character access ---------------------------------------------------

    def _peek(self) -> str | None:
        return self.s[self.pos] if self.pos < len(self.s) else None

    def _take(self) -> str:
        ch = self.s[self.pos]
        self.pos += 1
        return ch

    def _fail(self, exc: type, message: str, pos: int | None = None):
        raise exc(message, self.s, self.pos if pos is None else pos)

    # -- main loop ------------------------------------------------------------

    def parse(self) -> MolGraph:
        if not self.s:
            self._fail(UnknownSymbol, "empty SMILES string", 0)
        while (ch := self._peek()) is not None:
            if ch in _BOND_CHARS:
                self._read_bond_symbol()
            elif ch == "(":
                self._open_branch()
            elif ch == ")":
                self._close_branch()
            elif ch.isdigit() or ch == "%":
                self._read_ring_closure()
            elif ch == ".":
                self._read_dot()
            elif ch == "[":
                self._read_bracket_atom()
            elif ch.isalpha():
                self._read_organic_atom()
            else:
                self._fail(UnknownSymbol, f"unexpected character {ch!r}")
        if self.open_rings:
            digit = min(self.open_rings)
            self._fail(
                UnmatchedRingClosure,
                f"ring closure {digit} opened but never closed",
                len(self.s) - 1,
            )
        if self.branch_stack:
            self._fail(UnbalancedParenthesis, "unclosed branch parenthesis", len(self.s) - 1)
        if self.pending is not None:
            self._fail(UnknownSymbol, "dangling bond symbol at end of input", len(self.s) - 1)
        return self._finalize()

    # -- token handlers ---------------------------------------------------------

    def _read_bond_symbol(self) -> None:
        pos = self.pos
        ch = self._take()
        if self.prev is None:
            self._fail(UnknownSymbol, f"bond symbol {ch!r} with no preceding atom", pos)
        if self.pending is not None:
            self._fail(UnknownSymbol, f"two consecutive bond symbols at {ch!r}", pos)
        self.pending = _BOND_CHARS[ch]

    def _open_branch(self) -> None:
        pos = self.pos
        self._take()
        if self.prev is None:
            self._fail(UnbalancedParenthesis, "branch opened before any atom", pos)
        if self.pending is not None:
            self._fail(UnknownSymbol, "bond symbol immediately before '('", pos)
        self.branch_stack.append(self.prev)

    def _close_branch(self) -> None:
        pos = self.pos
        self._take()
        if not self.branch_stack:
            self._fail(UnbalancedParenthesis, "')' without matching '('", pos)
        if self.pending is not None:
            self._fail(UnknownSymbol, "dangling bond symbol before ')'", pos)
        self.prev = self.branch_stack.pop()

    def _read_dot(self) -> None:
        pos = self.pos
        self._take()
        if self.pending is not None:
            self._fail(UnknownSymbol, "bond symbol before component separator '.'", pos)
        self.prev = None

    def _read_ring_closure(self) -> None:
        pos = self.pos
        if self._peek() == "%":
            self._take()
            digits = ""
            for _ in range(2):
                ch = self._peek()
                if ch is None or not ch.isdigit():
                    self._fail(UnknownSymbol, "'%' ring closure needs two digits", pos)
                digits += self._take()
            digit = int(digits)
        else:
            digit = int(self._take())
        if self.prev is None:
            self._fail(UnmatchedRingClosure, f"ring closure {digit} before any atom", pos)
        if digit in self.open_rings:
            open_atom, open_order = self.open_rings.pop(digit)
            if open_atom == self.prev:
                self._fail(UnmatchedRingClosure, f"ring closure {digit} bonds an atom to itself", pos)
            # If both ends annotate the closure bond, the opening wins.
            order = open_order or self.pending
            if order is None:
                both_aromatic = self.atoms[open_atom].aromatic and self.atoms[self.prev].aromatic
                order = BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE
            self._add_bond(open_atom, self.prev, order, pos)
        else:
            self.open_rings[digit] = (self.prev, self.pending)
        self.pending = None

    def _read_organic_atom(self) -> None:
        pos = self.pos
        ch = self._take()
        symbol = ch
        nxt = self._peek()
        if ch in ("C", "B") and nxt is not None and ch + nxt in ("Cl", "Br"):
            symbol = ch + self._take()
        if symbol in ORGANIC_SUBSET:
            self._append_atom(_Atom(symbol, aromatic=False), pos)
        elif symbol in AROMATIC_ORGANIC:
            self._append_atom(_Atom(symbol.upper(), aromatic=True), pos)
        else:
            self._fail(UnknownSymbol, f"symbol {symbol!r} is not in the supported organic subset", pos)

    def _read_bracket_atom(self) -> None:
        pos = self.pos
        self._take()  # '['
        # isotope prefix: parsed and discarded
        while (ch := self._peek()) is not None and ch.isdigit():
            self._take()
        ch = self._peek()
        if ch is None or not ch.isalpha():
            self._fail(UnknownSymbol, "expected element symbol inside brackets", self.pos)
        first = self._take()
        symbol = first
        nxt = self._peek()
        # A following lowercase letter always belongs to the symbol; the
        # H-count marker is uppercase, so nothing can be stolen from it.
        if nxt is not None and nxt.islower():
            symbol = first + self._take()
        aromatic = symbol[0].islower()
        element = symbol[0].upper() + symbol[1:]
        atom = _Atom(element, aromatic=aromatic, bracket_h=0)
        charge_seen = False

        while True:
            ch = self._peek()
            if ch is None:
                self._fail(UnknownSymbol, "unterminated bracket atom", pos)
            if ch == "]":
                self._take()
                break
            if ch == "@":
                # chirality marker: parsed and discarded (one or two '@')
                self._take()
                if self._peek() == "@":
                    self._take()
            elif ch == "H":
                self._take()
                count = self._read_int()
                atom.bracket_h = 1 if count is None else count
            elif ch in "+-":
                if charge_seen:
                    self._fail(InvalidCharge, "second charge token in bracket atom", self.pos)
                charge_seen = True
                atom.formal_charge = self._read_charge()
            elif ch == ":":
                # atom-class tag: parsed and discarded
                self._take()
                if self._read_int() is None:
                    self._fail(InvalidCharge, "':' atom class needs digits", self.pos)
            else:
                self._fail(UnknownSymbol, f"unsupported bracket token {ch!r}", self.pos)
        self._append_atom(atom, pos)

    def _read_int(self) -> int | None:
        digits = ""
        while (ch := self._peek()) is not None and ch.isdigit():
            digits += self._take()
        return int(digits) if digits else None

    def _read_charge(self) -> int:
        pos = self.pos
        sign_char = self._take()
        sign = 1 if sign_char == "+" else -1
        count = 1
        explicit = self._read_int()
        if explicit is not None:
            return sign * explicit
        while self._peek() == sign_char:
            self._take()
            count += 1
        if self._peek() in ("+", "-"):
            self._fail(InvalidCharge, "mixed charge signs in bracket atom", pos)
        return sign * count

    # -- graph assembly -----------------------------------------------------------

    def _append_atom(self, atom: _Atom, pos: int) -> None:
        idx = len(self.atoms)
        self.atoms.append(atom)
        if self.prev is not None:
            order = self.pending
            if order is None:
                both_aromatic = self.atoms[self.prev].aromatic and atom.aromatic
                order = BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE
            self._add_bond(self.prev, idx, order, pos)
        self.pending = None
        self.prev = idx

    def _add_bond(self, a: int, b: int, order: BondOrder, pos: int) -> None:
        key = (a, b) if a < b else (b, a)
        if key in self.bonds:
            self._fail(UnmatchedRingClosure, f"duplicate bond between atoms {a} and {b}", pos)
        self.bonds[key] = order

    def _finalize(self) -> MolGraph:
        n = len(self.atoms)
        adjacency: list[list[tuple[int, BondOrder]]] = [[] for _ in range(n)]
        bond_records = []
        for (a, b), order in self.bonds.items():
            bond_records.append(BondRecord(a, b, order))
            adjacency[a].append((b, order))
            adjacency[b].append((a, order))

        records = []
        for i, atom in enumerate(self.atoms):
            if atom.bracket_h is None:
                h = _implicit_h(atom.element, [order for _, order in adjacency[i]])
            else:
                h = atom.bracket_h
            records.append(
                AtomRecord(
                    element=atom.element,
                    aromatic=atom.aromatic,
                    formal_charge=atom.formal_charge,
                    explicit_h=h,
                    degree=len(adjacency[i]),
                )
            )

        return MolGraph(
            atoms=tuple(records),
            bonds=tuple(bond_records),
            n_components=_count_components(n, self.bonds),
            adjacency=tuple(tuple(nbrs) for nbrs in adjacency),
        )


def _implicit_h(element: str, orders: list[BondOrder]) -> int:
    valences = _VALENCES.get(element)
    if valences is None:
        return 0
    bond_sum = math.ceil(sum(o.valence_weight for o in orders))
    for valence in valences:
        if valence >= bond_sum:
            return valence - bond_sum
    return 0


def _count_components(n: int, bonds: dict[tuple[int, int], BondOrder]) -> int:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    components = n
    for a, b in bonds:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            components -= 1
    return components


def parse_smiles(smiles: str) -> MolGraph:
    """Parse `smiles` into a :class:`MolGraph`.

    Raises one of :class:`UnmatchedRingClosure`, :class:`UnbalancedParenthesis`,
    :class:`UnknownSymbol`, or :class:`InvalidCharge` on invalid input; never
    anything else for ASCII strings.
    """
    if not smiles.isascii():
        raise UnknownSymbol("SMILES must be ASCII", smiles, 0)
    return _Parser(smiles).parse()
