"""Parser tests: grammar corpus, error taxonomy, structural invariants."""

import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molsieve.chem.smiles import BondOrder, MolGraph, parse_smiles
from molsieve.errors import (
    InvalidCharge,
    SmilesError,
    UnbalancedParenthesis,
    UnknownSymbol,
    UnmatchedRingClosure,
)

from corpus import GRAMMAR_TABLE


@pytest.mark.parametrize("smiles,n_atoms,n_bonds,n_components", GRAMMAR_TABLE)
def test_grammar_corpus_counts(smiles, n_atoms, n_bonds, n_components):
    graph = parse_smiles(smiles)
    assert len(graph.atoms) == n_atoms
    assert len(graph.bonds) == n_bonds
    assert graph.n_components == n_components


def test_ethanol():
    graph = parse_smiles("CCO")
    assert [a.element for a in graph.atoms] == ["C", "C", "O"]
    assert all(b.order == BondOrder.SINGLE for b in graph.bonds)
    assert graph.n_components == 1


def test_benzene_all_aromatic():
    graph = parse_smiles("c1ccccc1")
    assert all(a.element == "C" and a.aromatic for a in graph.atoms)
    assert all(b.order == BondOrder.AROMATIC for b in graph.bonds)
    # ring closure: every atom has exactly two neighbors
    assert all(a.degree == 2 for a in graph.atoms)


def test_carboxylate_example():
    graph = parse_smiles("C1CC1C(=O)[O-]")
    assert len(graph.atoms) == 6
    orders = sorted(int(b.order) for b in graph.bonds)
    assert orders == [1, 1, 1, 1, 1, 2]
    charges = [a.formal_charge for a in graph.atoms]
    assert charges.count(-1) == 1 and charges.count(0) == 5


def test_implicit_hydrogens_standard_valence():
    graph = parse_smiles("CCO")
    assert [a.explicit_h for a in graph.atoms] == [3, 2, 1]
    benzene = parse_smiles("c1ccccc1")
    assert [a.explicit_h for a in benzene.atoms] == [1] * 6
    pyridine = parse_smiles("c1ccncc1")
    n_atom = next(a for a in pyridine.atoms if a.element == "N")
    assert n_atom.explicit_h == 0
    nitrile = parse_smiles("CC#N")
    assert [a.explicit_h for a in nitrile.atoms] == [3, 0, 0]


def test_bracket_h_and_charge():
    graph = parse_smiles("[NH4+]")
    atom = graph.atoms[0]
    assert (atom.element, atom.explicit_h, atom.formal_charge) == ("N", 4, 1)
    assert parse_smiles("[Fe+3]").atoms[0].formal_charge == 3
    assert parse_smiles("[O--]").atoms[0].formal_charge == -2
    assert parse_smiles("[se]").atoms[0].aromatic


def test_isotope_and_stereo_discarded():
    assert parse_smiles("[13CH4]").atoms == parse_smiles("[CH4]").atoms
    assert parse_smiles("C/C=C/C").bonds == parse_smiles("CC=CC").bonds
    assert parse_smiles("[C@@H](C)O").atoms == parse_smiles("[CH](C)O").atoms


def test_degree_equals_incident_bonds():
    for smiles, *_ in GRAMMAR_TABLE:
        graph = parse_smiles(smiles)
        incident = [0] * len(graph.atoms)
        for bond in graph.bonds:
            incident[bond.a] += 1
            incident[bond.b] += 1
        assert [a.degree for a in graph.atoms] == incident


def test_simple_graph_invariants():
    for smiles, *_ in GRAMMAR_TABLE:
        graph = parse_smiles(smiles)
        seen = set()
        for bond in graph.bonds:
            assert bond.a != bond.b
            key = (min(bond.a, bond.b), max(bond.a, bond.b))
            assert key not in seen
            seen.add(key)
            assert 0 <= bond.a < len(graph.atoms)
            assert 0 <= bond.b < len(graph.atoms)


def test_deterministic():
    a = parse_smiles("CC(=O)Oc1ccccc1C(=O)O")
    b = parse_smiles("CC(=O)Oc1ccccc1C(=O)O")
    assert a == b


@pytest.mark.parametrize(
    "smiles,error",
    [
        ("C1CC", UnmatchedRingClosure),
        ("C11", UnmatchedRingClosure),
        ("C1C1", UnmatchedRingClosure),
        ("1CC", UnmatchedRingClosure),
        ("C(C", UnbalancedParenthesis),
        ("CC)", UnbalancedParenthesis),
        ("C(", UnbalancedParenthesis),
        ("(CC)", UnbalancedParenthesis),
        ("CQ", UnknownSymbol),
        ("CxC", UnknownSymbol),
        ("C==C", UnknownSymbol),
        ("C=", UnknownSymbol),
        ("=C", UnknownSymbol),
        ("C%1C", UnknownSymbol),
        ("[C", UnknownSymbol),
        ("[]", UnknownSymbol),
        ("C?", UnknownSymbol),
        ("", UnknownSymbol),
        ("[C+-]", InvalidCharge),
        ("[C+2-]", InvalidCharge),
        ("[C:x]", InvalidCharge),
    ],
)
def test_error_taxonomy(smiles, error):
    with pytest.raises(error):
        parse_smiles(smiles)


@settings(max_examples=400, deadline=None)
@given(st.text(alphabet=string.printable, max_size=40))
def test_fuzz_no_crashes(text):
    """Arbitrary ASCII either parses or raises a documented error."""
    try:
        graph = parse_smiles(text)
    except SmilesError:
        return
    assert isinstance(graph, MolGraph)


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="CNOSFcnos123()[]=#-+.%/\\@", max_size=30))
def test_fuzz_grammarish_no_crashes(text):
    try:
        graph = parse_smiles(text)
    except SmilesError:
        return
    for bond in graph.bonds:
        assert bond.a != bond.b
