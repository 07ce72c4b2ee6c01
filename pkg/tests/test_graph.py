import random

import pytest

from conftest import oracle_validity, random_permutation_relabel, random_valid_graph
from molbbo.graph import (ChemistryError, GraphError, MolecularGraph,
                          SmilesSyntaxError, canonical_key, parse_smiles,
                          write_smiles)


def test_single_atoms():
    for smiles, symbol, valence_h in (("C", "C", 4), ("N", "N", 3),
                                      ("O", "O", 2), ("F", "F", 1)):
        g = parse_smiles(smiles)
        assert g.n_atoms == 1
        assert g.atom_symbols == [symbol]
        assert g.free_valence(0) == valence_h
        assert write_smiles(g) == smiles


def test_bonds_and_branches():
    g = parse_smiles("CC(=O)N")
    assert g.n_atoms == 4
    assert sorted(g.atom_symbols) == ["C", "C", "N", "O"]
    orders = sorted(order for _, _, order in g.bonds())
    assert orders == [1, 1, 2]


def test_ring_closure():
    g = parse_smiles("C1CC1")
    assert g.n_atoms == 3
    assert len(g.bonds()) == 3
    assert all(order == 1 for _, _, order in g.bonds())


def test_ring_bond_order_on_closure_digit():
    g = parse_smiles("C1CC=1")
    orders = sorted(order for _, _, order in g.bonds())
    assert orders == [1, 1, 2]


def test_syntax_errors():
    for bad in ("", "C(", "C)", "C1CC", "CX", "C=", "C#=C", "1CC", "C((C))junk"):
        with pytest.raises(SmilesSyntaxError):
            parse_smiles(bad)


def test_chemistry_errors():
    with pytest.raises(ChemistryError):
        parse_smiles("FF(F)F")  # fluorine valence is 1
    with pytest.raises(ChemistryError):
        parse_smiles("O=C=O=O")  # oxygen valence overflow
    with pytest.raises(ChemistryError):
        parse_smiles("CCCCCCCCCC")  # ten atoms over the nine-atom cap
    with pytest.raises(GraphError):
        parse_smiles("C.C")  # disconnected


def test_roundtrip_random_graphs():
    rng = random.Random(7)
    for _ in range(500):
        types, adj = random_valid_graph(rng)
        g = MolecularGraph(types, adj, 9)
        text = write_smiles(g)
        back = parse_smiles(text)
        assert back.canonical_key() == g.canonical_key()


def test_canonical_key_is_relabeling_invariant():
    rng = random.Random(13)
    for _ in range(300):
        types, adj = random_valid_graph(rng)
        key = MolecularGraph(types, adj, 9).canonical_key()
        for _ in range(3):
            t2, a2 = random_permutation_relabel(rng, types, adj)
            assert MolecularGraph(t2, a2, 9).canonical_key() == key


def test_canonical_key_separates_non_isomorphic():
    pairs = [("CCO", "CCN"), ("CC=O", "CCO"), ("C1CC1", "CCC"),
             ("N=O", "NO"), ("CC(C)C", "CCCC")]
    for a, b in pairs:
        assert canonical_key(parse_smiles(a)) != canonical_key(parse_smiles(b))


def test_parsed_graphs_are_valid():
    rng = random.Random(99)
    for _ in range(200):
        types, adj = random_valid_graph(rng)
        g = MolecularGraph(types, adj, 9)
        assert oracle_validity(g.types, g.adj, 9)


def test_relabel_preserves_structure():
    g = parse_smiles("CC(=O)NO")
    perm = list(range(g.n_atoms))[::-1]
    h = g.relabel(perm)
    assert h.canonical_key() == g.canonical_key()
    assert sorted(h.atom_symbols) == sorted(g.atom_symbols)


def test_invalid_construction_rejected():
    with pytest.raises(GraphError):
        MolecularGraph(b"", b"", 9)
    with pytest.raises(GraphError):
        MolecularGraph(b"\x00\x00", b"\x00\x00\x00\x00", 9)  # disconnected
    with pytest.raises(GraphError):
        MolecularGraph(b"\x03\x03", b"\x00\x02\x02\x00", 9)  # F=F over valence
