import random
from collections import Counter

import numpy as np
import pytest

from conftest import random_permutation_relabel, random_valid_graph
from molbbo.graph import MolecularGraph, parse_smiles
from molbbo.shingles import (CapacityError, ShingleDictionary, ShingleKey,
                             code_to_text, encode, extract_shingles,
                             sparse_encode, text_to_code)


def test_methane_single_shingle():
    counts = extract_shingles(parse_smiles("C"))
    assert len(counts) == 1
    ((key, n),) = counts.items()
    assert n == 1
    assert code_to_text(key.to_code()) == "C"


def test_ethanol_shingles():
    texts = Counter()
    for key, n in extract_shingles(parse_smiles("CCO")).items():
        texts[code_to_text(key.to_code())] = n
    assert texts == Counter({"C|1:C": 1, "C|1:C,1:O": 1, "O|1:C": 1})


def test_double_bond_in_text_form():
    texts = {code_to_text(k.to_code())
             for k in extract_shingles(parse_smiles("CC=O"))}
    assert "C|1:C,2:O" in texts
    assert "O|2:C" in texts


def test_shingle_count_equals_heavy_atoms():
    rng = random.Random(5)
    for _ in range(200):
        types, adj = random_valid_graph(rng)
        g = MolecularGraph(types, adj, 9)
        counts = extract_shingles(g)
        assert sum(counts.values()) == g.n_atoms


def test_text_code_roundtrip():
    rng = random.Random(6)
    for _ in range(100):
        types, adj = random_valid_graph(rng)
        for key in extract_shingles(MolecularGraph(types, adj, 9)):
            code = key.to_code()
            assert text_to_code(code_to_text(code)) == code
            assert ShingleKey.from_code(code) == key


def test_shingles_are_relabeling_invariant():
    rng = random.Random(8)
    for _ in range(100):
        types, adj = random_valid_graph(rng)
        base = extract_shingles(MolecularGraph(types, adj, 9))
        t2, a2 = random_permutation_relabel(rng, types, adj)
        assert extract_shingles(MolecularGraph(t2, a2, 9)) == base


def test_dictionary_first_seen_indexing():
    dct = ShingleDictionary(capacity=10)
    g = parse_smiles("CCO")
    indices, counts, unseen = sparse_encode(g, dct)
    assert unseen == 0
    assert list(indices) == [0, 1, 2]  # first-seen dense order
    assert len(dct) == 3
    # same molecule again: no growth, same indices
    indices2, _, _ = sparse_encode(g, dct)
    assert list(indices2) == [0, 1, 2]
    assert len(dct) == 3


def test_frozen_encode_drops_unseen():
    dct = ShingleDictionary(capacity=10)
    sparse_encode(parse_smiles("CC"), dct)
    known = len(dct)
    indices, counts, unseen = sparse_encode(parse_smiles("CCO"), dct, frozen=True)
    assert len(dct) == known
    assert unseen > 0
    assert sum(counts) + unseen == 3


def test_capacity_error():
    dct = ShingleDictionary(capacity=2)
    with pytest.raises(CapacityError):
        sparse_encode(parse_smiles("CCO"), dct)


def test_dense_vector():
    dct = ShingleDictionary(capacity=16)
    vec = encode(parse_smiles("CCO"), dct)
    assert vec.shape == (16,)
    assert vec.dtype == np.int64
    assert vec.sum() == 3
    assert list(np.nonzero(vec)[0]) == [0, 1, 2]


def test_dictionary_serialization_roundtrip():
    dct = ShingleDictionary(capacity=32)
    for smiles in ("CCO", "CC=O", "C1CC1N", "FC(F)O"):
        sparse_encode(parse_smiles(smiles), dct)
    strings = dct.to_strings()
    back = ShingleDictionary.from_strings(strings, capacity=32)
    assert len(back) == len(dct)
    assert list(back.codes()) == list(dct.codes())
    g = parse_smiles("CC=O")
    i1, c1, _ = sparse_encode(g, dct, frozen=True)
    i2, c2, _ = sparse_encode(g, back, frozen=True)
    assert list(i1) == list(i2) and list(c1) == list(c2)
