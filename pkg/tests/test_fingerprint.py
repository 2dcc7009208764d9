import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from macrosim import testlib
from macrosim.fingerprint import (
    HISTOGRAM_BINS,
    EmptyMolecule,
    Fingerprint,
    FingerprintParams,
    LibraryError,
    ParamMismatch,
    _hash,
    ecfp,
    fingerprint_smiles,
    ring_atoms,
    similarity_stats,
    tanimoto,
    tanimoto_distance,
)
from macrosim.smiles import MolecularGraph, parse_smiles

ALPHA = testlib.MONOMER_LIBRARY["a1-4"]
BETA = testlib.MONOMER_LIBRARY["b1-4"]


def test_params_validation():
    with pytest.raises(ValueError):
        FingerprintParams(n_bits=100)
    with pytest.raises(ValueError):
        FingerprintParams(n_bits=4)
    with pytest.raises(ValueError):
        FingerprintParams(radius=11)


def test_ethanol_environment_count():
    # 3 atoms with distinct radius-0 invariants, 3 distinct radius-1 environments
    fp = fingerprint_smiles("CCO", FingerprintParams(radius=1, n_bits=128))
    assert 3 <= fp.popcount() <= 6
    wide = fingerprint_smiles("CCO", FingerprintParams(radius=1, n_bits=2**20))
    assert wide.popcount() == 6


def test_radius_two_dedup_on_ethanol():
    # the central carbon already covers the whole molecule at radius 1, so the
    # three radius-2 environments are all duplicates of it
    wide = fingerprint_smiles("CCO", FingerprintParams(radius=2, n_bits=2**20))
    assert wide.popcount() == 6


@pytest.mark.parametrize("radius", [0, 1, 3, 10])
def test_single_atom(radius):
    assert fingerprint_smiles("C", FingerprintParams(radius=radius)).popcount() == 1


def test_atom_order_irrelevant():
    assert fingerprint_smiles("OCC") == fingerprint_smiles("CCO")


def test_chirality_survives_rewriting():
    p = FingerprintParams()
    l_ala = [fingerprint_smiles(s, p) for s in ("N[C@@H](C)C(=O)O", "C[C@H](N)C(=O)O", "OC(=O)[C@@H](N)C")]
    d_ala = fingerprint_smiles("N[C@H](C)C(=O)O", p)
    assert l_ala[0] == l_ala[1] == l_ala[2]
    assert d_ala != l_ala[0]
    plain = FingerprintParams(use_stereo=False)
    assert fingerprint_smiles("N[C@H](C)C(=O)O", plain) == fingerprint_smiles("N[C@@H](C)C(=O)O", plain)


def test_alpha_beta_bonds():
    assert fingerprint_smiles(ALPHA) != fingerprint_smiles(BETA)
    plain = FingerprintParams(radius=3, n_bits=16, use_stereo=False)
    assert fingerprint_smiles(ALPHA, plain) == fingerprint_smiles(BETA, plain)


def test_unresolved_center_is_not_stereo_distinct():
    # two identical substituents: the tag cannot matter
    a = fingerprint_smiles("C[C@H](C)O")
    b = fingerprint_smiles("C[C@@H](C)O")
    assert a == b


def test_empty_molecule():
    with pytest.raises(EmptyMolecule):
        ecfp(MolecularGraph((), ()))


def test_ring_atoms():
    g = parse_smiles("C1CC1CCO")
    assert ring_atoms(g) == [True, True, True, False, False, False]
    assert ring_atoms(parse_smiles("C1CC1C2CC2")) == [True] * 3 + [True] * 3
    assert not any(ring_atoms(parse_smiles("CC(C)C")))


def _fp(bits, n=128):
    return Fingerprint.from_bits(bits, FingerprintParams(n_bits=n))


def test_tanimoto_examples():
    a, b = _fp([0, 1, 2]), _fp([1, 2, 3])
    assert tanimoto(a, a) == 1.0
    assert tanimoto(a, b) == 0.5
    assert tanimoto(_fp([0]), _fp([1])) == 0.0
    assert tanimoto_distance(a, a) == 0.0
    assert tanimoto_distance(_fp([0]), _fp([1])) == 1.0
    assert tanimoto_distance(a, b) == 0.5
    assert tanimoto(_fp([]), _fp([])) == 1.0


def test_tanimoto_param_mismatch():
    with pytest.raises(ParamMismatch):
        tanimoto(_fp([1]), _fp([1], 64))


@given(st.sets(st.integers(0, 127)), st.sets(st.integers(0, 127)))
def test_tanimoto_properties(x, y):
    a, b = _fp(x), _fp(y)
    t = tanimoto(a, b)
    assert t == tanimoto(b, a)
    assert 0.0 <= t <= 1.0
    assert (t == 1.0) == (x == y)
    # set oracle
    if x | y:
        assert t == len(x & y) / len(x | y)


@given(st.sets(st.integers(0, 127)))
def test_hex_round_trip(bits):
    fp = _fp(bits)
    text = fp.to_hex()
    assert len(text) == 32 and text == text.lower()
    assert Fingerprint.from_hex(text, fp.params) == fp


def test_hex_bit_zero_is_most_significant():
    assert _fp([0], 8).to_hex() == "80"
    assert _fp([7], 8).to_hex() == "01"


def test_to_array():
    arr = _fp([3, 5], 8).to_array()
    assert arr.tolist() == [0, 0, 0, 1, 0, 1, 0, 0]


def test_stats_identical_pair():
    out = similarity_stats(["CCO", "CCO"], [FingerprintParams()])
    s = out[FingerprintParams()]
    assert s.mean == 1.0 and s.std == 0.0 and s.n_pairs == 1
    assert len(s.counts) == HISTOGRAM_BINS and s.counts[-1] == 1
    assert s.edges[0] == 0.0 and s.edges[-1] == 1.0


def test_stats_single_atoms_radius_zero():
    p = FingerprintParams(radius=0)
    # the two invariants must not fold onto one bit for the 0.0 expectation to hold
    c, o = fingerprint_smiles("C", p), fingerprint_smiles("O", p)
    assert c.on_bits() != o.on_bits()
    assert similarity_stats({"c": "C", "o": "O"}, [p])[p].mean == 0.0


def test_stats_names_bad_entry():
    with pytest.raises(LibraryError) as exc:
        similarity_stats({"good": "CCO", "bad": "C(("}, [FingerprintParams()])
    assert exc.value.key == "bad"


def test_stats_needs_two():
    with pytest.raises(ValueError):
        similarity_stats(["C"], [FingerprintParams()])


def test_hash_is_stable():
    # pinned so that fingerprints stay identical across releases
    assert _hash(0, 6, 1, 3, 0, 0, 0) == _hash(0, 6, 1, 3, 0, 0, 0)
    assert _hash(1, 2) != _hash(12)


@given(st.integers(0, 10**6))
def test_permutation_invariance(seed):
    text = testlib.random_molecule_smiles(seed)
    g = parse_smiles(text)
    shuffled = testlib.shuffle_smiles(g, seed + 1)
    for p in (FingerprintParams(), FingerprintParams(2, 1024, use_stereo=False)):
        assert fingerprint_smiles(shuffled, p) == ecfp(g, p)


def test_shuffle_keeps_handedness():
    g = parse_smiles("C[C@H](O)N")
    mirror = ecfp(parse_smiles("C[C@@H](O)N"))
    for seed in range(20):
        again = ecfp(parse_smiles(testlib.shuffle_smiles(g, seed)))
        assert again == ecfp(g) and again != mirror


def test_folding_on_monomer_library():
    lib = {k: v for k, v in testlib.MONOMER_LIBRARY.items()}
    grid = [FingerprintParams(3, 64), FingerprintParams(3, 128)]
    stats = similarity_stats(lib, grid)
    assert stats[grid[0]].mean >= stats[grid[1]].mean


def test_nonempty_molecules_set_bits():
    for smi in testlib.MONOMER_LIBRARY.values():
        assert fingerprint_smiles(smi).popcount() >= 1
        arr = fingerprint_smiles(smi).to_array()
        assert arr.dtype == np.float64
