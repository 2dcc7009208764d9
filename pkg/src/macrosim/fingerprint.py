"""Circular (Morgan / ECFP-style) fingerprints and Tanimoto similarity."""

from __future__ import annotations

import hashlib
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from macrosim.smiles import (
    IMPLICIT_H,
    BondOrder,
    Chirality,
    MolecularGraph,
    SmilesError,
    implicit_hydrogen_count,
    parse_smiles,
)

__all__ = [
    "FingerprintParams",
    "Fingerprint",
    "EmptyMolecule",
    "ParamMismatch",
    "LibraryError",
    "SimilarityStats",
    "ecfp",
    "fingerprint_smiles",
    "tanimoto",
    "tanimoto_distance",
    "similarity_stats",
    "ring_atoms",
    "HISTOGRAM_BINS",
]

HISTOGRAM_BINS = 50

_BOND_CODE = {BondOrder.SINGLE: 1, BondOrder.DOUBLE: 2, BondOrder.TRIPLE: 3, BondOrder.AROMATIC: 4}

# chirality codes entering the atom invariant
_NO_STEREO, _STEREO_A, _STEREO_B, _STEREO_UNRESOLVED = 0, 1, 2, 3


class EmptyMolecule(ValueError):
    pass


class ParamMismatch(ValueError):
    pass


class LibraryError(ValueError):
    """A library entry failed to parse; ``key`` names the entry."""

    def __init__(self, key, cause: Exception):
        super().__init__(f"library entry {key!r}: {cause}")
        self.key = key
        self.cause = cause


@dataclass(frozen=True)
class FingerprintParams:
    radius: int = 3
    n_bits: int = 128
    use_stereo: bool = True

    def __post_init__(self) -> None:
        if not 0 <= self.radius <= 10:
            raise ValueError(f"radius must be in [0, 10], got {self.radius}")
        if self.n_bits < 8 or self.n_bits & (self.n_bits - 1):
            raise ValueError(f"n_bits must be a power of two >= 8, got {self.n_bits}")


@dataclass(frozen=True)
class Fingerprint:
    """Binary fingerprint stored as an integer bit mask (bit i set <=> bit i on)."""

    mask: int
    params: FingerprintParams

    @classmethod
    def from_bits(cls, bits: Iterable[int], params: FingerprintParams) -> Fingerprint:
        mask = 0
        for b in bits:
            if not 0 <= b < params.n_bits:
                raise ValueError(f"bit {b} out of range for {params.n_bits} bits")
            mask |= 1 << b
        return cls(mask, params)

    @classmethod
    def from_hex(cls, text: str, params: FingerprintParams) -> Fingerprint:
        raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
        bits = np.unpackbits(raw)[: params.n_bits]
        return cls.from_bits(np.flatnonzero(bits).tolist(), params)

    @property
    def n_bits(self) -> int:
        return self.params.n_bits

    def popcount(self) -> int:
        return self.mask.bit_count()

    def on_bits(self) -> list[int]:
        return [i for i in range(self.params.n_bits) if self.mask >> i & 1]

    def to_array(self, dtype=np.float64) -> np.ndarray:
        arr = np.zeros(self.params.n_bits, dtype=dtype)
        arr[self.on_bits()] = 1
        return arr

    def to_hex(self) -> str:
        """Lowercase hex; bit 0 is the most significant bit of the first byte."""
        return np.packbits(self.to_array(np.uint8)).tobytes().hex()

    def __len__(self) -> int:
        return self.params.n_bits


def _hash(*values: int) -> int:
    data = ",".join(map(str, values)).encode("ascii")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def ring_atoms(graph: MolecularGraph) -> list[bool]:
    """Flag atoms that sit on at least one cycle (i.e. touch a non-bridge bond)."""
    n = len(graph.atoms)
    disc = [-1] * n
    low = [0] * n
    in_ring = [False] * n
    clock = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = clock
        clock += 1
        # iterative DFS; stack holds (atom, bond index used to enter it, neighbor iterator)
        stack = [(root, -1, iter(graph.adjacency[root]))]
        while stack:
            atom, via, it = stack[-1]
            advanced = False
            for nbr, bond in it:
                bid = id(bond)
                if bid == via:
                    continue
                if disc[nbr] < 0:
                    disc[nbr] = low[nbr] = clock
                    clock += 1
                    stack.append((nbr, bid, iter(graph.adjacency[nbr])))
                    advanced = True
                    break
                low[atom] = min(low[atom], disc[nbr])
            if advanced:
                continue
            stack.pop()
            if stack:
                parent = stack[-1][0]
                low[parent] = min(low[parent], low[atom])
                if low[atom] <= disc[parent]:
                    # bond parent-atom is not a bridge
                    in_ring[atom] = in_ring[parent] = True
    return in_ring


def _round(graph: MolecularGraph, ids: list[int], r: int) -> list[int]:
    out = []
    for a in range(len(ids)):
        env = sorted((_BOND_CODE[bond.order], ids[nbr]) for nbr, bond in graph.adjacency[a])
        out.append(_hash(r, ids[a], *(x for pair in env for x in pair)))
    return out


def _refine(graph: MolecularGraph, ids: list[int], rounds: int) -> list[int]:
    for r in range(1, rounds + 1):
        ids = _round(graph, ids, r)
    return ids


def _permutation_parity(seq: Sequence[int]) -> int:
    parity = 0
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                parity ^= 1
    return parity


def _stereo_codes(graph: MolecularGraph, base: list[int]) -> list[int]:
    """Order-independent tetrahedral codes.

    The written ``@``/``@@`` tag is relative to the SMILES neighbor order; it is
    re-expressed relative to neighbors ranked by their refined invariants, so
    the code survives re-writing the SMILES in another atom order. Ties among
    the neighbors yield an "unresolved" code.
    """
    codes = [_NO_STEREO] * len(graph.atoms)
    if not any(a.chirality is not Chirality.NONE for a in graph.atoms):
        return codes
    ranks = _refine(graph, base, max(1, len(graph.atoms)))
    for atom in graph.atoms:
        if atom.chirality is Chirality.NONE:
            continue
        order = graph.written_order[atom.index]
        keys = [-1 if n == IMPLICIT_H else ranks[n] for n in order]
        if len(order) < 3 or len(set(keys)) != len(keys):
            codes[atom.index] = _STEREO_UNRESOLVED
            continue
        ranking = sorted(range(len(keys)), key=keys.__getitem__)
        tag = 0 if atom.chirality is Chirality.COUNTERCLOCKWISE else 1
        codes[atom.index] = _STEREO_A if tag ^ _permutation_parity(ranking) == 0 else _STEREO_B
    return codes


def _initial_invariants(graph: MolecularGraph, use_stereo: bool) -> list[int]:
    rings = ring_atoms(graph)
    rows = []
    for atom in graph.atoms:
        nbrs = graph.neighbors(atom.index)
        heavy = sum(1 for n in nbrs if graph.atoms[n].element != "H")
        h_count = implicit_hydrogen_count(atom, graph) + (len(nbrs) - heavy)
        rows.append([atom.atomic_number, heavy, h_count, atom.charge, int(rings[atom.index]), int(atom.aromatic)])
    base = [_hash(0, *row) for row in rows]
    if not use_stereo:
        return base
    codes = _stereo_codes(graph, base)
    return [_hash(0, *row, code) for row, code in zip(rows, codes)]


def ecfp(graph: MolecularGraph, params: FingerprintParams = FingerprintParams()) -> Fingerprint:
    """Extended-connectivity fingerprint of ``graph``.

    Each atom starts from a hashed invariant; every round rehashes it with the
    sorted (bond code, neighbor identifier) pairs. Environments covering the
    same atom set are emitted once, by the smallest radius and then the
    smallest identifier. Surviving identifiers set bit ``id % n_bits``.
    """
    n = len(graph.atoms)
    if n == 0:
        raise EmptyMolecule("cannot fingerprint a molecule without atoms")
    ids = _initial_invariants(graph, params.use_stereo)
    cover = [frozenset((a,)) for a in range(n)]
    best: dict[frozenset[int], tuple[int, int]] = {}
    for a in range(n):
        best[cover[a]] = min(best.get(cover[a], (0, ids[a])), (0, ids[a]))
    for r in range(1, params.radius + 1):
        ids = _round(graph, ids, r)
        cover = [cover[a].union(*(cover[nb] for nb in graph.neighbors(a))) for a in range(n)]
        for a in range(n):
            key = (r, ids[a])
            if cover[a] not in best or key < best[cover[a]]:
                best[cover[a]] = key
    mask = 0
    for _, ident in best.values():
        mask |= 1 << (ident % params.n_bits)
    return Fingerprint(mask, params)


def fingerprint_smiles(smiles: str, params: FingerprintParams = FingerprintParams()) -> Fingerprint:
    return ecfp(parse_smiles(smiles), params)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    if a.params != b.params:
        raise ParamMismatch(f"fingerprint parameters differ: {a.params} vs {b.params}")
    union = (a.mask | b.mask).bit_count()
    if union == 0:
        return 1.0
    return (a.mask & b.mask).bit_count() / union


def tanimoto_distance(a: Fingerprint, b: Fingerprint) -> float:
    return 1.0 - tanimoto(a, b)


@dataclass(frozen=True)
class SimilarityStats:
    params: FingerprintParams
    mean: float
    std: float
    counts: np.ndarray
    edges: np.ndarray
    n_pairs: int


def _library_items(library: Mapping[str, str] | Sequence[str]) -> list[tuple[object, str]]:
    if isinstance(library, Mapping):
        return list(library.items())
    return list(enumerate(library))


def similarity_stats(
    library: Mapping[str, str] | Sequence[str],
    params_grid: Iterable[FingerprintParams],
) -> dict[FingerprintParams, SimilarityStats]:
    """Mean, standard deviation and 50-bin histogram of all pairwise Tanimoto
    similarities in ``library``, once per parameter setting."""
    items = _library_items(library)
    if len(items) < 2:
        raise ValueError("need at least two library entries")
    graphs = []
    for key, smi in items:
        try:
            graphs.append(parse_smiles(smi))
        except SmilesError as exc:
            raise LibraryError(key, exc) from exc
    out = {}
    for params in params_grid:
        fps = [ecfp(g, params) for g in graphs]
        sims = np.array([tanimoto(a, b) for a, b in combinations(fps, 2)])
        counts, edges = np.histogram(sims, bins=HISTOGRAM_BINS, range=(0.0, 1.0))
        out[params] = SimilarityStats(params, float(sims.mean()), float(sims.std()), counts, edges, len(sims))
    return out
