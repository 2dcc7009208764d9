"""Shared test assets: a small glycan reference family, a monomer library,
random macro-graph and SMILES generators, and closed-form edit distances.

The family is six hexasaccharides built on a path of glucose units:

========================  ===================================================
``L``                     path of six Glc
``M``                     ``L`` closed into a six-cycle
``B1``                    ``L`` with one edge relocated, giving a branch
``B2``                    ``B1`` with a second edge relocated
``L-glc-xyl``             ``L`` with one interior node relabelled Xyl
``L-glc-xyl-fuc``         ``L`` with interior Xyl and interior Fuc
``B-glc-xyl-fuc``         ``B2`` topology with one Xyl and two Fuc
========================  ===================================================

Label distances are injected rather than derived from fingerprints, so the
expected edit distances have closed forms.
"""

from __future__ import annotations

import random
from collections.abc import Sequence
from importlib import resources
from itertools import combinations

import numpy as np

from macrosim.macrofile import MacroGraph
from macrosim.substitution import SubstitutionMatrix

__all__ = [
    "MONOMER_LIBRARY",
    "BOND",
    "ROWS",
    "REPRODUCIBLE_ROWS",
    "D_GLC_XYL",
    "D_GLC_FUC",
    "D_XYL_FUC",
    "PUBLISHED_GED_GRID",
    "GRID_CELLS",
    "reference_family",
    "reference_node_matrix",
    "reference_edge_matrix",
    "reference_file",
    "reference_paths",
    "library_csv",
    "table_a1_expected",
    "b_row_expected",
    "generate_random_macrograph",
    "random_smiles",
    "random_molecule_smiles",
    "shuffle_smiles",
]

BOND = "b1-4"

MONOMER_LIBRARY: dict[str, str] = {
    "Glc": "OC[C@H]1OC(O)[C@H](O)[C@@H](O)[C@@H]1O",
    "Xyl": "O[C@@H]1COC(O)[C@H](O)[C@H]1O",
    "Fuc": "C[C@@H]1OC(O)[C@@H](O)[C@H](O)[C@@H]1O",
    "Gal": "OC[C@H]1OC(O)[C@H](O)[C@@H](O)[C@H]1O",
    "Man": "OC[C@H]1OC(O)[C@@H](O)[C@@H](O)[C@@H]1O",
    "GlcNAc": "OC[C@H]1OC(O)[C@H](NC(C)=O)[C@@H](O)[C@@H]1O",
    "Neu5Ac": "CC(=O)N[C@@H]1[C@@H](O)C[C@@](O)(C(=O)O)O[C@H]1[C@H](O)[C@H](O)CO",
    "Ala": "C[C@H](N)C(=O)O",
    "Gly": "NCC(=O)O",
    "Ser": "OC[C@H](N)C(=O)O",
    "Phe": "N[C@@H](Cc1ccccc1)C(=O)O",
    "Cys": "N[C@@H](CS)C(=O)O",
    # bond fragments: the chirality of the anomeric carbon is the alpha/beta call
    "a1-4": "C[C@H](OC)CC",
    "b1-4": "C[C@@H](OC)CC",
    "u1-4": "CC(OC)CC",
    "pep": "CC(=O)NC",
}

D_GLC_XYL = 0.684
D_GLC_FUC = 0.742
# not constrained by any published value; any value in (0, 1] leaves the grid unchanged
D_XYL_FUC = 0.6

ROWS = ("L", "M", "B1", "B2", "L-glc-xyl", "L-glc-xyl-fuc", "B-glc-xyl-fuc")
REPRODUCIBLE_ROWS = ROWS[:6]

# (c_indel, c_sub) in the column order of the published grid
GRID_CELLS = tuple((i, s) for i in (1, 3, 5, 10) for s in (1, 3, 5, 10))

PUBLISHED_GED_GRID: dict[str, tuple[float, ...]] = {
    "L": (0,) * 16,
    "M": (1, 1, 1, 1, 3, 3, 3, 3, 5, 5, 5, 5, 10, 10, 10, 10),
    "B1": (2, 2, 2, 2, 6, 6, 6, 6, 10, 10, 10, 10, 20, 20, 20, 20),
    "B2": (4, 4, 4, 4, 12, 12, 12, 12, 20, 20, 20, 20, 40, 40, 40, 40),
    "L-glc-xyl": (0.68, 6, 6, 6, 0.68, 2.05, 3.42, 18, 0.68, 2.05, 3.42, 6.84, 0.68, 2.05, 3.42, 6.84),
    "L-glc-xyl-fuc": (1.43, 12, 12, 12, 1.43, 4.28, 7.13, 36, 1.43, 4.28, 7.13, 14.26,
                      1.43, 4.28, 7.13, 14.26),
    "B-glc-xyl-fuc": (6.17, 14, 14, 14, 14.17, 18.5, 22.84, 42, 22.17, 26.5, 30.84, 41.67,
                      42.17, 46.5, 50.84, 61.67),
}

_PATH = [(i, i + 1) for i in range(5)]
_TOPOLOGY = {
    "L": _PATH,
    "M": _PATH + [(0, 5)],
    "B1": [(0, 2)] + _PATH[1:],
    "B2": [(0, 2), (1, 2), (2, 3), (3, 4), (2, 5)],
}
_LABELS = {
    "L-glc-xyl": {2: "Xyl"},
    "L-glc-xyl-fuc": {1: "Xyl", 4: "Fuc"},
    "B-glc-xyl-fuc": {3: "Xyl", 1: "Fuc", 4: "Fuc"},
}
_BASE = {"L-glc-xyl": "L", "L-glc-xyl-fuc": "L", "B-glc-xyl-fuc": "B2"}
_TOPOLOGY_OPS = {"L": 0, "M": 1, "B1": 2, "B2": 4}


def _build(name: str) -> MacroGraph:
    topo = _TOPOLOGY[_BASE.get(name, name)]
    labels = ["Glc"] * 6
    for node, lab in _LABELS.get(name, {}).items():
        labels[node] = lab
    return MacroGraph(tuple(labels), tuple((u, v, BOND) for u, v in topo))


def reference_family() -> dict[str, MacroGraph]:
    """The seven reference glycans keyed by row name."""
    return {name: _build(name) for name in ROWS}


def reference_node_matrix() -> SubstitutionMatrix:
    return SubstitutionMatrix.from_pairs(
        ("Glc", "Xyl", "Fuc"),
        {("Glc", "Xyl"): 1 - D_GLC_XYL, ("Glc", "Fuc"): 1 - D_GLC_FUC, ("Xyl", "Fuc"): 1 - D_XYL_FUC},
    )


def reference_edge_matrix() -> SubstitutionMatrix:
    return SubstitutionMatrix((BOND,), np.ones((1, 1)))


def reference_file(name: str) -> str:
    """Text of the shipped fixture file for row ``name``."""
    return resources.files("macrosim.data.reference").joinpath(f"{name}.txt").read_text()


def reference_paths() -> list:
    """Filesystem paths of all shipped fixture files, in row order."""
    base = resources.files("macrosim.data.reference")
    return [base.joinpath(f"{name}.txt") for name in ROWS]


def library_csv() -> str:
    """The monomer library as ``name,smiles`` CSV text."""
    return resources.files("macrosim.data").joinpath("monomers.csv").read_text()


def _node_distance(label: str) -> float:
    return {"Glc": 0.0, "Xyl": D_GLC_XYL, "Fuc": D_GLC_FUC}[label]


def table_a1_expected(row: str, c_indel: float, c_sub: float) -> float:
    """Closed-form edit distance from ``L`` to ``row``.

    Topology rows cost ``k * c_indel`` for ``k`` edge edits. Each relabelled
    node is either substituted (``c_sub * d``) or deleted and re-inserted
    together with its incident edges (``2 * c_indel * (1 + degree)``),
    whichever is cheaper.
    """
    if row not in REPRODUCIBLE_ROWS:
        raise ValueError(f"{row!r} has no closed form; use b_row_expected")
    if row in _TOPOLOGY_OPS:
        return _TOPOLOGY_OPS[row] * c_indel
    g = _build(row)
    deg = g.degrees()
    return sum(min(c_sub * _node_distance(lab), 2 * c_indel * (1 + deg[v]))
               for v, lab in enumerate(g.labels) if lab != "Glc")


def b_row_expected(c_indel: float) -> float:
    """Distance from ``L`` to ``B-glc-xyl-fuc`` at unit substitution cost:
    four edge edits plus the three substitutions."""
    subs = sum(_node_distance(lab) for lab in _build("B-glc-xyl-fuc").labels)
    return 4 * c_indel + subs


def generate_random_macrograph(seed: int, n: int, edge_density: float = 0.3,
                               vocab: Sequence[str] = ("A", "B", "C"),
                               edge_vocab: Sequence[str] = ("x", "y")) -> MacroGraph:
    """Random labelled simple graph; each possible edge is present with
    probability ``edge_density``. Deterministic in ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= edge_density <= 1.0:
        raise ValueError("edge_density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    labels = tuple(str(vocab[k]) for k in rng.integers(0, len(vocab), n))
    edges = []
    for u, v in combinations(range(n), 2):
        # draw both numbers for every pair so the stream does not depend on density
        keep, lab = rng.random(), rng.integers(0, len(edge_vocab))
        if keep < edge_density or edge_density == 1.0:
            edges.append((u, v, str(edge_vocab[lab])))
    return MacroGraph(labels, tuple(edges))


_ATOMS = ("C", "C", "C", "N", "O", "S", "c1ccccc1", "Cl", "F")


def random_smiles(seed: int, n_atoms: int = 8) -> str:
    """Random acyclic SMILES drawn from a small grammar (branches, double
    bonds, an occasional ring)."""
    rnd = random.Random(seed)

    def chain(budget: int, first: bool) -> str:
        out = []
        while budget > 0:
            atom = rnd.choice(_ATOMS[:6]) if budget < 6 or rnd.random() < 0.85 else "c1ccccc1"
            if atom == "c1ccccc1":
                budget -= 6
            else:
                budget -= 1
            bond = "=" if out and rnd.random() < 0.1 and atom in ("C", "O", "N") else ""
            out.append(bond + atom)
            if budget > 2 and rnd.random() < 0.25:
                size = rnd.randint(1, min(3, budget - 1))
                out.append("(" + chain(size, False) + ")")
                budget -= size
        return "".join(out)

    text = chain(max(1, n_atoms), True)
    if rnd.random() < 0.2:
        text = "C1CCCC1" + text
    return text


def random_molecule_smiles(seed: int) -> str:
    """A random pick from the monomer library or the random grammar."""
    rnd = random.Random(seed)
    if rnd.random() < 0.3:
        return rnd.choice(list(MONOMER_LIBRARY.values()))
    return random_smiles(seed, rnd.randint(2, 14))


def shuffle_smiles(graph, seed: int) -> str:
    """Rewrite a :class:`~macrosim.smiles.MolecularGraph` as SMILES, visiting
    atoms and neighbors in a random order.

    Tetrahedral tags are re-expressed for the new neighbor order; bond
    directions (``/`` and ``\\``) are dropped.
    """
    from macrosim.smiles import IMPLICIT_H, BondOrder, Chirality

    rnd = random.Random(seed)
    n = len(graph.atoms)
    symbol = {BondOrder.SINGLE: "", BondOrder.DOUBLE: "=", BondOrder.TRIPLE: "#", BondOrder.AROMATIC: ":"}

    def bond_text(bond) -> str:
        a, b = bond.endpoints
        if bond.order is BondOrder.SINGLE and graph.atoms[a].aromatic and graph.atoms[b].aromatic:
            return "-"
        return symbol[bond.order]

    def atom_text(a: int, parent: int | None) -> str:
        atom = graph.atoms[a]
        el = atom.element.lower() if atom.aromatic else atom.element
        if not atom.is_bracket:
            return el
        iso = "" if atom.isotope is None else str(atom.isotope)
        chiral = ""
        if atom.chirality is not Chirality.NONE:
            new = [] if parent is None else [parent]
            new += [IMPLICIT_H] * bool(atom.explicit_h)
            new += [sum(bond.endpoints) - a for bond in closures[a]]
            new += [c for c, _ in children[a]]
            old = list(graph.written_order[a])
            perm = [old.index(x) for x in new]
            odd = sum(perm[i] > perm[j] for i in range(len(perm)) for j in range(i + 1, len(perm))) % 2
            clockwise = (atom.chirality is Chirality.CLOCKWISE) != bool(odd)
            chiral = "@@" if clockwise else "@"
        h = {0: "", 1: "H"}.get(atom.explicit_h, f"H{atom.explicit_h}")
        q = abs(atom.charge)
        ch = "" if q == 0 else ("+" if atom.charge > 0 else "-") + (str(q) if q > 1 else "")
        return f"[{iso}{el}{chiral}{h}{ch}]"

    # random depth-first spanning forest; non-tree bonds become ring closures
    seen = [False] * n
    children: list[list[tuple[int, object]]] = [[] for _ in range(n)]
    tree: set[int] = set()
    roots = []
    starts = list(range(n))
    rnd.shuffle(starts)
    for root in starts:
        if seen[root]:
            continue
        roots.append(root)
        seen[root] = True
        stack = [root]
        while stack:
            a = stack.pop()
            nbrs = list(graph.adjacency[a])
            rnd.shuffle(nbrs)
            for b, bond in nbrs:
                if not seen[b]:
                    seen[b] = True
                    children[a].append((b, bond))
                    tree.add(id(bond))
                    stack.append(b)
    closures: list[list[object]] = [[] for _ in range(n)]
    for bond in graph.bonds:
        if id(bond) not in tree:
            a, b = bond.endpoints
            closures[a].append(bond)
            closures[b].append(bond)

    ring_ids: dict[int, int] = {}
    counter = [0]

    def emit(a: int, parent: int | None = None) -> str:
        text = atom_text(a, parent)
        for bond in closures[a]:
            if id(bond) not in ring_ids:
                counter[0] += 1
                ring_ids[id(bond)] = counter[0]
                num = counter[0]
                text += bond_text(bond) + (str(num) if num < 10 else f"%{num}")
            else:
                num = ring_ids[id(bond)]
                text += str(num) if num < 10 else f"%{num}"
        kids = children[a]
        for k, (c, bond) in enumerate(kids):
            sub = bond_text(bond) + emit(c, a)
            text += f"({sub})" if k < len(kids) - 1 else sub
        return text

    return ".".join(emit(r) for r in roots)
