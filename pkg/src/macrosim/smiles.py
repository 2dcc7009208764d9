"""Minimal SMILES reader producing an atom/bond graph.

The supported grammar is the organic subset plus bracket atoms (isotope,
element, ``@``/``@@``, H count, charge), branches, ring closures (``1``-``9``
and ``%NN``), the bond symbols ``- = # : / \\`` and dot disconnection.
Aromaticity is taken from the case of the atom symbol; no perception or
kekulization happens here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "Chirality",
    "CisTrans",
    "MolecularGraph",
    "SmilesError",
    "UnbalancedParenthesis",
    "UnmatchedRingClosure",
    "UnknownElement",
    "MalformedBracketAtom",
    "DanglingBondSymbol",
    "parse_smiles",
    "implicit_hydrogen_count",
    "atomic_number",
]

# fmt: off
_ELEMENTS = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al",
    "Si", "P", "S", "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe",
    "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr",
    "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm",
    "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn",
    "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf",
    "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds",
    "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
)
# fmt: on
_ATOMIC_NUMBER = {sym: i + 1 for i, sym in enumerate(_ELEMENTS)}

_ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
_ORGANIC_AROMATIC = ("b", "c", "n", "o", "p", "s")
_BRACKET_AROMATIC = ("se", "as", "te", "b", "c", "n", "o", "p", "s")
_DEFAULT_VALENCE = {"B": 3, "C": 4, "N": 3, "O": 2, "P": 3, "S": 2,
                    "F": 1, "Cl": 1, "Br": 1, "I": 1}

# marker for the implicit hydrogen of a bracket atom in the written neighbor order
IMPLICIT_H = -1


class SmilesError(ValueError):
    """Base class for SMILES syntax errors; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnbalancedParenthesis(SmilesError):
    pass


class UnmatchedRingClosure(SmilesError):
    pass


class UnknownElement(SmilesError):
    pass


class MalformedBracketAtom(SmilesError):
    pass


class DanglingBondSymbol(SmilesError):
    pass


class BondOrder(enum.Enum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> float:
        return 1.5 if self is BondOrder.AROMATIC else float(self.value)


class Chirality(enum.Enum):
    NONE = 0
    COUNTERCLOCKWISE = 1  # @
    CLOCKWISE = 2  # @@


class CisTrans(enum.Enum):
    NONE = 0
    UP = 1  # /
    DOWN = 2  # \


_BOND_SYMBOLS = {
    "-": (BondOrder.SINGLE, CisTrans.NONE),
    "=": (BondOrder.DOUBLE, CisTrans.NONE),
    "#": (BondOrder.TRIPLE, CisTrans.NONE),
    ":": (BondOrder.AROMATIC, CisTrans.NONE),
    "/": (BondOrder.SINGLE, CisTrans.UP),
    "\\": (BondOrder.SINGLE, CisTrans.DOWN),
}


@dataclass(frozen=True)
class Atom:
    index: int
    element: str
    isotope: int | None = None
    charge: int = 0
    explicit_h: int | None = None
    aromatic: bool = False
    chirality: Chirality = Chirality.NONE

    @property
    def atomic_number(self) -> int:
        return _ATOMIC_NUMBER[self.element]

    @property
    def is_bracket(self) -> bool:
        return self.explicit_h is not None


@dataclass(frozen=True)
class Bond:
    endpoints: tuple[int, int]
    order: BondOrder = BondOrder.SINGLE
    cis_trans: CisTrans = CisTrans.NONE

    def other(self, atom: int) -> int:
        a, b = self.endpoints
        return b if atom == a else a


@dataclass(frozen=True)
class MolecularGraph:
    """Atoms and bonds of one SMILES string.

    ``written_order`` keeps, per atom, its neighbors in the order the SMILES
    text introduces them (``IMPLICIT_H`` marks a bracket hydrogen). It is the
    frame of reference for ``@``/``@@``.
    """

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    written_order: tuple[tuple[int, ...], ...] = ()
    adjacency: tuple[tuple[tuple[int, Bond], ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        adj: list[list[tuple[int, Bond]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            a, b = bond.endpoints
            adj[a].append((b, bond))
            adj[b].append((a, bond))
        object.__setattr__(self, "adjacency", tuple(tuple(x) for x in adj))

    def __len__(self) -> int:
        return len(self.atoms)

    def neighbors(self, atom: int) -> list[int]:
        return [nbr for nbr, _ in self.adjacency[atom]]

    def degree(self, atom: int) -> int:
        return len(self.adjacency[atom])

    def n_components(self) -> int:
        seen = [False] * len(self.atoms)
        count = 0
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            count += 1
            stack = [start]
            seen[start] = True
            while stack:
                a = stack.pop()
                for nbr, _ in self.adjacency[a]:
                    if not seen[nbr]:
                        seen[nbr] = True
                        stack.append(nbr)
        return count


def atomic_number(element: str) -> int:
    return _ATOMIC_NUMBER[element]


def implicit_hydrogen_count(atom: Atom, graph: MolecularGraph) -> int:
    """Hydrogens not written as atoms.

    Bracket atoms report their explicit count. Organic-subset atoms use their
    lowest default valence minus the bond-order sum (aromatic bonds count 1.5),
    rounded down and clamped at zero.
    """
    if atom.explicit_h is not None:
        return atom.explicit_h
    valence = _DEFAULT_VALENCE.get(atom.element)
    if valence is None:
        return 0
    used = sum(bond.order.valence for _, bond in graph.adjacency[atom.index])
    return max(0, math.floor(valence - used))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[Atom] = []
        self.bonds: list[Bond] = []
        self.order: list[list[int]] = []
        self.bonded: set[frozenset[int]] = set()
        # ring number -> (atom, bond symbol or None, offset, slot in atom's written order)
        self.rings: dict[int, tuple[int, str | None, int, int]] = {}

    def error(self, cls: type[SmilesError], message: str, offset: int | None = None):
        return cls(message, self.pos if offset is None else offset)

    def parse(self) -> MolecularGraph:
        text = self.text
        prev: int | None = None
        pending: tuple[str, int] | None = None  # bond symbol and its offset
        branches: list[tuple[int | None, int]] = []  # (atom to return to, offset of "(")
        after_dot = False
        last_dot = 0

        while self.pos < len(text):
            ch = text[self.pos]
            start = self.pos
            if ch == "(":
                if prev is None:
                    raise self.error(UnbalancedParenthesis, "branch opened with no preceding atom")
                if pending is not None:
                    raise self.error(DanglingBondSymbol, "bond symbol before branch", pending[1])
                if self.pos + 1 < len(text) and text[self.pos + 1] == ")":
                    raise self.error(UnbalancedParenthesis, "empty branch")
                branches.append((prev, start))
                self.pos += 1
            elif ch == ")":
                if not branches:
                    raise self.error(UnbalancedParenthesis, "unmatched ')'")
                if pending is not None:
                    raise self.error(DanglingBondSymbol, "bond symbol at end of branch", pending[1])
                prev, _ = branches.pop()
                self.pos += 1
            elif ch in _BOND_SYMBOLS:
                if prev is None or pending is not None:
                    raise self.error(DanglingBondSymbol, f"bond symbol {ch!r} has no left atom")
                pending = (ch, start)
                self.pos += 1
            elif ch == ".":
                if prev is None or pending is not None or branches:
                    raise self.error(DanglingBondSymbol, "misplaced '.'")
                prev = None
                after_dot = True
                last_dot = start
                self.pos += 1
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    raise self.error(UnmatchedRingClosure, "ring closure with no preceding atom")
                number = self._ring_number()
                self._ring(prev, number, pending[0] if pending else None, start)
                pending = None
            else:
                atom = self._atom()
                if prev is not None:
                    self._bond(prev, atom, pending[0] if pending else None, start)
                    self.order[atom].insert(0, prev)
                    self.order[prev].append(atom)
                pending = None
                prev = atom
                after_dot = False

        if pending is not None:
            raise self.error(DanglingBondSymbol, "bond symbol at end of input", pending[1])
        if branches:
            raise self.error(UnbalancedParenthesis, "unclosed '('", branches[-1][1])
        if self.rings:
            number, (_, _, offset, _) = min(self.rings.items(), key=lambda kv: kv[1][2])
            raise self.error(UnmatchedRingClosure, f"ring {number} never closed", offset)
        if after_dot:
            raise self.error(DanglingBondSymbol, "trailing '.'", last_dot)
        if not self.atoms:
            raise self.error(SmilesError, "no atoms", 0)
        return MolecularGraph(
            atoms=tuple(self.atoms),
            bonds=tuple(self.bonds),
            written_order=tuple(tuple(o) for o in self.order),
        )

    def _ring_number(self) -> int:
        text = self.text
        if text[self.pos] == "%":
            digits = text[self.pos + 1:self.pos + 3]
            if len(digits) != 2 or not digits.isdigit():
                raise self.error(UnmatchedRingClosure, "'%' must be followed by two digits")
            self.pos += 3
            return int(digits)
        self.pos += 1
        return int(text[self.pos - 1])

    def _ring(self, atom: int, number: int, symbol: str | None, offset: int) -> None:
        if number not in self.rings:
            self.order[atom].append(IMPLICIT_H - 1)  # placeholder until closed
            self.rings[number] = (atom, symbol, offset, len(self.order[atom]) - 1)
            return
        other, other_symbol, _, slot = self.rings.pop(number)
        if other == atom:
            raise self.error(UnmatchedRingClosure, f"ring {number} closes on its own atom", offset)
        if symbol and other_symbol and _BOND_SYMBOLS[symbol][0] != _BOND_SYMBOLS[other_symbol][0]:
            raise self.error(UnmatchedRingClosure, f"conflicting bond orders on ring {number}", offset)
        self._bond(other, atom, symbol or other_symbol, offset, exc=UnmatchedRingClosure)
        self.order[other][slot] = atom
        self.order[atom].append(other)

    def _bond(self, a: int, b: int, symbol: str | None, offset: int,
              exc: type[SmilesError] = DanglingBondSymbol) -> None:
        key = frozenset((a, b))
        if key in self.bonded:
            raise self.error(exc, "duplicate bond between the same atoms", offset)
        self.bonded.add(key)
        if symbol is None:
            both_aromatic = self.atoms[a].aromatic and self.atoms[b].aromatic
            order, cis_trans = (BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE), CisTrans.NONE
        else:
            order, cis_trans = _BOND_SYMBOLS[symbol]
        self.bonds.append(Bond((a, b), order, cis_trans))

    def _new_atom(self, **kwargs) -> int:
        index = len(self.atoms)
        self.atoms.append(Atom(index=index, **kwargs))
        self.order.append([])
        return index

    def _atom(self) -> int:
        text = self.text
        if text[self.pos] == "[":
            return self._bracket_atom()
        for sym in _ORGANIC:
            if text.startswith(sym, self.pos):
                self.pos += len(sym)
                return self._new_atom(element=sym)
        ch = text[self.pos]
        if ch in _ORGANIC_AROMATIC:
            self.pos += 1
            return self._new_atom(element=ch.upper(), aromatic=True)
        raise self.error(UnknownElement, f"unexpected character {ch!r}")

    def _bracket_atom(self) -> int:
        text = self.text
        start = self.pos
        end = text.find("]", start)
        if end < 0:
            raise self.error(MalformedBracketAtom, "unterminated bracket atom", start)
        body = text[start + 1:end]
        i = 0

        j = i
        while j < len(body) and body[j].isdigit():
            j += 1
        isotope = int(body[i:j]) if j > i else None
        if isotope == 0:
            raise self.error(MalformedBracketAtom, "isotope must be positive", start)
        i = j

        aromatic = False
        element = None
        for sym in _BRACKET_AROMATIC:
            if body.startswith(sym, i):
                element, aromatic = sym.capitalize(), True
                i += len(sym)
                break
        if element is None:
            if i < len(body) and body[i].isupper():
                two = body[i:i + 2]
                if len(two) == 2 and two[1].islower() and two in _ATOMIC_NUMBER:
                    element = two
                elif body[i] in _ATOMIC_NUMBER:
                    element = body[i]
                else:
                    raise self.error(UnknownElement, f"unknown element in {text[start:end + 1]!r}", start + 1 + i)
                i += len(element)
            else:
                raise self.error(UnknownElement, f"missing element in {text[start:end + 1]!r}", start + 1 + i)

        chirality = Chirality.NONE
        if body.startswith("@@", i):
            chirality, i = Chirality.CLOCKWISE, i + 2
        elif body.startswith("@", i):
            chirality, i = Chirality.COUNTERCLOCKWISE, i + 1
        if i < len(body) and body[i] == "@":
            raise self.error(MalformedBracketAtom, "unsupported chirality class", start)
        if chirality is not Chirality.NONE and i < len(body) and body[i].isupper() and body[i] != "H":
            raise self.error(MalformedBracketAtom, "extended chirality classes are not supported", start)

        hcount = 0
        if i < len(body) and body[i] == "H":
            i += 1
            hcount = 1
            if i < len(body) and body[i].isdigit():
                hcount = int(body[i])
                i += 1

        charge = 0
        if i < len(body) and body[i] in "+-":
            sign = 1 if body[i] == "+" else -1
            i += 1
            if i < len(body) and body[i].isdigit():
                charge = sign * int(body[i])
                i += 1
                if charge == 0:
                    raise self.error(MalformedBracketAtom, "zero charge", start)
            else:
                charge = sign
                while i < len(body) and body[i] == body[i - 1] and abs(charge) < 9:
                    charge += sign
                    i += 1

        if i != len(body):
            raise self.error(MalformedBracketAtom, f"unexpected {body[i:]!r} in bracket atom", start + 1 + i)
        self.pos = end + 1
        index = self._new_atom(element=element, isotope=isotope, charge=charge, explicit_h=hcount,
                               aromatic=aromatic, chirality=chirality)
        if hcount:
            self.order[index].append(IMPLICIT_H)
        return index


def parse_smiles(text: str) -> MolecularGraph:
    """Parse ``text`` into a :class:`MolecularGraph`.

    Atoms keep input order; ring-closure bonds are created at the closing
    digit. Every malformed input raises a :class:`SmilesError` subclass
    carrying the byte offset of the problem.
    """
    if not isinstance(text, str):
        raise TypeError("SMILES must be a str")
    if not text:
        raise SmilesError("empty SMILES", 0)
    for i, ch in enumerate(text):
        if ord(ch) > 127 or not ch.isprintable() or ch.isspace():
            raise UnknownElement(f"invalid character {ch!r}", i)
    return _Parser(text).parse()
