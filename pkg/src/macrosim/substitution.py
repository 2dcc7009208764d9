"""Pairwise Tanimoto similarity tables over a monomer or bond vocabulary."""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from macrosim.fingerprint import FingerprintParams, LibraryError, ecfp, tanimoto
from macrosim.macrofile import UnknownName
from macrosim.smiles import SmilesError, parse_smiles

__all__ = [
    "SubstitutionMatrix",
    "MatrixFormatError",
    "build_substitution_matrix",
    "load_matrix",
    "save_matrix",
    "load_library",
    "LibraryFormatError",
]

_SYMMETRY_TOL = 1e-9


class MatrixFormatError(ValueError):
    pass


class LibraryFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SubstitutionMatrix:
    """Symmetric similarity matrix with unit diagonal; distance is ``1 - sim``."""

    vocab: tuple[str, ...]
    sim: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        vocab = tuple(self.vocab)
        sim = np.array(self.sim, dtype=float)
        n = len(vocab)
        if len(set(vocab)) != n:
            raise MatrixFormatError("vocabulary contains duplicate names")
        if sim.shape != (n, n):
            raise MatrixFormatError(f"matrix shape {sim.shape} does not match vocabulary of {n}")
        if not np.all(np.isfinite(sim)) or sim.min(initial=0.0) < 0.0 or sim.max(initial=1.0) > 1.0:
            raise MatrixFormatError("similarities must lie in [0, 1]")
        if np.abs(sim - sim.T).max(initial=0.0) > _SYMMETRY_TOL:
            raise MatrixFormatError("matrix is not symmetric")
        if np.abs(np.diag(sim) - 1.0).max(initial=0.0) > _SYMMETRY_TOL:
            raise MatrixFormatError("diagonal must be 1")
        sim = (sim + sim.T) / 2
        np.fill_diagonal(sim, 1.0)
        sim.setflags(write=False)
        object.__setattr__(self, "vocab", vocab)
        object.__setattr__(self, "sim", sim)
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(vocab)})

    @classmethod
    def from_pairs(cls, vocab: Sequence[str], pairs: Mapping[tuple[str, str], float]) -> SubstitutionMatrix:
        """Build from explicit similarities; unlisted off-diagonal pairs are 0."""
        vocab = tuple(vocab)
        index = {name: i for i, name in enumerate(vocab)}
        sim = np.eye(len(vocab))
        for (a, b), value in pairs.items():
            sim[index[a], index[b]] = sim[index[b], index[a]] = value
        return cls(vocab, sim)

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubstitutionMatrix):
            return NotImplemented
        return self.vocab == other.vocab and np.array_equal(self.sim, other.sim)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownName(name) from None

    def similarity(self, a: str, b: str) -> float:
        return float(self.sim[self.index(a), self.index(b)])

    def distance(self, a: str, b: str) -> float:
        if a == b and a in self._index:
            return 0.0
        return 1.0 - self.similarity(a, b)

    def distance_matrix(self) -> np.ndarray:
        return 1.0 - self.sim

    def to_json(self) -> dict:
        return {"vocab": list(self.vocab), "sim": self.sim.tolist()}

    @classmethod
    def from_json(cls, data: Mapping) -> SubstitutionMatrix:
        try:
            return cls(tuple(data["vocab"]), np.array(data["sim"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, MatrixFormatError):
                raise
            raise MatrixFormatError(f"malformed matrix JSON: {exc}") from exc

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", *self.vocab])
        for name, row in zip(self.vocab, self.sim):
            writer.writerow([name, *(repr(float(x)) for x in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> SubstitutionMatrix:
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows:
            raise MatrixFormatError("empty CSV")
        header = rows[0][1:]
        body = rows[1:]
        if len(body) != len(header):
            raise MatrixFormatError(f"expected {len(header)} data rows, found {len(body)}")
        names, values = [], []
        for k, row in enumerate(body, start=2):
            if len(row) != len(header) + 1:
                raise MatrixFormatError(f"row {k} has {len(row) - 1} values, expected {len(header)}")
            names.append(row[0])
            try:
                values.append([float(x) for x in row[1:]])
            except ValueError as exc:
                raise MatrixFormatError(f"row {k}: {exc}") from None
        if names != header:
            raise MatrixFormatError("row names do not match the header")
        return cls(tuple(header), np.array(values, dtype=float).reshape(len(header), len(header)))


def save_matrix(matrix: SubstitutionMatrix, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(matrix.to_json()) + "\n")
    else:
        path.write_text(matrix.to_csv())


def load_matrix(path: str | Path) -> SubstitutionMatrix:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MatrixFormatError(f"{path}: {exc}") from None
        return SubstitutionMatrix.from_json(data)
    return SubstitutionMatrix.from_csv(text)


def build_substitution_matrix(library: Mapping[str, str],
                              params: FingerprintParams = FingerprintParams()) -> SubstitutionMatrix:
    """``sim[i][j]`` is the Tanimoto similarity of the fingerprints of entries i and j."""
    names = tuple(library)
    fps = []
    for name in names:
        try:
            fps.append(ecfp(parse_smiles(library[name]), params))
        except SmilesError as exc:
            raise LibraryError(name, exc) from exc
    n = len(names)
    sim = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            sim[i, j] = sim[j, i] = tanimoto(fps[i], fps[j])
    return SubstitutionMatrix(names, sim)


def load_library(path: str | Path) -> dict[str, str]:
    """Read a ``name,smiles`` CSV (header row required) into an ordered dict."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or [c.strip().lower() for c in rows[0][:2]] != ["name", "smiles"]:
        raise LibraryFormatError(f"{path}: expected a 'name,smiles' header")
    out: dict[str, str] = {}
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != 2 or not row[0].strip() or not row[1].strip():
            raise LibraryFormatError(f"{path}: row {k} is not 'name,smiles'")
        name, smi = row[0].strip(), row[1].strip()
        if name in out:
            raise LibraryFormatError(f"{path}: duplicate name {name!r} in row {k}")
        out[name] = smi
    return out
