"""Three-section macromolecule text files and the monomer-level graph.

A file looks like::

    SMILES
    Glc OC[C@H]1OC(O)[C@H](O)[C@@H](O)[C@@H]1O
    b   C[C@@H](OC)CC
    MONOMERS
    1 Glc
    2 Glc
    BONDS
    1 2 b

Headers are matched case-insensitively and must appear in this order.
Blank lines and lines starting with ``#`` are ignored. Node indices are
1-based in files and 0-based in :class:`MacroGraph`.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np

from macrosim.fingerprint import FingerprintParams, ecfp
from macrosim.smiles import SmilesError, parse_smiles

__all__ = [
    "MacroFile",
    "MacroGraph",
    "FingerprintScheme",
    "OneHotScheme",
    "FeaturizationScheme",
    "GraphStats",
    "MacroFileError",
    "MissingSection",
    "DuplicateHeader",
    "BadIndexLine",
    "UnknownName",
    "DuplicateNodeIndex",
    "DuplicateBond",
    "SelfLoop",
    "MalformedLine",
    "FeaturizationError",
    "parse_macrofile",
    "load_macrofile",
    "load_graph",
    "to_graph",
    "write_macrofile",
    "featurize",
    "graph_stats",
    "DEFAULT_NODE_PARAMS",
    "DEFAULT_EDGE_PARAMS",
]

SECTIONS = ("SMILES", "MONOMERS", "BONDS")

DEFAULT_NODE_PARAMS = FingerprintParams(radius=3, n_bits=128)
DEFAULT_EDGE_PARAMS = FingerprintParams(radius=3, n_bits=16)


class MacroFileError(ValueError):
    """Base class for macrofile problems; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class MissingSection(MacroFileError):
    pass


class DuplicateHeader(MacroFileError):
    pass


class BadIndexLine(MacroFileError):
    pass


class UnknownName(MacroFileError):
    def __init__(self, name: str, line: int | None = None):
        super().__init__(f"unknown name {name!r}", line)
        self.name = name


class DuplicateNodeIndex(MacroFileError):
    pass


class DuplicateBond(MacroFileError):
    pass


class SelfLoop(MacroFileError):
    pass


class MalformedLine(MacroFileError):
    pass


class FeaturizationError(ValueError):
    def __init__(self, name: str, cause: Exception):
        super().__init__(f"cannot featurize {name!r}: {cause}")
        self.name = name
        self.cause = cause


@dataclass
class MacroFile:
    smiles: dict[str, str] = field(default_factory=dict)
    monomers: dict[int, str] = field(default_factory=dict)
    bonds: dict[tuple[int, int], str] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.monomers)


@dataclass(frozen=True, eq=False)
class MacroGraph:
    """Undirected monomer graph.

    ``labels[i]`` is the monomer name of node ``i``; ``edges`` holds
    ``(u, v, bond_name)`` with ``u < v``, sorted. Attribute matrices are
    optional and row-aligned with ``labels`` / ``edges``.
    """

    labels: tuple[str, ...]
    edges: tuple[tuple[int, int, str], ...] = ()
    node_attrs: np.ndarray | None = None
    edge_attrs: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = len(self.labels)
        norm = []
        for u, v, name in self.edges:
            if u == v:
                raise SelfLoop(f"self-loop on node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise BadIndexLine(f"edge ({u}, {v}) references a missing node")
            norm.append((min(u, v), max(u, v), name))
        if len({(u, v) for u, v, _ in norm}) != len(norm):
            raise DuplicateBond("duplicate edge")
        order = sorted(range(len(norm)), key=norm.__getitem__)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "edges", tuple(norm[k] for k in order))
        if self.node_attrs is not None:
            arr = np.asarray(self.node_attrs, dtype=float)
            if arr.ndim != 2 or arr.shape[0] != n:
                raise ValueError("node_attrs must be an (n_nodes, d) matrix")
            arr.setflags(write=False)
            object.__setattr__(self, "node_attrs", arr)
        if self.edge_attrs is not None:
            arr = np.asarray(self.edge_attrs, dtype=float)
            if arr.ndim != 2 or arr.shape[0] != len(norm):
                raise ValueError("edge_attrs must be an (n_edges, d) matrix")
            arr = arr[order] if order else arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, "edge_attrs", arr)

    @property
    def n_nodes(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def featurized(self) -> bool:
        return self.node_attrs is not None

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.labels]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def degrees(self) -> list[int]:
        return [len(a) for a in self.neighbors()]

    def edge_labels(self) -> dict[tuple[int, int], str]:
        return {(u, v): name for u, v, name in self.edges}

    def without_attributes(self) -> MacroGraph:
        return MacroGraph(self.labels, self.edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MacroGraph):
            return NotImplemented
        if self.labels != other.labels or self.edges != other.edges:
            return False
        for a, b in ((self.node_attrs, other.node_attrs), (self.edge_attrs, other.edge_attrs)):
            if (a is None) != (b is None) or (a is not None and not np.array_equal(a, b)):
                return False
        return True

    def __hash__(self) -> int:
        return hash((self.labels, self.edges))

    def to_json(self) -> dict:
        def attr(arr, i):
            return None if arr is None else arr[i].tolist()

        return {
            "nodes": [{"id": i, "label": lab, "attr": attr(self.node_attrs, i)} for i, lab in enumerate(self.labels)],
            "edges": [{"u": u, "v": v, "label": lab, "attr": attr(self.edge_attrs, k)}
                      for k, (u, v, lab) in enumerate(self.edges)],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> MacroGraph:
        nodes = sorted(data["nodes"], key=lambda d: d["id"])
        if [d["id"] for d in nodes] != list(range(len(nodes))):
            raise BadIndexLine("node ids must be 0..n-1")
        edges = [(d["u"], d["v"], d["label"]) for d in data["edges"]]
        node_attrs = None
        if nodes and all(d.get("attr") is not None for d in nodes):
            node_attrs = np.array([d["attr"] for d in nodes], dtype=float)
        edge_attrs = None
        if data["edges"] and all(d.get("attr") is not None for d in data["edges"]):
            edge_attrs = np.array([d["attr"] for d in data["edges"]], dtype=float)
        return cls(tuple(d["label"] for d in nodes), tuple(edges), node_attrs, edge_attrs)

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        for i, lab in enumerate(self.labels):
            g.add_node(i, label=lab)
        for u, v, lab in self.edges:
            g.add_edge(u, v, label=lab)
        return g


@dataclass(frozen=True)
class FingerprintScheme:
    node_params: FingerprintParams = DEFAULT_NODE_PARAMS
    edge_params: FingerprintParams = DEFAULT_EDGE_PARAMS


@dataclass(frozen=True)
class OneHotScheme:
    node_vocab: tuple[str, ...]
    edge_vocab: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "node_vocab", tuple(self.node_vocab))
        object.__setattr__(self, "edge_vocab", tuple(self.edge_vocab))
        if len(set(self.node_vocab)) != len(self.node_vocab) or len(set(self.edge_vocab)) != len(self.edge_vocab):
            raise ValueError("one-hot vocabularies must not repeat names")

    @classmethod
    def from_graphs(cls, graphs: Iterable[MacroGraph]) -> OneHotScheme:
        nodes, edges = set(), set()
        for g in graphs:
            nodes.update(g.labels)
            edges.update(lab for _, _, lab in g.edges)
        return cls(tuple(sorted(nodes)), tuple(sorted(edges)))


FeaturizationScheme = Union[FingerprintScheme, OneHotScheme]


def _fields(line: str) -> list[str]:
    return line.split()


def _int(token: str, lineno: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise BadIndexLine(f"index {token!r} is not an integer", lineno) from None
    if value < 1:
        raise BadIndexLine(f"index {value} must be >= 1", lineno)
    return value


def parse_macrofile(text: str) -> MacroFile:
    """Parse the three-section text format into a :class:`MacroFile`."""
    out = MacroFile()
    section: str | None = None
    seen: list[str] = []
    index_lines: dict[int, int] = {}

    def check_indices():
        expected = 1
        for idx in sorted(out.monomers):
            if idx != expected:
                raise BadIndexLine(f"monomer indices must be 1..n; index {expected} missing", index_lines[idx])
            expected += 1

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        header = line.upper()
        if header in SECTIONS:
            if header in seen:
                raise DuplicateHeader(f"{header} header repeated", lineno)
            expected = SECTIONS[len(seen)]
            if header != expected:
                raise MissingSection(f"expected {expected} section before {header}", lineno)
            if header == "BONDS":
                check_indices()
            seen.append(header)
            section = header
            continue
        if section is None:
            raise MissingSection("content before the SMILES header", lineno)
        parts = _fields(line)
        if section == "SMILES":
            if len(parts) != 2:
                raise MalformedLine("SMILES lines are 'name smiles'", lineno)
            name, smi = parts
            if name in out.smiles and out.smiles[name] != smi:
                raise MalformedLine(f"conflicting SMILES for {name!r}", lineno)
            out.smiles[name] = smi
        elif section == "MONOMERS":
            if len(parts) != 2:
                raise BadIndexLine("monomer lines are 'index name'", lineno)
            idx = _int(parts[0], lineno)
            if idx in out.monomers:
                raise DuplicateNodeIndex(f"node index {idx} repeated", lineno)
            if parts[1] not in out.smiles:
                raise UnknownName(parts[1], lineno)
            out.monomers[idx] = parts[1]
            index_lines[idx] = lineno
        else:
            if len(parts) != 3:
                raise BadIndexLine("bond lines are 'i j name'", lineno)
            i, j = _int(parts[0], lineno), _int(parts[1], lineno)
            for k in (i, j):
                if k not in out.monomers:
                    raise BadIndexLine(f"bond references missing monomer {k}", lineno)
            if i == j:
                raise SelfLoop(f"bond {i}-{j} is a self-loop", lineno)
            key = (min(i, j), max(i, j))
            if key in out.bonds:
                raise DuplicateBond(f"bond {key[0]}-{key[1]} repeated", lineno)
            if parts[2] not in out.smiles:
                raise UnknownName(parts[2], lineno)
            out.bonds[key] = parts[2]

    for name in SECTIONS:
        if name not in seen:
            raise MissingSection(f"{name} section missing")
    return out


def load_macrofile(path: str | Path) -> MacroFile:
    return parse_macrofile(Path(path).read_text(encoding="utf-8"))


def to_graph(file: MacroFile) -> MacroGraph:
    labels = tuple(file.monomers[i] for i in range(1, file.n + 1))
    edges = tuple((i - 1, j - 1, name) for (i, j), name in file.bonds.items())
    return MacroGraph(labels, edges)


def load_graph(path: str | Path) -> tuple[MacroGraph, dict[str, str]]:
    """Read a file and return its graph together with its SMILES library."""
    f = load_macrofile(path)
    return to_graph(f), dict(f.smiles)


def write_macrofile(graph: MacroGraph, library: Mapping[str, str]) -> str:
    """Canonical text for ``graph``; SMILES entries appear in first-use order."""
    names: list[str] = []
    for name in list(graph.labels) + [lab for _, _, lab in graph.edges]:
        if name not in library:
            raise UnknownName(name)
        if name not in names:
            names.append(name)
    lines = ["SMILES"]
    lines += [f"{name} {library[name]}" for name in names]
    lines += ["", "MONOMERS"]
    lines += [f"{i + 1} {lab}" for i, lab in enumerate(graph.labels)]
    lines += ["", "BONDS"]
    lines += [f"{u + 1} {v + 1} {lab}" for u, v, lab in graph.edges]
    return "\n".join(lines) + "\n"


def _fingerprint_rows(names: Sequence[str], library: Mapping[str, str], params: FingerprintParams) -> np.ndarray:
    cache: dict[str, np.ndarray] = {}
    rows = []
    for name in names:
        if name not in cache:
            if name not in library:
                raise UnknownName(name)
            try:
                cache[name] = ecfp(parse_smiles(library[name]), params).to_array()
            except SmilesError as exc:
                raise FeaturizationError(name, exc) from exc
        rows.append(cache[name])
    return np.array(rows, dtype=float).reshape(len(names), params.n_bits)


def _one_hot_rows(names: Sequence[str], vocab: Sequence[str]) -> np.ndarray:
    pos = {name: i for i, name in enumerate(vocab)}
    out = np.zeros((len(names), len(vocab)))
    for row, name in enumerate(names):
        if name not in pos:
            raise UnknownName(name)
        out[row, pos[name]] = 1.0
    return out


def featurize(graph: MacroGraph, scheme: FeaturizationScheme,
              library: Mapping[str, str] | None = None) -> MacroGraph:
    """Attach node and edge attribute matrices according to ``scheme``."""
    edge_names = [lab for _, _, lab in graph.edges]
    if isinstance(scheme, OneHotScheme):
        nodes = _one_hot_rows(graph.labels, scheme.node_vocab)
        edges = _one_hot_rows(edge_names, scheme.edge_vocab)
    else:
        if library is None:
            raise ValueError("fingerprint featurization needs a SMILES library")
        nodes = _fingerprint_rows(graph.labels, library, scheme.node_params)
        edges = _fingerprint_rows(edge_names, library, scheme.edge_params)
    return MacroGraph(graph.labels, graph.edges, nodes, edges)


class GraphStats(NamedTuple):
    n_nodes: int
    n_edges: int
    density: float

    @property
    def dense(self) -> bool:
        return self.density > 0.5


def graph_stats(graph: MacroGraph) -> GraphStats:
    n, m = graph.n_nodes, graph.n_edges
    density = 2.0 * m / (n * (n - 1)) if n >= 2 else 0.0
    return GraphStats(n, m, density)
