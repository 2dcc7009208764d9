"""Corpus-scale pairwise similarity: engine dispatch, parallelism, statistics.

Pairs are enumerated in row-major upper-triangle order and split into
contiguous blocks, one per task. Every pair value is a pure function of the
two graphs and the engine settings, so the assembled matrix does not depend
on the number of workers or on scheduling.
"""

from __future__ import annotations

import enum
import io
import json
import time
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from macrosim.fingerprint import FingerprintParams
from macrosim.ged import DEFAULT_BUDGET, BudgetExceeded, EditCostConfig, ged_exact, label_distance
from macrosim.kernel import KernelConfig, feature_map, kernel_from_features
from macrosim.macrofile import (
    DEFAULT_EDGE_PARAMS,
    DEFAULT_NODE_PARAMS,
    FeaturizationScheme,
    FingerprintScheme,
    MacroGraph,
    OneHotScheme,
    featurize,
    load_graph,
)
from macrosim.substitution import SubstitutionMatrix, build_substitution_matrix

__all__ = [
    "expand_paths",
    "Corpus",
    "CorpusError",
    "GedEngine",
    "KernelEngine",
    "Status",
    "SimilarityReport",
    "MatrixStats",
    "load_corpus",
    "pairwise",
    "row_max_normalize",
    "matrix_stats",
    "read_matrix_csv",
    "matrix_to_csv",
    "write_report",
    "HISTOGRAM_BINS",
]

HISTOGRAM_BINS = 50


class CorpusError(ValueError):
    pass


class Status(str, enum.Enum):
    COMPUTED = "computed"
    # kernel pair that shares no bucket in any iteration; the value 0 is a
    # floor of the method rather than a measured dissimilarity
    ZERO_CAPPED = "zero-capped"
    BUDGET_EXCEEDED = "budget-exceeded"
    ERROR = "error"


@dataclass(frozen=True, eq=False)
class Corpus:
    """Named graphs sharing one SMILES library and one featurization."""

    ids: tuple[str, ...]
    graphs: tuple[MacroGraph, ...]
    library: Mapping[str, str] = field(default_factory=dict)
    scheme: FeaturizationScheme | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "graphs", tuple(self.graphs))
        object.__setattr__(self, "library", dict(self.library))
        if len(self.ids) != len(self.graphs):
            raise CorpusError("ids and graphs differ in length")
        if len(set(self.ids)) != len(self.ids):
            raise CorpusError("corpus ids must be unique")
        dims = {(g.node_attrs is None, None if g.node_attrs is None else g.node_attrs.shape[1])
                for g in self.graphs if g.n_nodes}
        if len(dims) > 1:
            raise CorpusError("graphs are not featurized identically")

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_graphs(cls, graphs: Sequence[MacroGraph], ids: Sequence[str] | None = None,
                    library: Mapping[str, str] | None = None) -> Corpus:
        ids = tuple(ids) if ids is not None else tuple(f"g{i}" for i in range(len(graphs)))
        return cls(ids, tuple(graphs), library or {})

    def featurized(self, scheme: FeaturizationScheme) -> Corpus:
        graphs = tuple(featurize(g, scheme, self.library) for g in self.graphs)
        return Corpus(self.ids, graphs, self.library, scheme)


def _merge_library(target: dict[str, str], source: Mapping[str, str], origin: str) -> None:
    for name, smi in source.items():
        if target.setdefault(name, smi) != smi:
            raise CorpusError(f"{origin}: SMILES for {name!r} conflicts with an earlier file")


def expand_paths(paths: Iterable[str | Path]) -> list[Path]:
    """Files as given; directories replaced by their ``*.txt`` files in name order."""
    out: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(p.glob("*.txt")))
        else:
            out.append(p)
    return out


def load_corpus(paths: Iterable[str | Path], features: str | FeaturizationScheme | None = "fingerprint",
                node_params: FingerprintParams = DEFAULT_NODE_PARAMS,
                edge_params: FingerprintParams = DEFAULT_EDGE_PARAMS) -> Corpus:
    """Read macromolecule files; directories contribute their ``*.txt`` files
    in name order.

    Ids are file stems. ``features`` is ``"fingerprint"``, ``"onehot"``, a
    scheme instance, or ``None`` to leave graphs unfeaturized.
    """
    files = expand_paths(paths)
    if not files:
        raise CorpusError("no input files")
    ids, graphs, library = [], [], {}
    for path in files:
        graph, lib = load_graph(path)
        _merge_library(library, lib, str(path))
        ids.append(path.stem)
        graphs.append(graph)
    if len(set(ids)) != len(ids):
        raise CorpusError("input files share a name stem")
    corpus = Corpus(tuple(ids), tuple(graphs), library)
    if features is None:
        return corpus
    if features == "fingerprint":
        scheme: FeaturizationScheme = FingerprintScheme(node_params, edge_params)
    elif features == "onehot":
        scheme = OneHotScheme.from_graphs(graphs)
    elif isinstance(features, (FingerprintScheme, OneHotScheme)):
        scheme = features
    else:
        raise ValueError(f"unknown featurization {features!r}")
    return corpus.featurized(scheme)


@dataclass(frozen=True)
class GedEngine:
    """Exact edit distance; labels are compared through substitution matrices.

    Without explicit matrices, node and edge matrices are built from the
    corpus library with the default fingerprint settings. A corpus without
    a library falls back to 0/1 label equality.
    """

    costs: EditCostConfig = EditCostConfig()
    budget: int = DEFAULT_BUDGET
    node_matrix: SubstitutionMatrix | None = None
    edge_matrix: SubstitutionMatrix | None = None

    kind = "ged"

    def resolved(self, corpus: Corpus) -> GedEngine:
        node, edge = self.node_matrix, self.edge_matrix
        if not corpus.library:
            return self
        if node is None:
            names = sorted({lab for g in corpus.graphs for lab in g.labels})
            node = build_substitution_matrix({n: corpus.library[n] for n in names if n in corpus.library},
                                             DEFAULT_NODE_PARAMS)
        if edge is None:
            names = sorted({lab for g in corpus.graphs for _, _, lab in g.edges})
            edge = build_substitution_matrix({n: corpus.library[n] for n in names if n in corpus.library},
                                             DEFAULT_EDGE_PARAMS)
        return GedEngine(self.costs, self.budget, node, edge)

    def describe(self) -> dict:
        return {"engine": "ged", "c_indel": self.costs.c_indel, "c_sub_node": self.costs.c_sub_node,
                "c_sub_edge": self.costs.c_sub_edge, "budget": self.budget}


@dataclass(frozen=True)
class KernelEngine:
    cfg: KernelConfig = KernelConfig()

    kind = "kernel"

    def describe(self) -> dict:
        return {"engine": "kernel", "bin_width": self.cfg.bin_width, "metric": self.cfg.metric,
                "t_max": self.cfg.t_max, "seed": self.cfg.seed}


Engine = Union[GedEngine, KernelEngine]


@dataclass(frozen=True, eq=False)
class MatrixStats:
    pair_zero_fraction: float
    index_zero_fraction: float
    mean: float
    max: float
    histogram: np.ndarray
    bin_edges: np.ndarray

    def to_json(self) -> dict:
        return {"pair_zero_fraction": self.pair_zero_fraction, "index_zero_fraction": self.index_zero_fraction,
                "mean": self.mean, "max": self.max, "histogram": self.histogram.tolist(),
                "bin_edges": self.bin_edges.tolist()}


@dataclass(frozen=True, eq=False)
class SimilarityReport:
    ids: tuple[str, ...]
    matrix: np.ndarray
    status: np.ndarray
    engine: dict
    normalized: np.ndarray | None = None
    errors: dict[tuple[int, int], str] = field(default_factory=dict)
    wall_seconds: float = 0.0

    @property
    def n_pairs(self) -> int:
        n = len(self.ids)
        return n * (n + 1) // 2

    def counts(self) -> dict[str, int]:
        iu = np.triu_indices(len(self.ids))
        upper = self.status[iu]
        return {s.value: int(np.sum(upper == s.value)) for s in Status}

    @property
    def ok(self) -> bool:
        return self.counts()[Status.ERROR.value] == 0

    def to_csv(self, normalized: bool = False) -> str:
        values = self.normalized if normalized else self.matrix
        if values is None:
            raise ValueError("report holds no normalized matrix")
        return matrix_to_csv(self.ids, values)

    def to_json(self, timing: bool = True) -> dict:
        data = {
            "ids": list(self.ids),
            "engine": dict(self.engine),
            "matrix": self.matrix.tolist(),
            "normalized": None if self.normalized is None else self.normalized.tolist(),
            "status": self.status.tolist(),
            "errors": [[i, j, msg] for (i, j), msg in sorted(self.errors.items())],
            "pairs": {"total": self.n_pairs, **self.counts()},
            "stats": matrix_stats(self.matrix).to_json(),
        }
        if timing:
            data["timing"] = {"wall_seconds": self.wall_seconds}
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> SimilarityReport:
        norm = data.get("normalized")
        return cls(
            tuple(data["ids"]),
            np.array(data["matrix"], dtype=float).reshape(len(data["ids"]), len(data["ids"])),
            np.array(data["status"], dtype=object).reshape(len(data["ids"]), len(data["ids"])),
            dict(data["engine"]),
            None if norm is None else np.array(norm, dtype=float),
            {(i, j): msg for i, j, msg in data.get("errors", [])},
            float(data.get("timing", {}).get("wall_seconds", 0.0)),
        )


def matrix_to_csv(ids: Sequence[str], values: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write(",".join(["id", *ids]) + "\n")
    for name, row in zip(ids, values):
        buf.write(",".join([name, *(f"{x:.6f}" for x in row)]) + "\n")
    return buf.getvalue()


def read_matrix_csv(text: str) -> tuple[tuple[str, ...], np.ndarray]:
    """Parse :func:`matrix_to_csv` output back into ids and values."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix CSV")
    ids = tuple(lines[0].split(",")[1:])
    rows = [ln.split(",") for ln in lines[1:]]
    if [r[0] for r in rows] != list(ids) or any(len(r) != len(ids) + 1 for r in rows):
        raise ValueError("matrix CSV is not square or row ids do not match the header")
    return ids, np.array([[float(x) for x in r[1:]] for r in rows], dtype=float).reshape(len(ids), len(ids))


# worker-side state, installed once per process by the pool initializer
_STATE: dict = {}


def _init(graphs: tuple[MacroGraph, ...], engine: Engine) -> None:
    _STATE["graphs"] = graphs
    _STATE["engine"] = engine


def _ged_block(pairs: list[tuple[int, int]]) -> list[tuple[float, str, str | None]]:
    graphs, engine = _STATE["graphs"], _STATE["engine"]
    node = engine.node_matrix.distance if engine.node_matrix is not None else label_distance
    edge = engine.edge_matrix.distance if engine.edge_matrix is not None else label_distance
    out = []
    for i, j in pairs:
        if i == j:
            out.append((0.0, Status.COMPUTED.value, None))
            continue
        try:
            if max(graphs[i].n_nodes, graphs[j].n_nodes) > engine.budget:
                raise BudgetExceeded(graphs[i].n_nodes, graphs[j].n_nodes, engine.budget)
            value, _ = ged_exact(graphs[i], graphs[j], engine.costs, node, edge, engine.budget)
            out.append((value, Status.COMPUTED.value, None))
        except BudgetExceeded:
            out.append((0.0, Status.BUDGET_EXCEEDED.value, None))
        except Exception as exc:  # recorded per pair, surfaced through the report
            out.append((float("nan"), Status.ERROR.value, f"{type(exc).__name__}: {exc}"))
    return out


def _feature_block(indices: list[int]):
    graphs, engine = _STATE["graphs"], _STATE["engine"]
    return [feature_map(graphs[i], engine.cfg) for i in indices]


def _blocks(items: list, n_blocks: int) -> list[list]:
    n_blocks = max(1, min(n_blocks, len(items)))
    size, extra = divmod(len(items), n_blocks)
    out, start = [], 0
    for b in range(n_blocks):
        stop = start + size + (b < extra)
        out.append(items[start:stop])
        start = stop
    return out


def _run(func, blocks: list[list], graphs, engine, workers: int) -> list:
    if workers == 1 or len(blocks) <= 1:
        _init(graphs, engine)
        try:
            return [r for block in blocks for r in func(block)]
        finally:
            _STATE.clear()
    with ProcessPoolExecutor(max_workers=workers, initializer=_init, initargs=(graphs, engine)) as pool:
        return [r for chunk in pool.map(func, blocks) for r in chunk]


def pairwise(corpus: Corpus, engine: Engine, workers: int = 1, normalize: bool = False) -> SimilarityReport:
    """Evaluate every unordered pair (diagonal included) of ``corpus``."""
    if len(corpus) == 0:
        raise CorpusError("corpus is empty")
    if workers < 1:
        raise ValueError("workers must be a positive integer")
    start = time.perf_counter()
    n = len(corpus)
    values = np.zeros((n, n))
    status = np.full((n, n), Status.COMPUTED.value, dtype=object)
    errors: dict[tuple[int, int], str] = {}
    pairs = [(i, j) for i in range(n) for j in range(i, n)]

    if isinstance(engine, KernelEngine):
        if any(g.node_attrs is None for g in corpus.graphs):
            raise CorpusError("kernel engine needs a featurized corpus")
        maps = _run(_feature_block, _blocks(list(range(n)), workers * 4), corpus.graphs, engine, workers)
        for i, j in pairs:
            values[i, j] = values[j, i] = kernel_from_features(maps[i], maps[j])
            if values[i, j] == 0:
                status[i, j] = status[j, i] = Status.ZERO_CAPPED.value
    elif isinstance(engine, GedEngine):
        engine = engine.resolved(corpus)
        results = _run(_ged_block, _blocks(pairs, workers * 4), corpus.graphs, engine, workers)
        for (i, j), (value, st, msg) in zip(pairs, results):
            values[i, j] = values[j, i] = value
            status[i, j] = status[j, i] = st
            if msg is not None:
                errors[(i, j)] = msg
    else:
        raise TypeError(f"unknown engine {engine!r}")

    wall = time.perf_counter() - start
    norm = row_max_normalize(np.nan_to_num(values, nan=0.0)) if normalize else None
    return SimilarityReport(corpus.ids, values, status, engine.describe(), norm, errors, wall)


def row_max_normalize(matrix: np.ndarray) -> np.ndarray:
    """Divide each row by its maximum; all-zero rows are returned unchanged."""
    m = np.array(matrix, dtype=float)
    if np.any(m < 0):
        raise ValueError("row-max normalization needs non-negative entries")
    if m.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    peak = m.max(axis=1, initial=0.0)
    scale = np.where(peak > 0, peak, 1.0)
    return m / scale[:, None]


def matrix_stats(matrix: np.ndarray | SimilarityReport) -> MatrixStats:
    """Zero fractions over unordered pairs (i < j) and over all n*n entries,
    plus mean, max and a histogram of all entries."""
    m = matrix.matrix if isinstance(matrix, SimilarityReport) else np.asarray(matrix, dtype=float)
    n = m.shape[0]
    iu = np.triu_indices(n, k=1)
    pair = float(np.mean(m[iu] == 0)) if n > 1 else 0.0
    index = float(np.mean(m == 0)) if n else 0.0
    finite = m[np.isfinite(m)]
    if finite.size:
        lo, hi = float(finite.min()), float(finite.max())
        counts, edges = np.histogram(finite, bins=HISTOGRAM_BINS, range=(lo, hi if hi > lo else lo + 1.0))
        mean, peak = float(finite.mean()), hi
    else:
        counts, edges = np.zeros(HISTOGRAM_BINS, dtype=np.int64), np.linspace(0.0, 1.0, HISTOGRAM_BINS + 1)
        mean = peak = float("nan")
    return MatrixStats(pair, index, mean, peak, counts, edges)


def write_report(report: SimilarityReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=1) + "\n")
