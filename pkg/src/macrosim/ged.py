"""Exact graph edit distance between labelled monomer graphs.

Cost model: substituting node ``u`` by ``v`` costs ``c_sub_node * node_dist``
of their labels, edges likewise with ``c_sub_edge`` and ``edge_dist``; every
node or edge insertion or deletion costs ``c_indel``. An edit path is fully
determined by an injective partial node map; edge operations are induced.

:func:`ged_exact` runs A* over node assignments taken in index order of the
first graph. The heuristic is a linear-sum-assignment bound: remaining nodes
are matched with the exact cost of their edges to already-assigned nodes.
Edges among unassigned nodes are bounded either by a separate edge matching
or by charging half an indel per unmatched incident edge inside the node
assignment (degree difference); the larger of the two is used.
:func:`ged_brute` evaluates every node map and serves as the oracle.
"""

from __future__ import annotations

import heapq
import math
from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from macrosim.macrofile import MacroGraph

__all__ = [
    "EditCostConfig",
    "EditPath",
    "EditOperation",
    "BudgetExceeded",
    "ged_exact",
    "ged_brute",
    "path_operations",
    "path_cost",
    "label_distance",
    "DEFAULT_BUDGET",
    "BRUTE_LIMIT",
    "COST_GRID",
]

DEFAULT_BUDGET = 12
BRUTE_LIMIT = 7
COST_GRID = (1.0, 3.0, 5.0, 10.0)

Distance = Callable[[str, str], float]


class BudgetExceeded(RuntimeError):
    def __init__(self, n1: int, n2: int, budget: int):
        super().__init__(f"graphs with {n1} and {n2} nodes exceed the exact-search budget of {budget}")
        self.n1, self.n2, self.budget = n1, n2, budget


@dataclass(frozen=True)
class EditCostConfig:
    c_indel: float = 1.0
    c_sub_node: float = 1.0
    c_sub_edge: float = 1.0

    def __post_init__(self) -> None:
        for name in ("c_indel", "c_sub_node", "c_sub_edge"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite number, got {value}")

    @classmethod
    def grid(cls) -> list[EditCostConfig]:
        """The 16 (insertion/deletion, substitution) presets, c_indel-major."""
        return [cls(i, s, s) for i in COST_GRID for s in COST_GRID]


@dataclass(frozen=True)
class EditOperation:
    kind: str  # node-sub, node-del, node-ins, edge-sub, edge-del, edge-ins
    source: tuple[int, ...] | None
    target: tuple[int, ...] | None
    cost: float


@dataclass(frozen=True)
class EditPath:
    mapping: tuple[tuple[int, int], ...]
    deletions: tuple[int, ...]
    insertions: tuple[int, ...]
    cost: float

    @classmethod
    def from_assignment(cls, assignment: tuple[int | None, ...], n2: int, cost: float) -> EditPath:
        mapping = tuple((u, v) for u, v in enumerate(assignment) if v is not None)
        deletions = tuple(u for u, v in enumerate(assignment) if v is None)
        used = {v for _, v in mapping}
        return cls(mapping, deletions, tuple(v for v in range(n2) if v not in used), cost)

    def assignment(self, n1: int) -> tuple[int | None, ...]:
        out: list[int | None] = [None] * n1
        for u, v in self.mapping:
            out[u] = v
        return tuple(out)

    def to_json(self) -> dict:
        return {
            "mapping": [[u, v] for u, v in self.mapping],
            "deletions": list(self.deletions),
            "insertions": list(self.insertions),
            "cost": self.cost,
        }

    @classmethod
    def from_json(cls, data: dict) -> EditPath:
        return cls(tuple((int(u), int(v)) for u, v in data["mapping"]), tuple(data["deletions"]),
                   tuple(data["insertions"]), float(data["cost"]))


def label_distance(a: str, b: str) -> float:
    return 0.0 if a == b else 1.0


class _Problem:
    """Precomputed costs for one graph pair; deletion is encoded as target ``n2``."""

    def __init__(self, g1: MacroGraph, g2: MacroGraph, costs: EditCostConfig,
                 node_dist: Distance, edge_dist: Distance):
        self.g1, self.g2, self.costs = g1, g2, costs
        self.n1, self.n2 = g1.n_nodes, g2.n_nodes
        self.dele = self.n2
        c = costs.c_indel
        self.c = c
        node = np.empty((self.n1, self.n2 + 1))
        for u, a in enumerate(g1.labels):
            for v, b in enumerate(g2.labels):
                node[u, v] = costs.c_sub_node * _checked(node_dist(a, b), a, b)
            node[u, self.n2] = c
        self.node = node
        self.adj1 = [set(x) for x in g1.neighbors()]
        self.adj2 = [set(x) for x in g2.neighbors()]
        self.elab1 = {}
        for u, v, lab in g1.edges:
            self.elab1[u, v] = self.elab1[v, u] = lab
        self.elab2 = {}
        for u, v, lab in g2.edges:
            self.elab2[u, v] = self.elab2[v, u] = lab
        self._esub: dict[tuple[str, str], float] = {}
        self._edge_dist = edge_dist

    def esub(self, a: str, b: str) -> float:
        key = (a, b)
        out = self._esub.get(key)
        if out is None:
            out = self._esub[key] = self.costs.c_sub_edge * _checked(self._edge_dist(a, b), a, b)
        return out

    def operations(self, assign: tuple[int, ...]) -> list[EditOperation]:
        """Every operation of the edit path induced by ``assign`` (``n2`` = deleted)."""
        ops = []
        d = self.dele
        for u, v in enumerate(assign):
            if v == d:
                ops.append(EditOperation("node-del", (u,), None, self.c))
            else:
                ops.append(EditOperation("node-sub", (u,), (v,), float(self.node[u, v])))
        used = {v for v in assign if v != d}
        for v in range(self.n2):
            if v not in used:
                ops.append(EditOperation("node-ins", None, (v,), self.c))
        hit = set()
        for u, v, lab in self.g1.edges:
            fu, fv = assign[u], assign[v]
            if fu != d and fv != d and (fu, fv) in self.elab2:
                ops.append(EditOperation("edge-sub", (u, v), (fu, fv), self.esub(lab, self.elab2[fu, fv])))
                hit.add((min(fu, fv), max(fu, fv)))
            else:
                ops.append(EditOperation("edge-del", (u, v), None, self.c))
        for u, v, _ in self.g2.edges:
            if (u, v) not in hit:
                ops.append(EditOperation("edge-ins", None, (u, v), self.c))
        return ops

    def cost(self, assign: tuple[int, ...]) -> float:
        return math.fsum(op.cost for op in self.operations(assign))

    # --- A* pieces -------------------------------------------------------

    def anchored(self, u: int, v: int, k: int, assign: tuple[int, ...], source_of: dict[int, int]) -> float:
        """Cost of the edges between ``u`` and the assigned nodes ``0..k-1`` when ``u -> v``."""
        d, c = self.dele, self.c
        total = 0.0
        for p in self.adj1[u]:
            if p < k:
                q = assign[p]
                if v != d and q != d and q in self.adj2[v]:
                    total += self.esub(self.elab1[p, u], self.elab2[q, v])
                else:
                    total += c
        if v != d:
            for q in self.adj2[v]:
                p = source_of.get(q)
                if p is not None and p not in self.adj1[u]:
                    total += c
        return total

    def completion(self, assign: tuple[int, ...]) -> float:
        """Insert the unused nodes of g2 and every g2 edge touching them."""
        used = set(assign)
        free = [v for v in range(self.n2) if v not in used]
        edges = sum(1 for u, v, _ in self.g2.edges if u not in used or v not in used)
        return self.c * (len(free) + edges)

    def heuristic(self, assign: tuple[int, ...]) -> float:
        k = len(assign)
        d, c = self.dele, self.c
        rem1 = list(range(k, self.n1))
        used = set(assign)
        rem2 = [v for v in range(self.n2) if v not in used]
        source_of = {q: p for p, q in enumerate(assign) if q != d}
        r1, r2 = len(rem1), len(rem2)
        free = set(rem2)
        inner1 = [lab for u, v, lab in self.g1.edges if u >= k and v >= k]
        inner2 = [lab for u, v, lab in self.g2.edges if u in free and v in free]
        if not (r1 or r2):
            return self._edge_bound(inner1, inner2)
        # m: nodes plus anchored edges (exact per pair); half: each inner edge
        # split over its two endpoints, unmatched half-edges cost c / 2
        big = 1e18
        m = np.full((r1 + r2, r2 + r1), big)
        m[r1:, r2:] = 0.0
        half = np.zeros_like(m)
        deg1 = [sum(1 for p in self.adj1[u] if p >= k) for u in rem1]
        deg2 = [sum(1 for q in self.adj2[v] if q in free) for v in rem2]
        for i, u in enumerate(rem1):
            for j, v in enumerate(rem2):
                m[i, j] = self.node[u, v] + self.anchored(u, v, k, assign, source_of)
                half[i, j] = 0.5 * c * abs(deg1[i] - deg2[j])
            m[i, r2 + i] = c + c * sum(1 for p in self.adj1[u] if p < k)
            half[i, r2 + i] = 0.5 * c * deg1[i]
        for j, v in enumerate(rem2):
            m[r1 + j, j] = c + c * sum(1 for q in self.adj2[v] if q in source_of)
            half[r1 + j, j] = 0.5 * c * deg2[j]
        rows, cols = linear_sum_assignment(m)
        split = float(m[rows, cols].sum()) + self._edge_bound(inner1, inner2)
        if not (inner1 or inner2):
            return split
        joint = m + half
        rows, cols = linear_sum_assignment(joint)
        return max(split, float(joint[rows, cols].sum()))

    def _edge_bound(self, labs1: list[str], labs2: list[str]) -> float:
        m1, m2 = len(labs1), len(labs2)
        base = self.c * abs(m1 - m2)
        if not m1 or not m2:
            return base
        pairs = np.array([[min(self.esub(a, b), 2 * self.c) for b in labs2] for a in labs1])
        if not pairs.any():
            return base
        rows, cols = linear_sum_assignment(pairs)
        return base + float(pairs[rows, cols].sum())


def _checked(value: float, a: str, b: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"distance between {a!r} and {b!r} must lie in [0, 1], got {value}")
    return value


def ged_exact(
    g1: MacroGraph,
    g2: MacroGraph,
    costs: EditCostConfig = EditCostConfig(),
    node_dist: Distance = label_distance,
    edge_dist: Distance = label_distance,
    budget: int = DEFAULT_BUDGET,
) -> tuple[float, EditPath]:
    """Minimal edit cost between ``g1`` and ``g2`` and one optimal edit path.

    Among optimal paths the witness has the lexicographically smallest node
    assignment (deletion ordered after every real target). Raises
    :class:`BudgetExceeded` when either graph has more than ``budget`` nodes.
    """
    if max(g1.n_nodes, g2.n_nodes) > budget:
        raise BudgetExceeded(g1.n_nodes, g2.n_nodes, budget)
    prob = _Problem(g1, g2, costs, node_dist, edge_dist)
    n1, n2, dele = prob.n1, prob.n2, prob.dele

    # heap entries: (f, assignment, g, is_goal)
    heap: list[tuple[float, tuple[int, ...], float, bool]] = []
    if n1 == 0:
        heap.append((prob.completion(()), (), 0.0, True))
    else:
        heap.append((prob.heuristic(()), (), 0.0, False))

    best: tuple[float, tuple[int, ...]] | None = None
    limit = math.inf
    while heap:
        f, assign, g, goal = heapq.heappop(heap)
        if f > limit:
            break
        if goal:
            exact = prob.cost(assign)
            if best is None:
                limit = f + 1e-9 * max(1.0, abs(f))
            if best is None or (exact, assign) < best:
                best = (exact, assign)
            continue
        if best is not None and assign > best[1]:
            # can only reach paths tied with the current best but later in order
            continue
        k = len(assign)
        used = set(assign)
        source_of = {q: p for p, q in enumerate(assign) if q != dele}
        for v in [*(v for v in range(n2) if v not in used), dele]:
            child = assign + (v,)
            gc = g + float(prob.node[k, v]) + prob.anchored(k, v, k, assign, source_of)
            if k + 1 == n1:
                heapq.heappush(heap, (gc + prob.completion(child), child, gc, True))
            else:
                heapq.heappush(heap, (gc + prob.heuristic(child), child, gc, False))

    assert best is not None
    cost, assign = best
    assignment = tuple(None if v == dele else v for v in assign)
    return cost, EditPath.from_assignment(assignment, n2, cost)


@lru_cache(maxsize=None)
def _all_assignments(n1: int, n2: int) -> np.ndarray:
    """Every injective partial map from n1 nodes into n2 nodes (``n2`` = deleted)."""
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], used: set[int]):
        if len(prefix) == n1:
            out.append(tuple(prefix))
            return
        for v in range(n2 + 1):
            if v == n2 or v not in used:
                prefix.append(v)
                if v != n2:
                    used.add(v)
                rec(prefix, used)
                prefix.pop()
                used.discard(v)

    rec([], set())
    arr = np.array(out, dtype=np.int64).reshape(len(out), n1)
    arr.setflags(write=False)
    return arr


def ged_brute(
    g1: MacroGraph,
    g2: MacroGraph,
    costs: EditCostConfig = EditCostConfig(),
    node_dist: Distance = label_distance,
    edge_dist: Distance = label_distance,
    return_path: bool = False,
):
    """Exhaustive edit distance over all node maps, for graphs of at most 7 nodes."""
    if max(g1.n_nodes, g2.n_nodes) > BRUTE_LIMIT:
        raise BudgetExceeded(g1.n_nodes, g2.n_nodes, BRUTE_LIMIT)
    prob = _Problem(g1, g2, costs, node_dist, edge_dist)
    n1, n2, c = prob.n1, prob.n2, prob.c
    maps = _all_assignments(n1, n2)
    total = prob.node[np.arange(n1), maps].sum(axis=1) if n1 else np.zeros(len(maps))
    mapped = (maps < n2).sum(axis=1)
    total = total + (n2 - mapped) * c

    edge_index = np.full((n2 + 1, n2 + 1), -1, dtype=np.int64)
    for e, (u, v, _) in enumerate(g2.edges):
        edge_index[u, v] = edge_index[v, u] = e
    hits = np.zeros(len(maps), dtype=np.int64)
    for u, v, lab in g1.edges:
        idx = edge_index[maps[:, u], maps[:, v]]
        sub = np.array([prob.esub(lab, lab2) for _, _, lab2 in g2.edges] + [c])
        total = total + np.where(idx >= 0, sub[idx], c)
        hits += idx >= 0
    total = total + (g2.n_edges - hits) * c

    lowest = total.min()
    candidates = np.flatnonzero(total <= lowest + 1e-9 * max(1.0, abs(lowest)))
    cost, assign = min((prob.cost(tuple(int(x) for x in maps[i])), tuple(int(x) for x in maps[i]))
                       for i in candidates)
    if not return_path:
        return cost
    assignment = tuple(None if v == n2 else v for v in assign)
    return cost, EditPath.from_assignment(assignment, n2, cost)


def _prepare_assign(g1: MacroGraph, g2: MacroGraph, path: EditPath) -> tuple[int, ...]:
    assign = path.assignment(g1.n_nodes)
    return tuple(g2.n_nodes if v is None else v for v in assign)


def path_operations(g1: MacroGraph, g2: MacroGraph, path: EditPath, costs: EditCostConfig = EditCostConfig(),
                    node_dist: Distance = label_distance, edge_dist: Distance = label_distance) -> list[EditOperation]:
    """Expand ``path`` into its node and induced edge operations."""
    prob = _Problem(g1, g2, costs, node_dist, edge_dist)
    return prob.operations(_prepare_assign(g1, g2, path))


def path_cost(g1: MacroGraph, g2: MacroGraph, path: EditPath, costs: EditCostConfig = EditCostConfig(),
              node_dist: Distance = label_distance, edge_dist: Distance = label_distance) -> float:
    return math.fsum(op.cost for op in path_operations(g1, g2, path, costs, node_dist, edge_dist))
