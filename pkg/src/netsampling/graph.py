"""Immutable undirected graph with binary node categories."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

CATEGORY_A = "A"
CATEGORY_B = "B"


class GraphError(ValueError):
    """Raised for malformed graphs or unknown node ids."""


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    """Proportion of nodes per degree, ``p(k)``."""

    probabilities: dict[int, float]

    def __post_init__(self):
        if not self.probabilities:
            raise ValueError("empty degree distribution")
        if any(p < 0 for p in self.probabilities.values()):
            raise ValueError("negative probability")
        total = sum(self.probabilities.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @classmethod
    def from_weights(cls, weights: dict[int, float]) -> "DegreeDistribution":
        total = float(sum(weights.values()))
        if total <= 0:
            raise ValueError("weights must have positive mass")
        return cls({int(k): float(w) / total for k, w in sorted(weights.items()) if w > 0})

    @property
    def degrees(self) -> np.ndarray:
        return np.array(sorted(self.probabilities), dtype=np.int64)

    @property
    def probs(self) -> np.ndarray:
        return np.array([self.probabilities[k] for k in sorted(self.probabilities)])

    @property
    def mean(self) -> float:
        return float(np.dot(self.degrees, self.probs))


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph in CSR form.

    ``indptr``/``indices`` hold sorted, duplicate-free neighbor lists and
    ``is_a`` marks category-A nodes (everything else is category B).
    Arrays are made read-only on construction.
    """

    indptr: np.ndarray
    indices: np.ndarray
    is_a: np.ndarray

    def __post_init__(self):
        for arr in (self.indptr, self.indices, self.is_a):
            arr.flags.writeable = False

    @classmethod
    def from_edges(
        cls,
        num_nodes: int,
        edges: Iterable[tuple[int, int]] | np.ndarray,
        is_a: Iterable[bool] | np.ndarray | None = None,
    ) -> "Graph":
        """Build a graph from an undirected edge list.

        Each edge must be listed once; self-loops and repeated edges (in
        either orientation) raise :class:`GraphError`.
        """
        if num_nodes < 0:
            raise GraphError("negative node count")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= num_nodes):
            raise GraphError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            bad = e[e[:, 0] == e[:, 1]][0]
            raise GraphError(f"self-loop at node {int(bad[0])}")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        keys = lo * num_nodes + hi
        if len(np.unique(keys)) != len(keys):
            raise GraphError("parallel edges are not allowed")

        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(num_nodes + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)

        if is_a is None:
            cats = np.zeros(num_nodes, dtype=bool)
        else:
            cats = np.asarray(list(is_a) if not isinstance(is_a, np.ndarray) else is_a, dtype=bool)
            if cats.shape != (num_nodes,):
                raise GraphError("category array length does not match node count")
        return cls(indptr, dst.astype(np.int64), cats.copy())

    @property
    def num_nodes(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.diff(self.indptr)
        d.flags.writeable = False
        return d

    @property
    def volume(self) -> int:
        return int(self.degrees.sum())

    @cached_property
    def adjacency(self) -> list[list[int]]:
        """Plain-Python neighbor lists; sampler inner loops index these."""
        ind = self.indices.tolist()
        ptr = self.indptr.tolist()
        return [ind[ptr[v]:ptr[v + 1]] for v in range(self.num_nodes)]

    def _check(self, v: int) -> int:
        if not 0 <= v < self.num_nodes:
            raise GraphError(f"unknown node id {v}")
        return int(v)

    def neighbors(self, v: int) -> np.ndarray:
        v = self._check(v)
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def edges(self) -> np.ndarray:
        """Each undirected edge once as ``(u, v)`` with ``u < v``."""
        src = np.repeat(np.arange(self.num_nodes), self.degrees)
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])

    def category(self, v: int) -> str:
        return CATEGORY_A if self.is_a[self._check(v)] else CATEGORY_B

    @cached_property
    def component_labels(self) -> np.ndarray:
        labels = np.full(self.num_nodes, -1, dtype=np.int64)
        adj = self.adjacency
        current = 0
        for start in range(self.num_nodes):
            if labels[start] >= 0:
                continue
            labels[start] = current
            stack = [start]
            while stack:
                u = stack.pop()
                for w in adj[u]:
                    if labels[w] < 0:
                        labels[w] = current
                        stack.append(w)
            current += 1
        labels.flags.writeable = False
        return labels


def degree(g: Graph, v: int) -> int:
    return int(g.degrees[g._check(v)])


def degree_distribution(g: Graph) -> DegreeDistribution:
    if g.num_nodes == 0:
        raise GraphError("empty graph has no degree distribution")
    counts = Counter(g.degrees.tolist())
    return DegreeDistribution({k: c / g.num_nodes for k, c in sorted(counts.items())})


def connected_components(g: Graph) -> list[set[int]]:
    comps: dict[int, set[int]] = {}
    for v, lab in enumerate(g.component_labels.tolist()):
        comps.setdefault(lab, set()).add(v)
    return [comps[k] for k in sorted(comps)]


def category_counts(g: Graph) -> tuple[int, int]:
    n_a = int(g.is_a.sum())
    return n_a, g.num_nodes - n_a


def check_invariants(g: Graph) -> None:
    """Full scan of symmetry, simplicity and volume; raises GraphError."""
    adj = g.adjacency
    for v, nb in enumerate(adj):
        if any(b <= a for a, b in zip(nb, nb[1:])):
            raise GraphError(f"neighbor list of {v} not strictly sorted")
        if v in nb:
            raise GraphError(f"self-loop at {v}")
        for w in nb:
            if not g.has_edge(w, v):
                raise GraphError(f"asymmetric edge {v}-{w}")
    if g.volume != 2 * g.edge_count:
        raise GraphError("volume does not equal twice the edge count")


def load_graph(edge_path: str | Path, category_path: str | Path | None = None) -> Graph:
    """Read an edge-list file (``u v`` per line) and optional ``node label`` file."""
    edges = []
    max_id = -1
    for lineno, line in enumerate(Path(edge_path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"{edge_path}:{lineno}: expected 'u v'")
        u, v = int(parts[0]), int(parts[1])
        edges.append((u, v))
        max_id = max(max_id, u, v)

    labels: dict[int, bool] = {}
    if category_path is not None:
        for lineno, line in enumerate(Path(category_path).read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2 or parts[1] not in (CATEGORY_A, CATEGORY_B):
                raise GraphError(f"{category_path}:{lineno}: expected 'node_id A|B'")
            labels[int(parts[0])] = parts[1] == CATEGORY_A
        max_id = max(max_id, max(labels, default=-1))

    n = max_id + 1
    is_a = np.zeros(n, dtype=bool)
    for v, flag in labels.items():
        is_a[v] = flag
    return Graph.from_edges(n, edges, is_a)


def save_graph(g: Graph, edge_path: str | Path, category_path: str | Path) -> None:
    lines = [f"{u} {v}" for u, v in g.edges().tolist()]
    Path(edge_path).write_text("\n".join(lines) + ("\n" if lines else ""))
    cats = [f"{v} {CATEGORY_A if a else CATEGORY_B}" for v, a in enumerate(g.is_a.tolist())]
    Path(category_path).write_text("\n".join(cats) + ("\n" if cats else ""))
