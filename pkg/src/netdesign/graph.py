"""Undirected simple graphs, degree statistics and random-graph generators."""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    pass


class IsolatedVertexWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph on vertices ``0 .. num_vertices-1``.

    ``adjacency[v]`` is the sorted tuple of neighbours of ``v``.
    """

    num_vertices: int
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.adjacency], dtype=np.int64)

    @cached_property
    def adjacency_matrix(self) -> np.ndarray:
        A = np.zeros((self.num_vertices, self.num_vertices), dtype=np.int64)
        for v, nb in enumerate(self.adjacency):
            A[v, list(nb)] = 1
        A.setflags(write=False)
        return A

    @cached_property
    def neighbor_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(nb) for nb in self.adjacency)

    @property
    def has_isolated_vertices(self) -> bool:
        return bool(np.any(self.degrees == 0))

    @property
    def num_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(v, w) for v, nb in enumerate(self.adjacency) for w in nb if v < w]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, v: int, w: int) -> bool:
        return w in self.neighbor_sets[v]

    def require_no_isolated(self) -> None:
        if self.has_isolated_vertices:
            iso = np.flatnonzero(self.degrees == 0)
            raise GraphError(
                f"graph has {iso.size} isolated vertices (first: {int(iso[0])}); "
                "bidegree metrics and bounds need every vertex to have a neighbour"
            )


@dataclass(frozen=True)
class DegreeStats:
    dmin: int
    dmax: int
    degree_histogram: dict[int, int]


def build_graph(num_vertices: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Build a :class:`Graph` from an edge list.

    Raises :class:`GraphError` on out-of-range indices, self-loops and
    duplicate edges (``(u, v)`` and ``(v, u)`` count as the same edge).
    Isolated vertices are allowed but trigger :class:`IsolatedVertexWarning`.
    """
    if num_vertices < 1:
        raise GraphError("num_vertices must be positive")
    nbrs: list[set[int]] = [set() for _ in range(num_vertices)]
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if not (0 <= u < num_vertices and 0 <= v < num_vertices):
            raise GraphError(f"edge ({u}, {v}) out of range for {num_vertices} vertices")
        if u == v:
            raise GraphError(f"self-loop at vertex {u}")
        if v in nbrs[u]:
            raise GraphError(f"duplicate edge ({u}, {v})")
        nbrs[u].add(v)
        nbrs[v].add(u)
    g = Graph(num_vertices, tuple(tuple(sorted(s)) for s in nbrs))
    if g.has_isolated_vertices:
        warnings.warn(
            f"graph has {int(np.sum(g.degrees == 0))} isolated vertices",
            IsolatedVertexWarning,
            stacklevel=2,
        )
    return g


def _from_adjacency_matrix(A: np.ndarray) -> Graph:
    rows = tuple(tuple(int(w) for w in np.flatnonzero(row)) for row in A)
    g = Graph(A.shape[0], rows)
    if g.has_isolated_vertices:
        warnings.warn(
            f"graph has {int(np.sum(g.degrees == 0))} isolated vertices",
            IsolatedVertexWarning,
            stacklevel=3,
        )
    return g


def degree_stats(g: Graph) -> DegreeStats:
    deg = g.degrees
    hist = Counter(int(d) for d in deg)
    return DegreeStats(int(deg.min()), int(deg.max()), dict(sorted(hist.items())))


# -- canonical graphs -------------------------------------------------------

def cycle_graph(k: int) -> Graph:
    if k < 3:
        raise GraphError("a cycle needs at least 3 vertices")
    return build_graph(k, [(i, (i + 1) % k) for i in range(k)])


def path_graph(k: int) -> Graph:
    return build_graph(k, [(i, i + 1) for i in range(k - 1)])


def complete_graph(k: int) -> Graph:
    return build_graph(k, [(i, j) for i in range(k) for j in range(i + 1, k)])


def clique_plus_isolated(k: int) -> Graph:
    """Complete graph on ``2k`` vertices plus ``2k`` isolated vertices.

    Vertices ``0 .. 2k-1`` form the clique.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IsolatedVertexWarning)
        return build_graph(4 * k, [(i, j) for i in range(2 * k) for j in range(i + 1, 2 * k)])


# -- random graphs ------------------------------------------------------------

def gen_erdos_renyi(n_vertices: int, edge_prob: float, seed=None) -> Graph:
    """G(N, p): every unordered pair is an edge independently with prob ``edge_prob``."""
    if not 0.0 <= edge_prob <= 1.0:
        raise GraphError(f"edge_prob must lie in [0, 1], got {edge_prob}")
    rng = np.random.default_rng(seed)
    U = rng.random((n_vertices, n_vertices))
    A = np.triu(U < edge_prob, k=1)
    A = (A | A.T).astype(np.int64)
    return _from_adjacency_matrix(A)


def gen_preferential_attachment(n_vertices: int, pow: float, m: int, seed=None) -> Graph:
    """Preferential attachment growth from a single vertex.

    Each arriving vertex picks ``min(m, #existing)`` distinct targets, drawn
    one at a time without replacement with probability proportional to
    ``max(d(v), 1) ** pow`` among the remaining candidates.
    """
    if m < 1:
        raise GraphError("m must be a positive integer")
    if pow < 0:
        raise GraphError("pow must be nonnegative")
    if n_vertices <= m:
        raise GraphError(f"need n_vertices > m, got n_vertices={n_vertices}, m={m}")
    rng = np.random.default_rng(seed)
    deg = np.zeros(n_vertices, dtype=np.float64)
    edges: list[tuple[int, int]] = []
    for new in range(1, n_vertices):
        weights = np.maximum(deg[:new], 1.0) ** pow
        k = min(m, new)
        targets: list[int] = []
        for _ in range(k):
            probs = weights / weights.sum()
            t = int(rng.choice(new, p=probs))
            targets.append(t)
            weights[t] = 0.0
        for t in targets:
            edges.append((t, new))
            deg[t] += 1
            deg[new] += 1
    return build_graph(n_vertices, edges)


def gen_copies_graph(h: Graph, type_blocks: Sequence[Iterable[int]] | None = None):
    """``2**|V(H)|`` disjoint copies of ``h``, indexed by ``eps in {0,1}^V(H)``.

    Vertex ``(v, eps)`` gets index ``v * 2**|V(H)| + eps`` where bit ``w`` of
    the integer ``eps`` is ``eps_w``; edges join ``(v, eps)`` and ``(w, eps)``
    whenever ``v ~ w`` in ``h``.

    Returns ``(graph, type_parts, Q)``: ``type_parts`` lifts ``type_blocks``
    (a partition of V(H), singletons by default) to ``pi x {0,1}^V(H)`` and
    ``Q = {(v, eps) : eps_v = 1}``.
    """
    k = h.num_vertices
    if k <= 1:
        raise GraphError("copies construction needs |V(H)| > 1")
    size = 1 << k

    def idx(v: int, eps: int) -> int:
        return v * size + eps

    edges = [(idx(v, eps), idx(w, eps)) for eps in range(size) for v, w in h.edges()]
    g = build_graph(k * size, edges)
    if type_blocks is None:
        type_blocks = [[v] for v in range(k)]
    parts = [sorted(idx(v, eps) for v in blk for eps in range(size)) for blk in type_blocks]
    covered = sorted(x for p in parts for x in p)
    if covered != list(range(k * size)):
        raise GraphError("type_blocks must partition the vertices of h")
    Q = frozenset(idx(v, eps) for v in range(k) for eps in range(size) if (eps >> v) & 1)
    return g, parts, Q


# -- edge-list files ----------------------------------------------------------

def write_edgelist(g: Graph, path) -> None:
    edges = sorted(g.edges())
    lines = [f"{g.num_vertices} {len(edges)}"] + [f"{u} {v}" for u, v in edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path) -> Graph:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows:
        raise GraphError(f"{path}: empty graph file")
    nv, ne = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != ne:
        raise GraphError(f"{path}: header announces {ne} edges, found {len(body)}")
    return build_graph(nv, [(int(a), int(b)) for a, b in body])
