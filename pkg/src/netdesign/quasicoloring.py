"""Bidegree measures, perfect quasi-colorings and the Wasserstein norm.

The bidegree of ``v`` under a treatment ``T`` is the pair
``(|T ∩ N(v)|, |N(v) \\ T|)``.  The signed measure ``D_T`` puts mass
``pq(T, v) / pqn`` on the bidegree of every vertex, where ``pq(T, v)`` is
``q`` for treated and ``-p`` for untreated vertices.  ``T`` is a perfect
quasi-coloring when ``D_T`` vanishes.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .design import DesignError, ExperimentConfig, Partition, Treatment, TypePartition
from .graph import Graph, GraphError
from .interference import LipschitzBudget, Typed, bidegree_domain, dK_matrix

DEFAULT_SEARCH_CAP = 24
MASS_TOL = 1e-12


class QuasiColoringError(ValueError):
    pass


@dataclass(frozen=True)
class BidegreeMeasure:
    """Finite signed measure on bidegree pairs; zero atoms are dropped."""

    atoms: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {(int(a), int(b)): float(m) for (a, b), m in self.atoms.items() if m != 0}
        object.__setattr__(self, "atoms", dict(sorted(clean.items())))

    @property
    def total_mass(self) -> float:
        return math.fsum(self.atoms.values())

    @property
    def total_variation(self) -> float:
        return math.fsum(abs(m) for m in self.atoms.values())

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(m) <= tol for m in self.atoms.values())

    def swapped(self) -> "BidegreeMeasure":
        """Push-forward under ``(a, b) -> (b, a)``."""
        return BidegreeMeasure({(b, a): m for (a, b), m in self.atoms.items()})

    def __add__(self, other: "BidegreeMeasure") -> "BidegreeMeasure":
        out = Counter()
        for src in (self.atoms, other.atoms):
            for u, m in src.items():
                out[u] += m
        return BidegreeMeasure(dict(out))

    def __neg__(self) -> "BidegreeMeasure":
        return BidegreeMeasure({u: -m for u, m in self.atoms.items()})

    def scaled(self, c: float) -> "BidegreeMeasure":
        return BidegreeMeasure({u: c * m for u, m in self.atoms.items()})

    def write(self, path) -> None:
        Path(path).write_text("".join(f"{a} {b} {m!r}\n" for (a, b), m in self.atoms.items()))

    @classmethod
    def read(cls, path) -> "BidegreeMeasure":
        atoms = {}
        for ln in Path(path).read_text().splitlines():
            if ln.strip():
                a, b, m = ln.split()
                atoms[(int(a), int(b))] = atoms.get((int(a), int(b)), 0.0) + float(m)
        return cls(atoms)


def bidegrees(g: Graph, mask: np.ndarray) -> np.ndarray:
    """``(N, 2)`` array of (treated, untreated) neighbour counts."""
    a = g.adjacency_matrix @ np.asarray(mask, dtype=np.int64)
    return np.stack([a, g.degrees - a], axis=1)


def _signed_counts(g: Graph, mask: np.ndarray, cfg: ExperimentConfig, vertices=None) -> Counter:
    bd = bidegrees(g, mask)
    out: Counter = Counter()
    vs = range(g.num_vertices) if vertices is None else vertices
    for v in vs:
        out[(int(bd[v, 0]), int(bd[v, 1]))] += cfg.q if mask[v] else -cfg.p
    return out


def bidegree_measure(g: Graph, T: Treatment) -> BidegreeMeasure:
    g.require_no_isolated()
    cfg = T.config
    cfg.check_graph(g)
    counts = _signed_counts(g, T.mask, cfg)
    pqn = cfg.p * cfg.q * cfg.n
    return BidegreeMeasure({u: c / pqn for u, c in counts.items()})


def typed_bidegree_measures(g: Graph, T: Treatment, types: TypePartition) -> dict[int, BidegreeMeasure]:
    """One measure per type part (keyed by part index)."""
    g.require_no_isolated()
    cfg = T.config
    types.validate(g.num_vertices)
    pqn = cfg.p * cfg.q * cfg.n
    out = {}
    for i, part in enumerate(types.parts):
        k = int(T.mask[list(part)].sum())
        if k * cfg.r != cfg.p * len(part):
            raise QuasiColoringError(f"part {i}: {k} treated of {len(part)}, need p|part|/r")
        counts = _signed_counts(g, T.mask, cfg, part)
        out[i] = BidegreeMeasure({u: c / pqn for u, c in counts.items()})
    return out


def _half_config(g: Graph, Q) -> tuple[ExperimentConfig, np.ndarray]:
    N = g.num_vertices
    if N % 2:
        raise QuasiColoringError("perfect quasi-colorings need an even number of vertices")
    cfg = ExperimentConfig(1, 2, N // 2)
    mask = np.zeros(N, dtype=bool)
    mask[list(Q)] = True
    if mask.sum() != N // 2 or len(set(Q)) != N // 2:
        raise QuasiColoringError(f"|Q| must be {N // 2}")
    return cfg, mask


def is_perfect_quasicoloring(g: Graph, Q: Iterable[int], types: TypePartition | None = None) -> bool:
    """Exact check that Q and its complement have the same bidegree multiset
    (within every type part when ``types`` is given)."""
    g.require_no_isolated()
    Q = list(Q)
    cfg, mask = _half_config(g, Q)
    parts = types.parts if types is not None else (tuple(range(g.num_vertices)),)
    if types is not None:
        types.validate(g.num_vertices)
    for part in parts:
        if 2 * int(mask[list(part)].sum()) != len(part):
            return False
        if any(_signed_counts(g, mask, cfg, part).values()):
            return False
    return True


def find_perfect_quasicoloring(
    g: Graph, types: TypePartition | None = None, cap: int = DEFAULT_SEARCH_CAP
) -> frozenset[int] | None:
    """Exhaustive search for a perfect quasi-coloring.

    Returns the witness whose sorted vertex tuple is lexicographically
    smallest (it contains vertex 0, since complements of witnesses are
    witnesses), or ``None``.  Depth-first over vertices in index order, pruning on
    per-class quotas and on the bidegree imbalance of completed vertices.
    """
    g.require_no_isolated()
    N = g.num_vertices
    if N > cap:
        raise QuasiColoringError(f"{N} vertices exceed the exhaustive search cap {cap}")
    if N % 2:
        raise QuasiColoringError("perfect quasi-colorings need an even number of vertices")
    part_of = types.part_of if types is not None else np.zeros(N, dtype=np.int64)
    if types is not None:
        types.validate(N)
    deg = g.degrees
    cls = [(int(part_of[v]), int(deg[v])) for v in range(N)]
    class_size = Counter(cls)
    if any(c % 2 for c in class_size.values()):
        return None
    adj = g.adjacency
    completes_at: list[list[int]] = [[] for _ in range(N)]
    for v in range(N):
        completes_at[max([v, *adj[v]])].append(v)

    state = [-1] * N
    in_q = Counter()
    out_q = Counter()
    pending = Counter(class_size)   # vertices per class whose bidegree is not yet fixed
    imb = Counter()                 # (class, a) -> #Q - #complement
    abs_imb = Counter()             # class -> sum of |imb|

    def feasible(c) -> bool:
        return abs_imb[c] <= pending[c]

    def complete(v) -> tuple:
        a = sum(1 for w in adj[v] if state[w] == 1)
        c = cls[v]
        key = (c, a)
        s = 1 if state[v] == 1 else -1
        before = abs(imb[key])
        imb[key] += s
        abs_imb[c] += abs(imb[key]) - before
        pending[c] -= 1
        return key, s, c, before

    def undo(rec) -> None:
        key, s, c, before = rec
        abs_imb[c] -= abs(imb[key]) - before
        imb[key] -= s
        pending[c] += 1

    def dfs(k: int) -> bool:
        if k == N:
            return True
        c = cls[k]
        half = class_size[c] // 2
        choices = (1,) if k == 0 else (1, 0)
        for choice in choices:
            counter = in_q if choice else out_q
            if counter[c] >= half:
                continue
            state[k] = choice
            counter[c] += 1
            recs = [complete(v) for v in completes_at[k]]
            ok = all(feasible(rc[2]) for rc in recs)
            if ok and dfs(k + 1):
                return True
            for rc in reversed(recs):
                undo(rc)
            counter[c] -= 1
            state[k] = -1
        return False

    if dfs(0):
        return frozenset(v for v in range(N) if state[v] == 1)
    return None


# -- optimal transport --------------------------------------------------------

@dataclass(frozen=True)
class WassersteinResult:
    value: float
    plan: list = field(default_factory=list)   # (source atom, sink atom, mass)


def _transport_simplex(supply: np.ndarray, demand: np.ndarray, C: np.ndarray, tol: float):
    """Balanced transportation problem by the MODI / stepping-stone method.

    Returns the flow matrix.  Bland-style selection (first improving cell,
    first blocking cell) keeps degenerate pivots from cycling.
    """
    m, n = C.shape
    X = np.zeros((m, n))
    basis: set[tuple[int, int]] = set()
    s, d = supply.astype(float).copy(), demand.astype(float).copy()
    i = j = 0
    while i < m and j < n:
        x = min(s[i], d[j])
        X[i, j] = x
        basis.add((i, j))
        s[i] -= x
        d[j] -= x
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif s[i] <= d[j]:
            i += 1
        else:
            j += 1

    max_iter = 50 * (m + n) ** 2 + 100
    for _ in range(max_iter):
        # potentials: u_i + v_j = C_ij on basic cells
        u = np.full(m, np.nan)
        v = np.full(n, np.nan)
        u[0] = 0.0
        rows_of = [[] for _ in range(n)]
        cols_of = [[] for _ in range(m)]
        for (bi, bj) in basis:
            cols_of[bi].append(bj)
            rows_of[bj].append(bi)
        queue = deque([("r", 0)])
        while queue:
            kind, k = queue.popleft()
            if kind == "r":
                for bj in cols_of[k]:
                    if np.isnan(v[bj]):
                        v[bj] = C[k, bj] - u[k]
                        queue.append(("c", bj))
            else:
                for bi in rows_of[k]:
                    if np.isnan(u[bi]):
                        u[bi] = C[bi, k] - v[k]
                        queue.append(("r", bi))
        R = C - u[:, None] - v[None, :]
        entering = None
        for ii in range(m):
            for jj in range(n):
                if (ii, jj) not in basis and R[ii, jj] < -tol:
                    entering = (ii, jj)
                    break
            if entering:
                break
        if entering is None:
            return X
        ei, ej = entering
        # tree path from column ej back to row ei
        start, goal = ("c", ej), ("r", ei)
        parent = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            kind, k = node
            nbrs = [("r", bi) for bi in rows_of[k]] if kind == "c" else [("c", bj) for bj in cols_of[k]]
            for nb in nbrs:
                if nb not in parent:
                    parent[nb] = node
                    queue.append(nb)
        path = []
        node = goal
        while parent[node] is not None:
            prev = parent[node]
            cell = (node[1], prev[1]) if node[0] == "r" else (prev[1], node[1])
            path.append(cell)
            node = prev
        path.reverse()  # cells from column ej towards row ei
        minus = path[0::2]
        plus = path[1::2]
        theta = min(X[c] for c in minus)
        leaving = min(c for c in minus if X[c] <= theta)
        X[entering] += theta
        for c in minus:
            X[c] -= theta
        for c in plus:
            X[c] += theta
        X[leaving] = 0.0
        basis.remove(leaving)
        basis.add(entering)
    raise RuntimeError("transportation simplex did not converge")


def wasserstein_norm(D: BidegreeMeasure, budget: LipschitzBudget, dmax: int) -> WassersteinResult:
    """Optimal cost of moving the positive part of ``D`` onto its negative part
    under the d_K ground metric."""
    scale = max(1.0, D.total_variation)
    if abs(D.total_mass) > MASS_TOL * scale:
        raise QuasiColoringError(f"measure has total mass {D.total_mass}, expected 0")
    src = [(u, m) for u, m in D.atoms.items() if m > 0]
    snk = [(u, -m) for u, m in D.atoms.items() if m < 0]
    if not src or not snk:
        return WassersteinResult(0.0, [])
    supply = np.array([m for _, m in src])
    demand = np.array([m for _, m in snk])
    demand *= supply.sum() / demand.sum()
    C = dK_matrix(budget, dmax, np.array([u for u, _ in src]), np.array([u for u, _ in snk]))
    X = _transport_simplex(supply, demand, C, tol=1e-13 * max(1.0, float(C.max())))
    plan = [
        (src[i][0], snk[j][0], float(X[i, j]))
        for i in range(len(src))
        for j in range(len(snk))
        if X[i, j] > 0
    ]
    value = math.fsum(m * float(C[i, j]) for i in range(len(src)) for j in range(len(snk)) if (m := X[i, j]) > 0)
    return WassersteinResult(value, plan)


def domain_diameter(budget: LipschitzBudget, g: Graph) -> float:
    """Largest d_K distance between two bidegrees of the graph."""
    g.require_no_isolated()
    dom = np.array(bidegree_domain(g.degrees))
    return float(dK_matrix(budget, int(g.degrees.max()), dom).max())


# -- partition constant and xi --------------------------------------------------

def c_p(partition: Partition, g: Graph, cfg: ExperimentConfig) -> float:
    """Within-block degree spread ``2 / (dmax (r-1)) * sum |d(v) - d(v')|``."""
    partition.validate(cfg)
    deg = g.degrees
    dmax = int(deg.max())
    if dmax == 0:
        raise GraphError("C_P is undefined on an edgeless graph")
    total = sum(abs(int(deg[u]) - int(deg[v])) for b in partition.blocks for u, v in itertools.combinations(b, 2))
    return 2.0 * total / (dmax * (cfg.r - 1))


def xi_via_measure(spec, D) -> float:
    """``sum_u f(u) D(u)``; for typed specs ``D`` maps part index -> measure."""
    if isinstance(spec, Typed):
        if not isinstance(D, Mapping) or isinstance(D, BidegreeMeasure):
            raise QuasiColoringError("typed spec needs one measure per part")
        return math.fsum(
            spec.specs[i].f(a, b) * m for i, Di in D.items() for (a, b), m in Di.atoms.items()
        )
    if isinstance(D, BidegreeMeasure):
        return math.fsum(spec.f(a, b) * m for (a, b), m in D.atoms.items())
    return math.fsum(spec.f(a, b) * m for Di in D.values() for (a, b), m in Di.atoms.items())
