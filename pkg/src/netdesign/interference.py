"""Symmetric interference functions, Lipschitz constants and the d_K metric.

A symmetric interference function is a function ``f(a, b)`` of the number of
treated (``a``) and untreated (``b``) neighbours of a vertex, with
``f(0, b) = 0``.  :class:`Typed` lets each part of a type partition carry its
own function.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from .design import TypePartition
from .graph import Graph

BRUTE_FORCE_DEGREE_CAP = 20


class InterferenceError(ValueError):
    pass


def _frac(a, b):
    d = a + b
    return a / d if d else 0.0


@dataclass(frozen=True)
class Linear:
    """``f(a, b) = gamma * a``."""

    gamma: float

    def f(self, a: int, b: int) -> float:
        return self.gamma * a

    def lipschitz(self, degree: int) -> float:
        return self.gamma * degree


@dataclass(frozen=True)
class NormalizedLinear:
    """``f(a, b) = gamma * a / (a + b)``."""

    gamma: float

    def f(self, a: int, b: int) -> float:
        return self.gamma * _frac(a, b)

    def lipschitz(self, degree: int) -> float:
        return self.gamma


@dataclass(frozen=True)
class ThresholdCount:
    """``f(a, b) = gamma * min(a, k)``: only the first ``k`` treated neighbours count."""

    gamma: float
    k: int

    def f(self, a: int, b: int) -> float:
        return self.gamma * min(a, self.k)

    def lipschitz(self, degree: int) -> float:
        return self.gamma * degree


@dataclass(frozen=True)
class ThresholdFraction:
    """``f(a, b) = gamma * min(a / (a + b), frac)``; ``frac`` is usually ``p/r``."""

    gamma: float
    frac: float = 0.5

    def f(self, a: int, b: int) -> float:
        return self.gamma * min(_frac(a, b), self.frac)

    def lipschitz(self, degree: int) -> float:
        return self.gamma


class SymmetricTable:
    """Explicit table ``(a, b) -> value``; absent ``(0, b)`` entries read as 0."""

    def __init__(self, table: Mapping[tuple[int, int], float]):
        clean: dict[tuple[int, int], float] = {}
        for (a, b), val in table.items():
            a, b = int(a), int(b)
            if a < 0 or b < 0:
                raise InterferenceError(f"negative bidegree ({a}, {b})")
            if a == 0 and val != 0:
                raise InterferenceError(f"f(0, {b}) = {val}: interference with no treated neighbours must be 0")
            clean[(a, b)] = float(val)
        self.table = clean

    def __repr__(self) -> str:
        return f"SymmetricTable({len(self.table)} entries)"

    def __eq__(self, other) -> bool:
        return isinstance(other, SymmetricTable) and self.table == other.table

    def __hash__(self) -> int:
        return hash(frozenset(self.table.items()))

    def f(self, a: int, b: int) -> float:
        try:
            return self.table[(a, b)]
        except KeyError:
            if a == 0:
                return 0.0
            raise InterferenceError(f"table has no entry for bidegree ({a}, {b})") from None

    def lipschitz(self, degree: int) -> float:
        if degree == 0:
            return 0.0
        row = [self.f(a, degree - a) for a in range(degree + 1)]
        return degree * max(abs(x - y) for x, y in zip(row[1:], row[:-1]))

    def check_domain(self, degrees: Iterable[int]) -> None:
        for d in set(int(x) for x in degrees):
            for a in range(1, d + 1):
                if (a, d - a) not in self.table:
                    raise InterferenceError(f"table has no entry for bidegree ({a}, {d - a})")

    @classmethod
    def from_function(cls, fn: Callable[[int, int], float], degrees: Iterable[int]) -> "SymmetricTable":
        return cls({(a, d - a): fn(a, d - a) for d in set(int(x) for x in degrees) for a in range(d + 1)})

    @classmethod
    def read(cls, path) -> "SymmetricTable":
        table = {}
        for ln in Path(path).read_text().splitlines():
            if not ln.strip() or ln.lstrip().startswith("#"):
                continue
            a, b, val = ln.split()
            table[(int(a), int(b))] = float(val)
        return cls(table)

    def write(self, path) -> None:
        lines = [f"{a} {b} {val!r}" for (a, b), val in sorted(self.table.items())]
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class Typed:
    """One symmetric sub-spec per part of ``types`` (same order)."""

    types: TypePartition
    specs: tuple

    def __post_init__(self):
        if len(self.specs) != len(self.types.parts):
            raise InterferenceError("need exactly one sub-spec per type part")
        if any(isinstance(s, Typed) for s in self.specs):
            raise InterferenceError("typed specs cannot be nested")

    def for_vertex(self, v: int):
        return self.specs[int(self.types.part_of[v])]


SYMMETRIC_SPECS = (Linear, NormalizedLinear, ThresholdCount, ThresholdFraction, SymmetricTable)


def _sub_spec(spec, v: int):
    return spec.for_vertex(v) if isinstance(spec, Typed) else spec


def eval_interference(spec, g: Graph, v: int, treated_neighbors: int) -> float:
    """``f_v`` evaluated at a vertex with ``treated_neighbors`` treated neighbours."""
    d = g.degree(v)
    if not 0 <= treated_neighbors <= d:
        raise InterferenceError(f"vertex {v} has degree {d}; cannot have {treated_neighbors} treated neighbours")
    return _sub_spec(spec, v).f(treated_neighbors, d - treated_neighbors)


def interference_table(spec, g: Graph) -> np.ndarray:
    """Dense lookup ``F[v, a] = f_v(a, d(v) - a)`` (zero-padded past ``d(v)``)."""
    deg = g.degrees
    F = np.zeros((g.num_vertices, int(deg.max()) + 1))
    cache: dict[tuple[int, int], np.ndarray] = {}
    for v in range(g.num_vertices):
        sub = _sub_spec(spec, v)
        d = int(deg[v])
        key = (id(sub), d)
        if key not in cache:
            cache[key] = np.array([sub.f(a, d - a) for a in range(d + 1)], dtype=float)
        F[v, : d + 1] = cache[key]
    return F


def lipschitz_constant(spec, g: Graph, v: int) -> float:
    """``K_v`` such that ``|f_v(A) - f_v(B)| <= K_v |A Δ B| / d(v)``."""
    return float(_sub_spec(spec, v).lipschitz(g.degree(v)))


def lipschitz_constants(spec, g: Graph) -> np.ndarray:
    return np.array([lipschitz_constant(spec, g, v) for v in range(g.num_vertices)])


def weight(spec, g: Graph, v: int, w: int) -> float:
    """Largest change of ``f_v`` caused by adding neighbour ``w`` to a treated set.

    Zero unless ``w`` is a neighbour of ``v``.  For symmetric specs the
    supremum depends only on the treated count, so a scan over
    ``0 <= a < d(v)`` is exact.
    """
    if not g.has_edge(v, w):
        return 0.0
    sub = _sub_spec(spec, v)
    d = g.degree(v)
    row = [sub.f(a, d - a) for a in range(d + 1)]
    return max(abs(x - y) for x, y in zip(row[1:], row[:-1]))


def weight_bruteforce(fv: Callable[[frozenset], float], neighbors: Iterable[int], w: int) -> float:
    """Sup over subsets ``A`` of ``N(v) \\ {w}`` of ``|f_v(A ∪ {w}) - f_v(A)|``.

    ``fv`` takes a frozenset of treated neighbours; any set function works.
    """
    nb = [x for x in neighbors if x != w]
    if len(nb) + 1 > BRUTE_FORCE_DEGREE_CAP:
        raise InterferenceError(f"degree {len(nb) + 1} exceeds brute-force cap {BRUTE_FORCE_DEGREE_CAP}")
    best = 0.0
    for k in range(len(nb) + 1):
        for A in itertools.combinations(nb, k):
            S = frozenset(A)
            best = max(best, abs(fv(S | {w}) - fv(S)))
    return best


@dataclass(frozen=True)
class LipschitzBudget:
    """Per-vertex Lipschitz constants together with the d_K weights."""

    K1: float = 1.0
    K2: float = 1.0
    k_v: tuple[float, ...] = ()

    def __post_init__(self):
        if self.K1 < 0 or self.K2 <= 0:
            raise InterferenceError("need K1 >= 0 and K2 > 0")

    @property
    def kbar(self) -> float:
        return math.fsum(self.k_v) / len(self.k_v)

    @property
    def kmax(self) -> float:
        return max(self.k_v)

    @classmethod
    def for_spec(cls, spec, g: Graph, K1: float = 1.0, K2: float = 1.0) -> "LipschitzBudget":
        return cls(K1, K2, tuple(lipschitz_constants(spec, g)))


def metric_dK(budget: LipschitzBudget, dmax: int, u1, u2) -> float:
    """``K1 |deg1 - deg2| / dmax + K2 |frac1 - frac2|`` on bidegree pairs."""
    (a, b), (c, d) = u1, u2
    if a + b < 1 or c + d < 1:
        raise InterferenceError("d_K is undefined for zero-degree bidegrees")
    return budget.K1 * abs(a + b - c - d) / dmax + budget.K2 * abs(a / (a + b) - c / (c + d))


def dK_matrix(budget: LipschitzBudget, dmax: int, U: np.ndarray, V: np.ndarray | None = None) -> np.ndarray:
    """Pairwise d_K between rows of ``U`` and ``V`` (each row is ``(a, b)``)."""
    V = U if V is None else V
    U = np.asarray(U, dtype=float).reshape(-1, 2)
    V = np.asarray(V, dtype=float).reshape(-1, 2)
    du, dv = U.sum(1), V.sum(1)
    if np.any(du < 1) or np.any(dv < 1):
        raise InterferenceError("d_K is undefined for zero-degree bidegrees")
    return budget.K1 * np.abs(du[:, None] - dv[None, :]) / dmax + budget.K2 * np.abs(
        (U[:, 0] / du)[:, None] - (V[:, 0] / dv)[None, :]
    )


def bidegree_domain(degrees: Iterable[int]) -> list[tuple[int, int]]:
    """All ``(a, b)`` with ``a + b`` one of the given degrees."""
    return [(a, d - a) for d in sorted(set(int(x) for x in degrees)) for a in range(d + 1)]


def lipschitz_norm(spec, g: Graph, budget: LipschitzBudget, types: TypePartition | None = None) -> float:
    """``sup |f(u) - f(u')| / d_K(u, u')`` over the bidegree domain.

    For a :class:`Typed` spec, or when ``types`` is given, the result is the
    max over parts, each part using the degrees present in it.  Returns ``inf`` when ``f`` separates
    two points at d_K distance zero (possible only with ``K1 = 0``).
    """
    g.require_no_isolated()
    dmax = int(g.degrees.max())
    if isinstance(spec, Typed):
        groups = [(s, g.degrees[list(p)]) for s, p in zip(spec.specs, spec.types.parts)]
    elif types is not None:
        groups = [(spec, g.degrees[list(p)]) for p in types.parts]
    else:
        groups = [(spec, g.degrees)]
    best = 0.0
    for sub, degs in groups:
        dom = np.array(bidegree_domain(degs))
        vals = np.array([sub.f(int(a), int(b)) for a, b in dom])
        D = dK_matrix(budget, dmax, dom)
        diff = np.abs(vals[:, None] - vals[None, :])
        np.fill_diagonal(D, 1.0)
        zero = (D == 0) & (diff > 0)
        if zero.any():
            return math.inf
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(diff > 0, diff / np.where(D == 0, 1.0, D), 0.0)
        best = max(best, float(ratio.max()))
    return best


def parse_spec(text: str):
    """Parse ``linear:G``, ``normalized:G``, ``threshold-count:G:K``,
    ``threshold-fraction:G[:FRAC]``, ``zero`` or ``table:PATH``."""
    kind, _, rest = text.partition(":")
    args = rest.split(":") if rest else []
    kind = kind.strip().lower()
    try:
        if kind == "zero":
            return Linear(0.0)
        if kind == "linear":
            return Linear(float(args[0]))
        if kind in ("normalized", "normalized-linear"):
            return NormalizedLinear(float(args[0]))
        if kind == "threshold-count":
            return ThresholdCount(float(args[0]), int(args[1]))
        if kind == "threshold-fraction":
            return ThresholdFraction(float(args[0]), float(args[1]) if len(args) > 1 else 0.5)
        if kind == "table":
            return SymmetricTable.read(rest)
    except (IndexError, ValueError) as exc:
        raise InterferenceError(f"bad interference spec {text!r}: {exc}") from None
    raise InterferenceError(f"unknown interference spec {text!r}")


def format_spec(spec) -> str:
    if isinstance(spec, Linear):
        return f"linear:{spec.gamma!r}"
    if isinstance(spec, NormalizedLinear):
        return f"normalized:{spec.gamma!r}"
    if isinstance(spec, ThresholdCount):
        return f"threshold-count:{spec.gamma!r}:{spec.k}"
    if isinstance(spec, ThresholdFraction):
        return f"threshold-fraction:{spec.gamma!r}:{spec.frac!r}"
    return repr(spec)
