"""Partitions and treatment-assignment designs.

Every sampler takes a seed (anything accepted by
:func:`numpy.random.default_rng`, including a ``Generator``) and is
deterministic given it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from math import comb
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .graph import Graph

DEFAULT_ENUMERATION_CAP = 10**6


class DesignError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """``p`` of every ``r`` units treated, ``n`` blocks, ``r * n`` units."""

    p: int
    r: int
    n: int

    def __post_init__(self):
        if not (1 <= self.p < self.r):
            raise DesignError(f"need 1 <= p < r, got p={self.p}, r={self.r}")
        if self.n < 1:
            raise DesignError("n must be positive")

    @property
    def q(self) -> int:
        return self.r - self.p

    @property
    def num_units(self) -> int:
        return self.r * self.n

    @property
    def num_treated(self) -> int:
        return self.p * self.n

    @classmethod
    def for_graph(cls, g: Graph, p: int = 1, r: int = 2) -> "ExperimentConfig":
        if g.num_vertices % r:
            raise DesignError(f"{g.num_vertices} vertices cannot be split into blocks of {r}")
        return cls(p, r, g.num_vertices // r)

    def check_graph(self, g: Graph) -> None:
        if g.num_vertices != self.num_units:
            raise DesignError(
                f"config expects r*n = {self.num_units} vertices, graph has {g.num_vertices}"
            )


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[int, ...], ...]

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]]) -> "Partition":
        return cls(tuple(tuple(int(v) for v in b) for b in blocks))

    def validate(self, cfg: ExperimentConfig) -> None:
        if len(self.blocks) != cfg.n:
            raise DesignError(f"partition has {len(self.blocks)} blocks, config wants {cfg.n}")
        seen = sorted(v for b in self.blocks for v in b)
        if any(len(b) != cfg.r for b in self.blocks):
            raise DesignError(f"every block must have exactly r={cfg.r} vertices")
        if seen != list(range(cfg.num_units)):
            raise DesignError("blocks must be disjoint and cover all vertices")

    @cached_property
    def block_of(self) -> np.ndarray:
        """``block_of[v]`` is the index of the block containing ``v``."""
        out = np.empty(sum(len(b) for b in self.blocks), dtype=np.int64)
        for i, b in enumerate(self.blocks):
            out[list(b)] = i
        return out

    def block_containing(self, v: int) -> tuple[int, ...]:
        return self.blocks[int(self.block_of[v])]


@dataclass(frozen=True)
class Treatment:
    treated: frozenset[int]
    config: ExperimentConfig

    def __post_init__(self):
        if len(self.treated) != self.config.num_treated:
            raise DesignError(
                f"|T| = {len(self.treated)} but p*n = {self.config.num_treated}"
            )

    @classmethod
    def from_mask(cls, mask: np.ndarray, cfg: ExperimentConfig) -> "Treatment":
        return cls(frozenset(int(v) for v in np.flatnonzero(mask)), cfg)

    @cached_property
    def mask(self) -> np.ndarray:
        z = np.zeros(self.config.num_units, dtype=bool)
        z[list(self.treated)] = True
        z.setflags(write=False)
        return z

    def complement(self) -> "Treatment":
        """Complement as a treatment with the roles of p and q swapped."""
        cfg = ExperimentConfig(self.config.q, self.config.r, self.config.n)
        return Treatment(frozenset(range(self.config.num_units)) - self.treated, cfg)


@dataclass(frozen=True)
class TypePartition:
    parts: tuple[tuple[int, ...], ...]

    @classmethod
    def from_parts(cls, parts: Iterable[Iterable[int]]) -> "TypePartition":
        return cls(tuple(tuple(sorted(int(v) for v in p)) for p in parts))

    @classmethod
    def single(cls, num_vertices: int) -> "TypePartition":
        return cls((tuple(range(num_vertices)),))

    def validate(self, num_vertices: int, r: int | None = None) -> None:
        seen = sorted(v for p in self.parts for v in p)
        if seen != list(range(num_vertices)):
            raise DesignError("type parts must be disjoint and cover all vertices")
        if r is not None:
            bad = [len(p) for p in self.parts if len(p) % r]
            if bad:
                raise DesignError(f"part sizes {bad} are not divisible by r={r}")

    @cached_property
    def part_of(self) -> np.ndarray:
        out = np.empty(sum(len(p) for p in self.parts), dtype=np.int64)
        for i, p in enumerate(self.parts):
            out[list(p)] = i
        return out

    def __len__(self) -> int:
        return len(self.parts)


def _as_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# -- samplers -----------------------------------------------------------------

def sample_block_mask(partition: Partition, cfg: ExperimentConfig, rng) -> np.ndarray:
    """Boolean treatment mask with ``p`` uniform picks inside each block."""
    rng = _as_rng(rng)
    B = np.asarray(partition.blocks, dtype=np.int64)
    picks = np.argsort(rng.random(B.shape), axis=1)[:, : cfg.p]
    z = np.zeros(cfg.num_units, dtype=bool)
    z[np.take_along_axis(B, picks, axis=1).ravel()] = True
    return z


def sample_within_blocks(partition: Partition, cfg: ExperimentConfig, seed=None) -> Treatment:
    partition.validate(cfg)
    return Treatment.from_mask(sample_block_mask(partition, cfg, seed), cfg)


def crd_mask(cfg: ExperimentConfig, rng) -> np.ndarray:
    rng = _as_rng(rng)
    z = np.zeros(cfg.num_units, dtype=bool)
    z[rng.choice(cfg.num_units, cfg.num_treated, replace=False)] = True
    return z


def crd(g: Graph, cfg: ExperimentConfig, seed=None) -> Treatment:
    """Completely randomized design: uniform over all ``pn``-subsets."""
    cfg.check_graph(g)
    return Treatment.from_mask(crd_mask(cfg, seed), cfg)


def degree_order(g: Graph) -> list[int]:
    """Vertices by non-increasing degree, ties by ascending index."""
    deg = g.degrees
    return sorted(range(g.num_vertices), key=lambda v: (-int(deg[v]), v))


def partition_by_degree(g: Graph, cfg: ExperimentConfig) -> Partition:
    """Consecutive runs of ``r`` vertices in degree order form the blocks."""
    cfg.check_graph(g)
    order = degree_order(g)
    r = cfg.r
    return Partition(tuple(tuple(order[i : i + r]) for i in range(0, len(order), r)))


def degree_leftovers(g: Graph, r: int) -> tuple[list[int], dict[int, list[int]]]:
    """Split vertices into the leftover set S and the same-degree pools.

    From each degree class the ``count mod r`` highest-index vertices go to S.
    S is returned in degree order; pools map degree -> sorted vertices.
    """
    classes: dict[int, list[int]] = {}
    for v, d in enumerate(g.degrees):
        classes.setdefault(int(d), []).append(v)
    leftovers: list[int] = []
    pools: dict[int, list[int]] = {}
    for d in sorted(classes, reverse=True):
        vs = classes[d]
        cut = len(vs) - len(vs) % r
        pools[d] = vs[:cut]
        leftovers.extend(vs[cut:])
    return leftovers, pools


def randomized_degree_blocking(g: Graph, cfg: ExperimentConfig, seed=None) -> Partition:
    """Uniform blocking within exact-degree classes; leftovers blocked in degree order."""
    cfg.check_graph(g)
    rng = _as_rng(seed)
    r = cfg.r
    leftovers, pools = degree_leftovers(g, r)
    blocks = [tuple(leftovers[i : i + r]) for i in range(0, len(leftovers), r)]
    for d in sorted(pools, reverse=True):
        vs = np.asarray(pools[d], dtype=np.int64)
        if vs.size == 0:
            continue
        shuffled = rng.permutation(vs)
        blocks.extend(tuple(int(v) for v in shuffled[i : i + r]) for i in range(0, vs.size, r))
    return Partition(tuple(blocks))


def degree_type_partition(g: Graph, r: int) -> TypePartition:
    """Leftover blocks of ``r`` plus the same-degree pools, as a type partition.

    Type-restricted sampling over this partition has the same law as
    blocking over :func:`randomized_degree_blocking`.
    """
    leftovers, pools = degree_leftovers(g, r)
    parts = [leftovers[i : i + r] for i in range(0, len(leftovers), r)]
    parts.extend(vs for d, vs in sorted(pools.items(), reverse=True) if vs)
    return TypePartition.from_parts(parts)


def type_restricted_mask(types: TypePartition, cfg: ExperimentConfig, rng) -> np.ndarray:
    rng = _as_rng(rng)
    z = np.zeros(cfg.num_units, dtype=bool)
    for part in types.parts:
        k = cfg.p * len(part) // cfg.r
        z[rng.choice(np.asarray(part), k, replace=False)] = True
    return z


def type_restricted(g: Graph, types: TypePartition, cfg: ExperimentConfig, seed=None) -> Treatment:
    """Independently per part, a uniform subset of size ``p|part|/r``."""
    cfg.check_graph(g)
    types.validate(g.num_vertices, cfg.r)
    return Treatment.from_mask(type_restricted_mask(types, cfg, seed), cfg)


# -- exhaustive enumeration ---------------------------------------------------

def num_block_assignments(cfg: ExperimentConfig) -> int:
    return comb(cfg.r, cfg.p) ** cfg.n


def _check_cap(count: int, cap: int, what: str) -> None:
    if count > cap:
        raise DesignError(f"{what}: {count} design points exceed the enumeration cap {cap}")


def block_assignment_masks(
    partition: Partition,
    cfg: ExperimentConfig,
    cap: int = DEFAULT_ENUMERATION_CAP,
    chunk: int = 1 << 15,
) -> Iterator[np.ndarray]:
    """All ``C(r,p)**n`` treatment masks, yielded as boolean row-chunks."""
    partition.validate(cfg)
    total = num_block_assignments(cfg)
    _check_cap(total, cap, "block enumeration")
    combos = np.zeros((comb(cfg.r, cfg.p), cfg.r), dtype=bool)
    for i, c in enumerate(itertools.combinations(range(cfg.r), cfg.p)):
        combos[i, list(c)] = True
    B = np.asarray(partition.blocks, dtype=np.int64)
    k = combos.shape[0]
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        Z = np.zeros((idx.size, cfg.num_units), dtype=bool)
        rest = idx.copy()
        # mixed radix, last block fastest
        for i in range(cfg.n - 1, -1, -1):
            Z[:, B[i]] = combos[rest % k]
            rest //= k
        yield Z


def enumerate_block_assignments(
    partition: Partition, cfg: ExperimentConfig, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[Treatment]:
    """Every equally likely treatment of within-block randomization, once each."""
    for Z in block_assignment_masks(partition, cfg, cap):
        for z in Z:
            yield Treatment.from_mask(z, cfg)


def crd_masks(
    cfg: ExperimentConfig, cap: int = DEFAULT_ENUMERATION_CAP, chunk: int = 1 << 15
) -> Iterator[np.ndarray]:
    """All ``C(rn, pn)`` treatment masks of the completely randomized design."""
    _check_cap(comb(cfg.num_units, cfg.num_treated), cap, "CRD enumeration")
    it = itertools.combinations(range(cfg.num_units), cfg.num_treated)
    while True:
        rows = list(itertools.islice(it, chunk))
        if not rows:
            return
        Z = np.zeros((len(rows), cfg.num_units), dtype=bool)
        Z[np.repeat(np.arange(len(rows)), cfg.num_treated), np.asarray(rows).ravel()] = True
        yield Z


def type_restricted_masks(
    types: TypePartition, cfg: ExperimentConfig, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[np.ndarray]:
    """All equally likely masks of the type-restricted design."""
    types.validate(cfg.num_units, cfg.r)
    per_part = []
    for part in types.parts:
        k = cfg.p * len(part) // cfg.r
        per_part.append([c for c in itertools.combinations(part, k)])
    total = 1
    for opts in per_part:
        total *= len(opts)
    _check_cap(total, cap, "type-restricted enumeration")
    rows = []
    for choice in itertools.product(*per_part):
        z = np.zeros(cfg.num_units, dtype=bool)
        for c in choice:
            z[list(c)] = True
        rows.append(z)
        if len(rows) == 1 << 15:
            yield np.array(rows)
            rows = []
    if rows:
        yield np.array(rows)


# -- text serialization ---------------------------------------------------------

def write_treatment(t: Treatment, path) -> None:
    Path(path).write_text("".join(f"{v}\n" for v in sorted(t.treated)))


def read_treatment(path, cfg: ExperimentConfig) -> Treatment:
    vs = [int(ln) for ln in Path(path).read_text().split()]
    return Treatment(frozenset(vs), cfg)


def write_partition(P: Partition, path) -> None:
    Path(path).write_text("".join(" ".join(map(str, b)) + "\n" for b in P.blocks))


def read_partition(path) -> Partition:
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    return Partition.from_blocks(lines)


def read_type_partition(path) -> TypePartition:
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    return TypePartition.from_parts(lines)


def blocks_are_independent(g: Graph, partition: Partition) -> bool:
    return not any(g.has_edge(u, v) for b in partition.blocks for u, v in itertools.combinations(b, 2))


def block_neighbor_counts(g: Graph, partition: Partition) -> np.ndarray:
    """``|P_v ∩ N(v)|`` for every vertex."""
    out = np.zeros(g.num_vertices, dtype=np.int64)
    for b in partition.blocks:
        for u, v in itertools.combinations(b, 2):
            if g.has_edge(u, v):
                out[u] += 1
                out[v] += 1
    return out


def enumerate_crd(g: Graph, cfg: ExperimentConfig, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[Treatment]:
    cfg.check_graph(g)
    for Z in crd_masks(cfg, cap):
        for z in Z:
            yield Treatment.from_mask(z, cfg)


DESIGNS = ("crd", "pbd", "pbd-random", "typed")


def make_sampler(design: str, g: Graph, cfg: ExperimentConfig, types: TypePartition | None = None):
    """Return ``rng -> boolean mask`` drawing one treatment from ``design``.

    ``pbd`` blocks on the fixed degree-sorted partition; ``pbd-random``
    redraws the randomized degree blocking on every call; ``typed`` defaults
    to :func:`degree_type_partition` when no type partition is given.
    """
    cfg.check_graph(g)
    if design == "crd":
        return lambda rng: crd_mask(cfg, rng)
    if design == "pbd":
        P = partition_by_degree(g, cfg)
        return lambda rng: sample_block_mask(P, cfg, rng)
    if design == "pbd-random":
        def draw(rng):
            rng = _as_rng(rng)
            return sample_block_mask(randomized_degree_blocking(g, cfg, rng), cfg, rng)
        return draw
    if design == "typed":
        tp = types if types is not None else degree_type_partition(g, cfg.r)
        tp.validate(g.num_vertices, cfg.r)
        return lambda rng: type_restricted_mask(tp, cfg, rng)
    raise DesignError(f"unknown design {design!r}; choose from {', '.join(DESIGNS)}")
