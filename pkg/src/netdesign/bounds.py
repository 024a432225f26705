"""Closed-form bias and RMSE bounds for the Neyman estimator's interference term.

All evaluators take the graph and design inputs explicitly and return plain
floats (or tuples of floats).  The MSE bounds assume the interference
function has d_K-Lipschitz norm at most one; scale the result by the actual
norm otherwise.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .design import DesignError, ExperimentConfig, Partition, TypePartition, block_neighbor_counts
from .graph import Graph
from .interference import weight
from .quasicoloring import c_p


def _degrees(g: Graph) -> np.ndarray:
    g.require_no_isolated()
    return g.degrees.astype(float)


def bias_bound_lipschitz(g: Graph, P: Partition, k_v: Sequence[float]) -> float:
    """``sum_v |P_v ∩ N(v)| K_v / d(v)`` over ``n r (r-1)``."""
    d = _degrees(g)
    r, n = len(P.blocks[0]), len(P.blocks)
    if r < 2:
        raise DesignError("blocks need at least two vertices")
    hits = block_neighbor_counts(g, P)
    return math.fsum(hits * np.asarray(k_v, dtype=float) / d) / (n * r * (r - 1))


def bias_bound_weights(g: Graph, P: Partition, spec) -> float:
    """Pairwise-weight refinement of :func:`bias_bound_lipschitz`."""
    r, n = len(P.blocks[0]), len(P.blocks)
    terms = [
        weight(spec, g, w, w2) + weight(spec, g, w2, w)
        for b in P.blocks
        for w, w2 in itertools.combinations(b, 2)
    ]
    return math.fsum(terms) / (n * r * (r - 1))


def bias_bound_crd(kbar: float, r: int, n: int) -> float:
    """Completely randomized design: ``Kbar / (rn - 1)``."""
    if r * n < 2:
        raise DesignError("need at least two units")
    return kbar / (r * n - 1)


def mse_bound_general(g: Graph, P: Partition, K1: float, K2: float, cfg: ExperimentConfig) -> float:
    """RMSE bound for blocking on a fixed partition ``P``."""
    d = _degrees(g)
    p, q, r, n = cfg.p, cfg.q, cfg.r, cfg.n
    hits = block_neighbor_counts(g, P)
    return (
        K1 / (math.sqrt(p * q) * n) * c_p(P, g, cfg)
        + math.fsum(4.0 * K2 / np.sqrt(d)) / (r * n)
        + K2 / (p * q * n) * math.fsum(hits / d)
    )


def mse_bound_dense(g: Graph, K1: float, K2: float, cfg: ExperimentConfig) -> tuple[float, float]:
    """``(bias, rmse)`` bounds for blocking on the degree-sorted partition."""
    d = _degrees(g)
    dmin = float(d.min())
    p, q, r, n = cfg.p, cfg.q, cfg.r, cfg.n
    mn = min(r - 1, dmin)
    bias = mn * (K1 + K2) / ((r - 1) * dmin)
    rmse = 2 * K1 / (math.sqrt(p * q) * n) + 4 * K2 / (r * math.sqrt(dmin)) + r * K2 * mn / (p * q * dmin)
    return bias, rmse


def mse_bound_sparse(g: Graph, K1: float, K2: float, cfg: ExperimentConfig) -> tuple[float, float]:
    """``(bias, rmse)`` bounds for randomized degree blocking."""
    d = _degrees(g)
    dmin, dmax = float(d.min()), float(d.max())
    p, q, r, n = cfg.p, cfg.q, cfg.r, cfg.n
    spread = dmax - dmin
    fan = math.sqrt(r * r * dmax * dmax + 1)
    bias = K1 / n + 3 * K2 * spread / n
    rmse = (
        K1 / n
        + K2 * spread / (n * dmin)
        + 2 * K2 * math.sqrt(spread) / math.sqrt(n * dmin)
        + 4 * K2 * fan / math.sqrt(n * dmin)
        + r * K2 * min(r - 1, dmin) * fan / (p * q * math.sqrt(n) * dmin)
    )
    return bias, rmse


def _type_neighbor_counts(g: Graph, types: TypePartition) -> np.ndarray:
    own = types.part_of
    return np.array([sum(1 for w in g.adjacency[v] if own[w] == own[v]) for v in range(g.num_vertices)])


def typed_bounds(
    g: Graph, types: TypePartition, K: float, cfg: ExperimentConfig, P: Partition | None = None
) -> tuple[float, float, float]:
    """``(bias, rmse_tv, rmse_sparse)`` for type-restricted randomization.

    ``rmse_tv`` uses the exact ``|P_v ∩ N(v)|`` when a refining partition
    ``P`` is supplied, otherwise the worst case ``min(r-1, |Pi_v ∩ N(v)|)``
    over all refinements.
    """
    cfg.check_graph(g)
    types.validate(g.num_vertices, cfg.r)
    d = _degrees(g)
    dmin, dmax = float(d.min()), float(d.max())
    p, q, r, n = cfg.p, cfg.q, cfg.r, cfg.n
    nparts = len(types)
    bias = K * nparts / (r * n)
    if P is not None:
        own = types.part_of
        if any(len({int(own[v]) for v in b}) != 1 for b in P.blocks):
            raise DesignError("partition does not refine the type partition")
        hits = block_neighbor_counts(g, P).astype(float)
    else:
        hits = np.minimum(r - 1, _type_neighbor_counts(g, types)).astype(float)
    rmse_tv = math.fsum(4 * K / np.sqrt(d)) / (r * n) + K / (p * q * n) * math.fsum(hits / d)
    fan = math.sqrt(r * r * dmax * dmax + 1)
    rmse_sparse = K * (
        math.sqrt(2 * nparts) / math.sqrt(n * r * dmin)
        + 4 * fan / math.sqrt(n * dmin)
        + r * min(r - 1, dmin) * fan / (p * q * math.sqrt(n) * dmin)
    )
    return bias, rmse_tv, rmse_sparse


@dataclass(frozen=True)
class HomophilyBounds:
    bias: float
    rmse: float
    var_t_ideal: float


def homophily_bounds(
    sigma: float, K: float, num_parts: int, cfg: ExperimentConfig, g: Graph, types: TypePartition
) -> HomophilyBounds:
    """Bias and RMSE of the estimator against the mean direct effect, plus the
    variance bound ``2 r sigma^2 / (pqn)`` for the interference-free part."""
    d = _degrees(g)
    p, q, r, n = cfg.p, cfg.q, cfg.r, cfg.n
    sizes = np.array([len(types.parts[i]) for i in types.part_of], dtype=float)
    if np.any(sizes < 2):
        raise DesignError("every type part needs at least two vertices")
    hits = _type_neighbor_counts(g, types)
    bias = K * num_parts / n
    rmse = (
        math.fsum(4 * K / np.sqrt(d)) / (r * n)
        + K / (p * q * n) * math.fsum((r - 1) * hits / ((sizes - 1) * d))
        + sigma * math.sqrt(2 * r) / math.sqrt(p * q * n)
    )
    var = 2 * r * sigma**2 / (p * q * n)
    return HomophilyBounds(bias, rmse, var)


# -- reporting ----------------------------------------------------------------

@dataclass
class BoundReport:
    bias_bound: float
    rmse_bound: float
    provenance: str
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.provenance:
            raise ValueError("provenance must be set")
        for name in ("bias_bound", "rmse_bound"):
            val = getattr(self, name)
            if not (math.isnan(val) or val >= 0):
                raise ValueError(f"{name} must be nonnegative, got {val}")

    def row(self, **context) -> dict:
        out = dict(context)
        out.update(bias_bound=self.bias_bound, rmse_bound=self.rmse_bound, provenance=self.provenance)
        out.update(self.inputs)
        return out


def write_reports(rows: Sequence[dict], path_or_file) -> None:
    """One CSV row per (graph, design, spec)."""
    keys: list[str] = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    finally:
        if own:
            fh.close()


def report_for_design(
    g: Graph, design: str, cfg: ExperimentConfig, k_v: Sequence[float], K1: float, K2: float,
    lip_norm: float, P: Partition | None = None, types: TypePartition | None = None,
) -> BoundReport:
    """Bias/RMSE bounds for one design, with the RMSE scaled by ``lip_norm``
    (the d_K-Lipschitz norm of the interference) so it applies to the unnormalised spec."""
    g.require_no_isolated()
    deg = g.degrees
    k_v = np.asarray(k_v, dtype=float)
    inputs = dict(
        K1=K1, K2=K2, Kbar=float(k_v.mean()), Kmax=float(k_v.max()), dmin=int(deg.min()),
        dmax=int(deg.max()), p=cfg.p, q=cfg.q, r=cfg.r, n=cfg.n,
        num_parts=len(types) if types is not None else None, sigma=None, lip_norm=lip_norm,
    )
    if design == "crd":
        return BoundReport(bias_bound_crd(float(k_v.mean()), cfg.r, cfg.n), math.nan, "bias_bound_crd", inputs)
    if design == "pbd":
        if P is None:
            raise ValueError("pbd report needs the degree-sorted partition")
        bias = bias_bound_lipschitz(g, P, k_v)
        rmse = lip_norm * mse_bound_general(g, P, K1, K2, cfg)
        return BoundReport(bias, rmse, "bias_bound_lipschitz+mse_bound_general", inputs)
    if design == "pbd-random":
        bias, rmse = mse_bound_sparse(g, K1, K2, cfg)
        return BoundReport(lip_norm * bias, lip_norm * rmse, "mse_bound_sparse", inputs)
    if design == "typed":
        if types is None:
            raise ValueError("typed report needs a type partition")
        bias, rmse_tv, _ = typed_bounds(g, types, K2, cfg)
        return BoundReport(lip_norm * bias, lip_norm * rmse_tv, "typed_bounds", inputs)
    raise ValueError(f"unknown design {design!r}")
