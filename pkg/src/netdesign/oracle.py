"""Exact (enumeration) and Monte Carlo moments of the estimator and of xi."""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from math import comb
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import linprog

from .design import (
    DEFAULT_ENUMERATION_CAP,
    ExperimentConfig,
    Partition,
    Treatment,
    TypePartition,
    block_assignment_masks,
    crd_masks,
    type_restricted_masks,
)
from .graph import Graph
from .interference import LipschitzBudget, dK_matrix, format_spec
from .outcome import BatchEvaluator, OutcomeModel
from .quasicoloring import BidegreeMeasure


@dataclass(frozen=True)
class ExactMoments:
    mean_xi: float
    second_moment_xi: float
    mean_estimator: float
    var_estimator: float
    mean_t_ideal: float
    var_t_ideal: float
    mse_estimator: float
    count: int
    design: str = ""
    instance: str = ""

    @property
    def rmse_xi(self) -> float:
        return math.sqrt(self.second_moment_xi)


def _mean(x: np.ndarray) -> float:
    return math.fsum(x) / x.size


def _moments(xi: np.ndarray, ideal: np.ndarray, tbar: float, design: str, instance: str) -> ExactMoments:
    est = ideal + xi
    m_est = _mean(est)
    m_ideal = _mean(ideal)
    return ExactMoments(
        mean_xi=_mean(xi),
        second_moment_xi=_mean(xi * xi),
        mean_estimator=m_est,
        var_estimator=_mean((est - m_est) ** 2),
        mean_t_ideal=m_ideal,
        var_t_ideal=_mean((ideal - m_ideal) ** 2),
        mse_estimator=_mean((est - tbar) ** 2),
        count=xi.size,
        design=design,
        instance=instance,
    )


def _run(ev: BatchEvaluator, chunks: Iterable[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    xs, ids = [], []
    for Z in chunks:
        a, b = ev.evaluate(Z)
        xs.append(a)
        ids.append(b)
    return np.concatenate(xs), np.concatenate(ids)


def instance_key(g: Graph, model: OutcomeModel) -> str:
    h = hashlib.sha256()
    h.update(repr(sorted(g.edges())).encode())
    h.update(str(g.num_vertices).encode())
    h.update(model.x.tobytes())
    h.update(model.t.tobytes())
    h.update(format_spec(model.spec).encode())
    return h.hexdigest()[:16]


def _cached(cache_dir, key: str, compute: Callable[[], ExactMoments]) -> ExactMoments:
    if cache_dir is None:
        return compute()
    path = Path(cache_dir) / f"{key}.json"
    if path.exists():
        return ExactMoments(**json.loads(path.read_text()))
    res = compute()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(asdict(res)))
    return res


def exact_moments_blocked(
    g: Graph, P: Partition, cfg: ExperimentConfig, model: OutcomeModel,
    cap: int = DEFAULT_ENUMERATION_CAP, cache_dir=None,
) -> ExactMoments:
    """Average over all ``C(r,p)**n`` within-block assignments."""
    inst = instance_key(g, model)
    desc = "blocked:" + hashlib.sha256(repr((P.blocks, cfg)).encode()).hexdigest()[:12]

    def compute():
        ev = BatchEvaluator(model, g, cfg)
        xi, ideal = _run(ev, block_assignment_masks(P, cfg, cap))
        return _moments(xi, ideal, ev.tbar, desc, inst)

    return _cached(cache_dir, f"{inst}-{desc.replace(':', '-')}", compute)


def exact_moments_crd(
    g: Graph, cfg: ExperimentConfig, model: OutcomeModel,
    cap: int = DEFAULT_ENUMERATION_CAP, cache_dir=None,
) -> ExactMoments:
    """Average over all ``C(rn, pn)`` treated sets."""
    inst = instance_key(g, model)
    desc = f"crd-p{cfg.p}-r{cfg.r}-n{cfg.n}"

    def compute():
        ev = BatchEvaluator(model, g, cfg)
        xi, ideal = _run(ev, crd_masks(cfg, cap))
        return _moments(xi, ideal, ev.tbar, desc, inst)

    return _cached(cache_dir, f"{inst}-{desc}", compute)


def exact_moments_typed(
    g: Graph, types: TypePartition, cfg: ExperimentConfig, model: OutcomeModel,
    cap: int = DEFAULT_ENUMERATION_CAP, cache_dir=None,
) -> ExactMoments:
    """Average over all type-restricted assignments."""
    inst = instance_key(g, model)
    desc = "typed:" + hashlib.sha256(repr((types.parts, cfg)).encode()).hexdigest()[:12]

    def compute():
        ev = BatchEvaluator(model, g, cfg)
        xi, ideal = _run(ev, type_restricted_masks(types, cfg, cap))
        return _moments(xi, ideal, ev.tbar, desc, inst)

    return _cached(cache_dir, f"{inst}-{desc.replace(':', '-')}", compute)


@dataclass(frozen=True)
class MonteCarloMoments:
    mean_xi: float
    se_mean_xi: float
    second_moment_xi: float
    se_second_moment_xi: float
    mean_estimator: float
    se_mean_estimator: float
    mse: float
    se_mse: float
    replications: int


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent stream for replication ``rep``; depends only on ``(seed, rep)``."""
    return np.random.default_rng([int(seed), int(rep)])


def draw_masks(sampler, num_units: int, start: int, stop: int, seed: int) -> np.ndarray:
    Z = np.zeros((stop - start, num_units), dtype=bool)
    for i, rep in enumerate(range(start, stop)):
        z = sampler(replication_rng(seed, rep))
        Z[i] = z.mask if isinstance(z, Treatment) else z
    return Z


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    m = _mean(x)
    var = math.fsum((x - m) ** 2) / (x.size - 1)
    return m, math.sqrt(var / x.size)


def monte_carlo_moments(
    sampler, model: OutcomeModel, g: Graph, cfg: ExperimentConfig,
    replications: int, seed: int = 0, workers: int = 1, chunk: int = 256,
) -> MonteCarloMoments:
    """Sample moments with standard errors.

    ``sampler(rng)`` returns a boolean mask or a :class:`Treatment`.  The
    result does not depend on ``workers``: every replication has its own
    stream and the reduction runs in replication order.
    """
    if replications < 2:
        raise ValueError("need at least two replications")
    ev = BatchEvaluator(model, g, cfg)
    bounds = [(s, min(replications, s + chunk)) for s in range(0, replications, chunk)]

    def work(span):
        Z = draw_masks(sampler, cfg.num_units, span[0], span[1], seed)
        return ev.evaluate(Z)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    xi = np.concatenate([p[0] for p in parts])
    est = np.concatenate([p[0] + p[1] for p in parts])
    m_xi, se_xi = _mean_se(xi)
    m2, se2 = _mean_se(xi * xi)
    m_est, se_est = _mean_se(est)
    mse, se_mse = _mean_se((est - ev.tbar) ** 2)
    return MonteCarloMoments(m_xi, se_xi, m2, se2, m_est, se_est, mse, se_mse, replications)


# -- independent checks -----------------------------------------------------------

def wasserstein_dual_lp(D: BidegreeMeasure, budget: LipschitzBudget, dmax: int) -> float:
    """``max sum f(u) D(u)`` over 1-Lipschitz ``f`` on the support of ``D``, by LP."""
    atoms = list(D.atoms.items())
    if not atoms:
        return 0.0
    U = np.array([u for u, _ in atoms], dtype=float)
    mass = np.array([m for _, m in atoms])
    k = len(atoms)
    C = dK_matrix(budget, dmax, U)
    rows, rhs = [], []
    for i in range(k):
        for j in range(k):
            if i != j:
                row = np.zeros(k)
                row[i], row[j] = 1.0, -1.0
                rows.append(row)
                rhs.append(C[i, j])
    bounds = [(0.0, 0.0)] + [(None, None)] * (k - 1)
    res = linprog(-mass, A_ub=np.array(rows) if rows else None, b_ub=np.array(rhs) if rhs else None,
                  bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"dual LP failed: {res.message}")
    return float(-res.fun)


def clique_xi(alpha: np.ndarray | int, k: int, gamma: float) -> np.ndarray:
    """xi on a 2k-clique plus 2k isolated vertices (p = q = 1) with
    ``alpha`` treated clique vertices and linear interference."""
    alpha = np.asarray(alpha, dtype=float)
    return gamma * alpha * (2 * alpha - 2 * k - 1) / (2 * k)


def clique_crd_moments(k: int, gamma: float) -> tuple[float, float]:
    """Exact ``(E xi, E xi^2)`` under the completely randomized design.

    The treated count in the clique is hypergeometric: ``2k`` draws from
    ``4k`` vertices of which ``2k`` lie in the clique.
    """
    total = comb(4 * k, 2 * k)
    terms1, terms2 = [], []
    for a in range(2 * k + 1):
        w = comb(2 * k, a) * comb(2 * k, 2 * k - a) / total
        v = float(clique_xi(a, k, gamma))
        terms1.append(w * v)
        terms2.append(w * v * v)
    return math.fsum(terms1), math.fsum(terms2)
