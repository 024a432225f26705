"""Outcome model ``y_v = x_v + 1_T(v) t_v + f_v(T ∩ N(v))`` and the Neyman estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .design import DesignError, ExperimentConfig, Treatment, TypePartition
from .graph import Graph
from .interference import format_spec, interference_table, parse_spec


@dataclass(frozen=True, eq=False)
class OutcomeModel:
    x: np.ndarray
    t: np.ndarray
    spec: object

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if x.shape != t.shape or x.ndim != 1:
            raise ValueError("x and t must be 1-d arrays of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)

    @property
    def num_vertices(self) -> int:
        return self.x.size


def _signs(mask: np.ndarray, cfg: ExperimentConfig) -> np.ndarray:
    """``q`` on treated units, ``-p`` elsewhere."""
    return np.where(mask, cfg.q, -cfg.p).astype(float)


def simulate_outcomes(model: OutcomeModel, g: Graph, T: Treatment) -> np.ndarray:
    z = T.mask
    a = g.adjacency_matrix @ z.astype(np.int64)
    F = interference_table(model.spec, g)
    f = F[np.arange(g.num_vertices), a]
    return model.x + np.where(z, model.t, 0.0) + f


def neyman_estimate(y: np.ndarray, T: Treatment) -> float:
    """``(q * sum_T y - p * sum_notT y) / (pqn)``."""
    cfg = T.config
    y = np.asarray(y, dtype=float)
    if y.size != cfg.num_units:
        raise DesignError(f"{y.size} outcomes for {cfg.num_units} units")
    z = T.mask
    num = cfg.q * math.fsum(y[z]) - cfg.p * math.fsum(y[~z])
    return num / (cfg.p * cfg.q * cfg.n)


def average_direct_effect(model: OutcomeModel) -> float:
    return math.fsum(model.t) / model.t.size


def t_ideal(model: OutcomeModel, T: Treatment) -> float:
    """The estimator's value had there been no interference."""
    cfg = T.config
    z = T.mask
    num = cfg.q * math.fsum(model.x[z] + model.t[z]) - cfg.p * math.fsum(model.x[~z])
    return num / (cfg.p * cfg.q * cfg.n)


def xi(model: OutcomeModel, g: Graph, T: Treatment) -> float:
    """Average interference effect ``(1/pqn) sum_v pq(T, v) f_v(T ∩ N(v))``."""
    cfg = T.config
    z = T.mask
    a = g.adjacency_matrix @ z.astype(np.int64)
    F = interference_table(model.spec, g)
    f = F[np.arange(g.num_vertices), a]
    return math.fsum(_signs(z, cfg) * f) / (cfg.p * cfg.q * cfg.n)


class BatchEvaluator:
    """Vectorised ``xi``, ``t_ideal`` and estimator over many treatment masks."""

    def __init__(self, model: OutcomeModel, g: Graph, cfg: ExperimentConfig):
        cfg.check_graph(g)
        self.model, self.g, self.cfg = model, g, cfg
        self.A = g.adjacency_matrix.astype(np.int64)
        self.F = interference_table(model.spec, g)
        self.rows = np.arange(g.num_vertices)
        self.scale = 1.0 / (cfg.p * cfg.q * cfg.n)
        self.tbar = average_direct_effect(model)

    def evaluate(self, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(xi, t_ideal)`` for each row of the boolean matrix ``Z``."""
        Z = np.atleast_2d(Z)
        cfg = self.cfg
        a = Z.astype(np.int64) @ self.A
        f = self.F[self.rows[None, :], a]
        s = np.where(Z, float(cfg.q), -float(cfg.p))
        xi_vals = (s * f).sum(axis=1) * self.scale
        base = self.model.x[None, :] + np.where(Z, self.model.t[None, :], 0.0)
        ideal = (s * base).sum(axis=1) * self.scale
        return xi_vals, ideal


@dataclass(frozen=True)
class HomophilyStats:
    part_x_means: np.ndarray
    part_t_means: np.ndarray
    eps: np.ndarray
    sigma2: float


def homophily_stats(model: OutcomeModel, types: TypePartition, cfg: ExperimentConfig) -> HomophilyStats:
    """Per-type means, discrepancies ``x_v - x_pi + (q/r)(t_v - t_pi)`` and their mean square."""
    types.validate(model.num_vertices)
    xm = np.array([math.fsum(model.x[list(p)]) / len(p) for p in types.parts])
    tm = np.array([math.fsum(model.t[list(p)]) / len(p) for p in types.parts])
    own = types.part_of
    eps = model.x - xm[own] + (cfg.q / cfg.r) * (model.t - tm[own])
    sigma2 = math.fsum(eps**2) / eps.size
    return HomophilyStats(xm, tm, eps, sigma2)


def sample_gaussian_model(g: Graph, spec, seed=None, x_mean=0.0, x_var=1.0, t_mean=2.0, t_var=0.25) -> OutcomeModel:
    """i.i.d. ``x_v ~ N(0, 1)`` and ``t_v ~ N(2, 0.25)`` (second argument is a variance)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    N = g.num_vertices
    x = rng.normal(x_mean, math.sqrt(x_var), N)
    t = rng.normal(t_mean, math.sqrt(t_var), N)
    return OutcomeModel(x, t, spec)


def write_model(model: OutcomeModel, path) -> None:
    lines = [f"# spec: {format_spec(model.spec)}"]
    lines += [f"{v} {x!r} {t!r}" for v, (x, t) in enumerate(zip(model.x.tolist(), model.t.tolist()))]
    Path(path).write_text("\n".join(lines) + "\n")


def read_model(path, spec=None) -> OutcomeModel:
    """Read a model file; ``spec`` overrides the header reference."""
    xs, ts = {}, {}
    for ln in Path(path).read_text().splitlines():
        if ln.startswith("# spec:"):
            if spec is None:
                spec = parse_spec(ln.split(":", 1)[1].strip())
            continue
        if not ln.strip() or ln.startswith("#"):
            continue
        v, x, t = ln.split()
        xs[int(v)], ts[int(v)] = float(x), float(t)
    if sorted(xs) != list(range(len(xs))):
        raise ValueError(f"{path}: vertex rows must cover 0..N-1")
    if spec is None:
        raise ValueError(f"{path}: no interference spec given")
    order = range(len(xs))
    return OutcomeModel(np.array([xs[v] for v in order]), np.array([ts[v] for v in order]), spec)
