"""Log-MSE experiments comparing designs on random graphs."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .bounds import report_for_design
from .design import (
    DESIGNS,
    ExperimentConfig,
    degree_type_partition,
    make_sampler,
    partition_by_degree,
    read_type_partition,
)
from .graph import Graph, gen_erdos_renyi, gen_preferential_attachment, read_edgelist
from .interference import (
    LipschitzBudget,
    Linear,
    NormalizedLinear,
    SymmetricTable,
    ThresholdCount,
    ThresholdFraction,
    lipschitz_constants,
    lipschitz_norm,
)
from .oracle import monte_carlo_moments, replication_rng
from .outcome import BatchEvaluator, sample_gaussian_model

CSV_COLUMNS = (
    "family", "N", "density_or_pow", "m", "gamma", "design", "R", "mse", "log_mse",
    "bias_mc", "se", "bound_bias", "bound_rmse", "seed",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    family: str = "er"                 # er | pa | file
    N: int = 100
    density: float = 0.1               # er only
    pow: float = 1.0                   # pa only
    m: int = 2                         # pa only
    graph_file: str | None = None      # file only
    graph_seed: int = 0
    graph_repeats: int = 1
    designs: tuple[str, ...] = ("crd", "pbd")
    interference: str = "linear"       # linear | normalized | threshold-count:K | threshold-fraction[:F] | table:PATH
    gamma: float = 1.0
    model_seed: int = 0
    redraw_model: bool = False
    replications: int = 10000
    seed: int = 0
    p: int = 1
    r: int = 2
    K1: float = 1.0
    K2: float = 1.0
    types_file: str | None = None
    workers: int = 1
    output: str | None = None

    def validate(self) -> None:
        if self.family not in ("er", "pa", "file"):
            raise ConfigError(f"family must be er, pa or file, got {self.family!r}")
        if self.family == "file":
            if not self.graph_file or not Path(self.graph_file).exists():
                raise ConfigError(f"graph file {self.graph_file!r} does not exist")
        if self.types_file and not Path(self.types_file).exists():
            raise ConfigError(f"types file {self.types_file!r} does not exist")
        if self.N < 2:
            raise ConfigError("N must be at least 2")
        if not 0 <= self.density <= 1:
            raise ConfigError("density must lie in [0, 1]")
        if self.pow < 0 or self.m < 1:
            raise ConfigError("need pow >= 0 and m >= 1")
        if self.replications < 2:
            raise ConfigError("need at least 2 replications")
        if self.graph_repeats < 1 or self.workers < 1:
            raise ConfigError("graph_repeats and workers must be positive")
        if not 1 <= self.p < self.r:
            raise ConfigError("need 1 <= p < r")
        bad = [d for d in self.designs if d not in DESIGNS]
        if bad or not self.designs:
            raise ConfigError(f"unknown designs {bad}; choose from {DESIGNS}")
        if self.K1 < 0 or self.K2 <= 0:
            raise ConfigError("need K1 >= 0 and K2 > 0")
        make_spec(self.interference, self.gamma)


def make_spec(kind: str, gamma: float):
    name, _, arg = kind.partition(":")
    name = name.strip().lower()
    try:
        if name == "linear":
            return Linear(gamma)
        if name in ("normalized", "normalized-linear"):
            return NormalizedLinear(gamma)
        if name == "threshold-count":
            return ThresholdCount(gamma, int(arg))
        if name == "threshold-fraction":
            return ThresholdFraction(gamma, float(arg) if arg else 0.5)
        if name == "table":
            base = SymmetricTable.read(arg)
            return SymmetricTable({u: gamma * v for u, v in base.table.items()})
    except (ValueError, OSError) as exc:
        raise ConfigError(f"bad interference {kind!r}: {exc}") from None
    raise ConfigError(f"unknown interference {kind!r}")


def load_config(path, **overrides) -> RunConfig:
    """Read a JSON object whose keys are :class:`RunConfig` field names."""
    data = json.loads(Path(path).read_text())
    names = {f.name for f in fields(RunConfig)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "designs" in data:
        data["designs"] = tuple(data["designs"])
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**data)


def build_run_graph(cfg: RunConfig, repeat: int = 0) -> Graph:
    seed = cfg.graph_seed + repeat
    if cfg.family == "er":
        return gen_erdos_renyi(cfg.N, cfg.density, seed)
    if cfg.family == "pa":
        return gen_preferential_attachment(cfg.N, cfg.pow, cfg.m, seed)
    return read_edgelist(cfg.graph_file)


def _redraw_mse(sampler, g: Graph, ecfg: ExperimentConfig, spec, R: int, seed: int):
    """Fresh ``x, t`` per replication; error measured against that draw's mean effect."""
    errs = np.empty(R)
    for rep in range(R):
        rng = replication_rng(seed, rep)
        model = sample_gaussian_model(g, spec, rng)
        ev = BatchEvaluator(model, g, ecfg)
        z = sampler(rng)
        xi, ideal = ev.evaluate(z[None, :])
        errs[rep] = float(xi[0] + ideal[0]) - ev.tbar
    sq = errs**2
    mse = math.fsum(sq) / R
    se = math.sqrt(math.fsum((sq - mse) ** 2) / (R - 1) / R)
    return mse, math.fsum(errs) / R, se


def run_experiment(cfg: RunConfig) -> list[dict]:
    """One row per (graph repeat, design)."""
    cfg.validate()
    spec = make_spec(cfg.interference, cfg.gamma)
    rows = []
    for rep in range(cfg.graph_repeats):
        g = build_run_graph(cfg, rep)
        if g.num_vertices % cfg.r:
            raise ConfigError(f"{g.num_vertices} vertices are not divisible by r={cfg.r}")
        ecfg = ExperimentConfig.for_graph(g, cfg.p, cfg.r)
        types = read_type_partition(cfg.types_file) if cfg.types_file else None
        model = sample_gaussian_model(g, spec, cfg.model_seed)
        bounds_ok = not g.has_isolated_vertices
        if bounds_ok:
            k_v = lipschitz_constants(spec, g)
            budget = LipschitzBudget(cfg.K1, cfg.K2)
            lip = lipschitz_norm(spec, g, budget)
        for design in cfg.designs:
            sampler = make_sampler(design, g, ecfg, types)
            if cfg.redraw_model:
                mse, bias, se = _redraw_mse(sampler, g, ecfg, spec, cfg.replications, cfg.seed)
            else:
                mc = monte_carlo_moments(sampler, model, g, ecfg, cfg.replications, cfg.seed, cfg.workers)
                mse, se = mc.mse, mc.se_mse
                bias = mc.mean_estimator - float(np.mean(model.t))
            bound_bias = bound_rmse = None
            if bounds_ok:
                tp = None
                if design == "typed":
                    tp = types if types is not None else degree_type_partition(g, cfg.r)
                    lip_d = lipschitz_norm(spec, g, LipschitzBudget(0.0, cfg.K2), tp)
                else:
                    lip_d = lip
                P = partition_by_degree(g, ecfg) if design == "pbd" else None
                rep_ = report_for_design(g, design, ecfg, k_v, cfg.K1, cfg.K2, lip_d, P=P, types=tp)
                bound_bias = rep_.bias_bound
                bound_rmse = None if math.isnan(rep_.rmse_bound) else rep_.rmse_bound
            rows.append(dict(
                family=cfg.family,
                N=g.num_vertices,
                density_or_pow=cfg.density if cfg.family == "er" else (cfg.pow if cfg.family == "pa" else None),
                m=cfg.m if cfg.family == "pa" else None,
                gamma=cfg.gamma,
                design=design,
                R=cfg.replications,
                mse=mse,
                log_mse=math.log(mse) if mse > 0 else -math.inf,
                bias_mc=bias,
                se=se,
                bound_bias=bound_bias,
                bound_rmse=bound_rmse,
                seed=cfg.graph_seed + rep,
            ))
    return rows


@dataclass(frozen=True)
class SweepConfig:
    """Parameter grid; every combination becomes one :class:`RunConfig` cell.

    Axes left as ``None`` take the single value from ``base``.  Cells are
    ordered with ``gamma`` varying fastest, then ``m``, ``pow``/``density``, ``N``.
    """

    base: RunConfig = field(default_factory=RunConfig)
    N: tuple[int, ...] | None = None
    density: tuple[float, ...] | None = None
    pow: tuple[float, ...] | None = None
    m: tuple[int, ...] | None = None
    gamma: tuple[float, ...] | None = None
    max_cells: int = 10000

    def _axis(self, name: str, used: bool) -> tuple:
        vals = getattr(self, name)
        return tuple(vals) if used and vals else (getattr(self.base, name),)

    def cells(self) -> list[RunConfig]:
        fam = self.base.family
        axes = itertools.product(
            self._axis("N", fam != "file"),
            self._axis("density", fam == "er"),
            self._axis("pow", fam == "pa"),
            self._axis("m", fam == "pa"),
            self._axis("gamma", True),
        )
        b = self.base
        out = [replace(b, N=N, density=d, pow=pw, m=m, gamma=gm, workers=1) for N, d, pw, m, gm in axes]
        if len(out) > self.max_cells:
            raise ConfigError(f"grid has {len(out)} cells, more than max_cells={self.max_cells}")
        return out


def load_sweep(path) -> SweepConfig:
    """JSON with RunConfig keys; list values for N/density/pow/m/gamma form the grid."""
    data = json.loads(Path(path).read_text())
    grid = {}
    for key in ("N", "density", "pow", "m", "gamma"):
        if isinstance(data.get(key), list):
            grid[key] = tuple(data.pop(key))
    max_cells = data.pop("max_cells", 10000)
    names = {f.name for f in fields(RunConfig)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "designs" in data:
        data["designs"] = tuple(data["designs"])
    return SweepConfig(base=RunConfig(**data), max_cells=max_cells, **grid)


def sweep(sc: SweepConfig, workers: int | None = None) -> list[dict]:
    """Run every grid cell; rows come back in grid order whatever the thread count."""
    cells = sc.cells()
    for c in cells:
        c.validate()
    workers = workers or sc.base.workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run_experiment, cells))
    else:
        results = [run_experiment(c) for c in cells]
    return [row for rows in results for row in rows]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows: list[dict], path) -> None:
    Path(path).write_text(rows_to_csv(rows))


__all__ = [
    "RunConfig", "SweepConfig", "ConfigError", "run_experiment", "sweep", "rows_to_csv",
    "write_csv", "load_config", "load_sweep", "make_spec", "CSV_COLUMNS",
]
